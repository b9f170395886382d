#pragma once

// Report files. Column and key order is fixed, numbers are written in shortest
// round-trip form, so identical inputs always produce identical bytes.
//
// per-sample CSV header:  dataset,sample_id,metric,value,polarity,flag
// trial CSV header:       dataset,sample_id,metric,polarity,mean,std,n_trials,ideal,delta,delta_pct,effect
//   (dataset-level summary rows use sample_id "*")

#include <filesystem>
#include <string>
#include <vector>

#include "promptseg/perturb.hpp"
#include "promptseg/report.hpp"

namespace promptseg {

enum class ReportFormat { csv, json };

inline constexpr const char* kSampleCsvHeader = "dataset,sample_id,metric,value,polarity,flag";
inline constexpr const char* kTrialCsvHeader =
    "dataset,sample_id,metric,polarity,mean,std,n_trials,ideal,delta,delta_pct,effect";

struct TrialRow {
  std::string dataset;
  std::string sample_id;
  TrialStats stats;
};

/// "+1.250%" / "-2.500%" / "n/a".
std::string format_delta_pct(const std::optional<double>& delta);

std::string render_metric_csv(const std::vector<MetricReport>& reports);
/// Per-dataset aggregates, dataset-level metrics, warnings, plus the cross-dataset mean when
/// more than one dataset is present.
std::string render_metric_json(const std::vector<MetricReport>& reports);

std::string render_trial_csv(const std::vector<TrialRow>& rows);
std::string render_trial_json(const std::vector<TrialRow>& rows, const std::vector<PerturbEvent>& events);

/// Throws PreconditionError on an empty report and IoError when the path is unwritable.
void write_report(const std::vector<MetricReport>& reports, ReportFormat format, const std::filesystem::path& path);
void write_report(const std::vector<TrialRow>& rows, const std::vector<PerturbEvent>& events, ReportFormat format,
                  const std::filesystem::path& path);

/// Parses a per-sample CSV back into one report per dataset (first-appearance order).
std::vector<MetricReport> read_metric_csv(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace promptseg
