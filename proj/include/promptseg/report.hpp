#pragma once

#include <map>
#include <string>
#include <vector>

#include "promptseg/config.hpp"
#include "promptseg/metrics.hpp"

namespace promptseg {

struct SampleMetrics {
  std::string sample_id;
  std::vector<MetricValue> values;
};

/// Per-sample values plus their per-metric arithmetic means.
struct MetricReport {
  std::string dataset;
  std::vector<SampleMetrics> per_sample;
  std::map<std::string, double> aggregates;
  /// Metrics defined only over a whole dataset (I-/P-level ranking metrics, P-PRO).
  std::vector<MetricValue> dataset_level;
  std::vector<std::string> warnings;
};

/// Builds a report from per-sample values (in the given order) and computes the means.
/// Throws PreconditionError on duplicate sample ids.
MetricReport make_report(std::string dataset, std::vector<SampleMetrics> samples);

/// Metric names present in a report, in first-appearance order.
std::vector<std::string> metric_names_of(const MetricReport& report);

enum class AggregationScheme { per_dataset_mean, cross_dataset_mean };

/// per_dataset_mean merges reports sharing a dataset name (first-appearance order) and
/// returns one report per dataset. cross_dataset_mean returns a single report whose
/// samples are the datasets and whose aggregates are the unweighted means of dataset means.
std::vector<MetricReport> aggregate(const std::vector<MetricReport>& reports, AggregationScheme scheme);

/// Scores one prediction against its ground truth for each requested per-sample metric.
template <typename Scalar>
std::vector<MetricValue> score_sample(const ScoreMapT<Scalar>& pred, const BinaryMask& gt, const EvalConfig& cfg) {
  std::vector<MetricValue> out;
  const BinaryMask hard = binarize(pred, cfg.binarize_threshold);
  for (const auto& name : cfg.metrics) {
    if (name == metric_names::kMAE) out.push_back(mae(pred, gt));
    else if (name == metric_names::kSm) out.push_back(s_measure(pred, gt, cfg.s_measure_alpha));
    else if (name == metric_names::kWFm) out.push_back(weighted_f_measure(pred, gt, cfg.wfm_beta2, cfg.wfm_sigma));
    else if (name == metric_names::kBER) out.push_back(ber(hard, gt));
    else if (name == metric_names::kIoU) out.push_back(iou(hard, gt));
    else if (name == metric_names::kDice) out.push_back(dice(hard, gt));
  }
  return out;
}

inline std::vector<MetricValue> score_sample(const BinaryMask& pred, const BinaryMask& gt, const EvalConfig& cfg) {
  return score_sample(lift<double>(pred), gt, cfg);
}

/// True for names computed per sample; the rest (I-AUROC, P-PRO, ...) are dataset-level.
bool is_per_sample_metric(const std::string& name);
/// Throws ConfigError for names that are neither.
void check_metric_names(const std::vector<std::string>& names);

/// Dataset-level anomaly metrics over aligned prediction maps and ground truths. The
/// image-level score of a map is its maximum pixel; an image is anomalous iff its gt is
/// nonempty. Undefined metrics are omitted and explained in `warnings`.
std::vector<MetricValue> dataset_level_metrics(const std::vector<ScoreMap>& maps, const std::vector<BinaryMask>& gts,
                                               const EvalConfig& cfg, std::vector<std::string>& warnings);

}  // namespace promptseg
