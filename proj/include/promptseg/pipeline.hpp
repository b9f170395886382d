#pragma once

// Batch runs over datasets: the code behind the eval, perturb and report subcommands.

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "promptseg/config.hpp"
#include "promptseg/dataset.hpp"
#include "promptseg/oracles.hpp"
#include "promptseg/prompt_sim.hpp"
#include "promptseg/report.hpp"
#include "promptseg/report_io.hpp"
#include "promptseg/temporal.hpp"
#include "promptseg/trials.hpp"

namespace promptseg {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

struct RunSpec {
  std::vector<std::filesystem::path> datasets;
  DatasetKind kind = DatasetKind::image;
  Split split = Split::test;
  PromptMode mode = PromptMode::point;
  SequenceStrategy strategy = SequenceStrategy::per_frame_gt;
  int frames = 1;  ///< k for multiframe / bidirectional
  /// "oracle:<kind>", "stdio:<command>" or "http://host:port".
  std::string segmenter = "oracle:gt";
  EvalConfig cfg;
  std::filesystem::path out = "out";
  int workers = 0;  ///< 0 means one per available core
  std::optional<std::filesystem::path> train_dataset;
};

/// Rejects combinations that cannot run, before any dataset is read or request sent.
void validate_run(const RunSpec& run);

/// Ground-truth lookup by image reference over the scanned manifests; masks load on demand.
GroundTruthSource ground_truth_index(const std::vector<DatasetManifest>& manifests);

using SegmenterFactory = std::function<SegmenterHandle()>;

/// Builds a factory for the endpoint named by `spec`. Oracle endpoints read ground truth through `source`.
SegmenterFactory segmenter_factory(const std::string& spec, GroundTruthSource source, int connectivity = 8);

/// Runs `count` independent jobs over up to `workers` threads, one segmenter session per thread.
/// `primary` serves the first thread; a single-session endpoint keeps everything on it.
/// job(i, seg) must write its result to slot i so the order never depends on scheduling.
void run_pool(std::size_t count, int workers, SegmenterHandle& primary, const SegmenterFactory& make,
              const std::function<void(std::size_t, SegmenterHandle&)>& job);

/// Capabilities the run needs from its endpoint.
std::vector<Capability> run_capabilities(const RunSpec& run);

struct EvalResult {
  std::vector<MetricReport> reports;
  std::vector<std::string> failures;  ///< hard errors, one line each
  std::string segmenter_name;
};

/// Scores every sample (video frames as "<sequence>/<frame>", volumes as one stacked sample) and
/// writes metrics.csv, metrics.json, manifest.json and per-frame sequence outputs under run.out.
EvalResult evaluate(const RunSpec& run, std::ostream& diag);
int cmd_eval(const RunSpec& run, std::ostream& diag);

/// Ideal baseline, then n_trials perturbed runs per sample: trials.csv, trials.json, baseline.csv, manifest.json.
int cmd_perturb(const RunSpec& run, std::ostream& diag);

/// Re-aggregates per-sample CSV files into metrics.csv and metrics.json under `out`; rows of
/// the same dataset are merged, and several datasets also get their unweighted cross-dataset mean.
int cmd_report(const std::vector<std::filesystem::path>& inputs, const std::filesystem::path& out, std::ostream& diag);

}  // namespace promptseg
