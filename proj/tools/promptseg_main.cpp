// promptseg: batch evaluation of promptable segmenters.

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "promptseg/error.hpp"
#include "promptseg/pipeline.hpp"

namespace {

using namespace promptseg;

struct RunArgs {
  std::vector<std::string> datasets;
  std::string kind = "image";
  std::string split = "test";
  std::string mode = "point";
  std::string strategy = "per_frame_gt";
  int frames = 1;
  std::string segmenter;
  std::string config;
  std::string out = "out";
  int workers = 0;
  std::string train_dataset;
  std::map<std::string, std::string> overrides;  // config key -> value, filled by CLI11
};

void add_run_options(CLI::App* sub, RunArgs& a) {
  sub->add_option("--dataset", a.datasets, "Dataset root with images/ and masks/ (repeatable)")->required();
  sub->add_option("--kind", a.kind, "image, video or volume")
      ->check(CLI::IsMember({"image", "video", "volume"}))
      ->capture_default_str();
  sub->add_option("--split", a.split, "test or train")->check(CLI::IsMember({"test", "train"}))->capture_default_str();
  sub->add_option("--mode", a.mode, "point, box, everything, mask or icl")->capture_default_str();
  sub->add_option("--strategy", a.strategy,
                  "per_frame_gt, propagated_point, propagated_box, multiframe or bidirectional")
      ->capture_default_str();
  sub->add_option("--frames", a.frames, "Prompted frames k for multiframe / bidirectional (1, 3, 5)")
      ->capture_default_str();
  sub->add_option("--segmenter", a.segmenter,
                  "oracle:<kind>, stdio:<command> or http://host:port (default: $PROMPTSEG_SEGMENTER)");
  sub->add_option("--config", a.config, "key = value config file");
  sub->add_option("--out", a.out, "Output directory")->capture_default_str();
  sub->add_option("--workers", a.workers, "Parallel workers, 0 = one per core")->capture_default_str();
  sub->add_option("--train-dataset", a.train_dataset, "Training split root for icl exemplars");
  for (const auto& key : config_keys()) sub->add_option("--" + key, a.overrides[key], "Config: " + key);
}

RunSpec to_run_spec(const RunArgs& a) {
  RunSpec run;
  for (const auto& d : a.datasets) run.datasets.emplace_back(d);
  run.kind = parse_dataset_kind(a.kind);
  run.split = a.split == "train" ? Split::train : Split::test;
  run.mode = parse_prompt_mode(a.mode);
  run.strategy = parse_sequence_strategy(a.strategy);
  run.frames = a.frames;
  run.out = a.out;
  run.workers = a.workers;
  if (!a.train_dataset.empty()) run.train_dataset = a.train_dataset;

  // defaults < config file < environment < flags
  if (!a.config.empty()) run.cfg = load_config_file(a.config);
  if (const char* seed = std::getenv("PROMPTSEG_SEED")) set_config_value(run.cfg, "rng_seed", seed);
  for (const auto& [key, value] : a.overrides)
    if (!value.empty()) set_config_value(run.cfg, key, value);

  run.segmenter = a.segmenter;
  if (run.segmenter.empty())
    if (const char* env = std::getenv("PROMPTSEG_SEGMENTER")) run.segmenter = env;
  if (run.segmenter.empty()) throw ConfigError("no segmenter: pass --segmenter or set PROMPTSEG_SEGMENTER");
  return run;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluate promptable segmenters against ground-truth masks."};
  app.require_subcommand(1);

  RunArgs eval_args, perturb_args;
  auto* eval = app.add_subcommand("eval", "Predict and score every sample");
  add_run_options(eval, eval_args);
  auto* perturb = app.add_subcommand("perturb", "Repeat trials with perturbed prompts against the ideal baseline");
  add_run_options(perturb, perturb_args);

  std::vector<std::string> inputs;
  std::string report_out = "out";
  auto* report = app.add_subcommand("report", "Re-aggregate existing per-sample CSV files");
  report->add_option("--input", inputs, "Per-sample metrics.csv (repeatable)")->required();
  report->add_option("--out", report_out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*eval) return cmd_eval(to_run_spec(eval_args), std::cerr);
    if (*perturb) return cmd_perturb(to_run_spec(perturb_args), std::cerr);
    std::vector<std::filesystem::path> paths(inputs.begin(), inputs.end());
    return cmd_report(paths, report_out, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
