#pragma once

// Repeat-trial robustness runs: perturb the ideal prompt of a sample, predict, score.

#include <string>
#include <vector>

#include "promptseg/perturb.hpp"
#include "promptseg/prompt_sim.hpp"
#include "promptseg/report.hpp"

namespace promptseg {

struct SampleInput {
  std::string id;
  std::string image;
  BinaryMask gt;
};

/// The ideal prompt of one sample and the scores it earned.
struct IdealBaseline {
  Prompt prompt;
  std::vector<MetricValue> metrics;
};

/// Runs the unperturbed pipeline. Point mode records the simulated click set as the ideal prompt.
/// Only point, box and mask modes carry a perturbable prompt; others throw ConfigError.
IdealBaseline ideal_baseline(const SampleInput& sample, PromptMode mode, SegmenterHandle& seg, const EvalConfig& cfg);

struct SampleTrials {
  std::string sample_id;
  std::vector<TrialStats> stats;                    ///< one per metric, empty when no trial completed
  std::vector<std::vector<MetricValue>> per_trial;  ///< completed trials in order
  std::vector<PerturbEvent> events;
  bool partial = false;  ///< a segmenter failure cut the trial set short
  std::string failure;
};

/// Trial t draws from Rng::substream(cfg.rng_seed, t, sample id), so results do not depend on
/// scheduling. Transport and protocol failures stop the set and flag it partial.
SampleTrials run_trials(const SampleInput& sample, PromptMode mode, SegmenterHandle& seg, const EvalConfig& cfg,
                        const IdealBaseline& ideal);

/// Dataset-level rows: for each trial, the mean over samples; then mean / std / delta of those
/// against the mean ideal score.
std::vector<TrialStats> summarize_dataset_trials(const std::vector<SampleTrials>& samples,
                                                 const std::vector<IdealBaseline>& ideals);

}  // namespace promptseg
