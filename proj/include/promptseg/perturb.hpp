#pragma once

// Seeded prompt perturbations and repeat-trial statistics.

#include <optional>
#include <string>
#include <vector>

#include "promptseg/config.hpp"
#include "promptseg/core.hpp"
#include "promptseg/metrics.hpp"
#include "promptseg/raster.hpp"
#include "promptseg/rng.hpp"

namespace promptseg {

/// Shifts x and y independently by uniform integers in [-max_offset, max_offset], then clamps to the image.
PointPrompt jitter_point(const PointPrompt& p, Index width, Index height, Rng& rng, int max_offset = 10);

struct BoxJitter {
  BoxPrompt box;
  bool corrected = false;  ///< a collapsed edge pair was pushed back to a 1-pixel extent
};

/// Moves each edge by an independent uniform integer in [-m, m], m = floor(ratio * shorter side),
/// clamps to the image, and restores a 1-pixel extent if an axis collapsed.
BoxJitter jitter_box(const BoxPrompt& b, Index width, Index height, Rng& rng, double ratio = 0.1);

struct MaskJitter {
  BinaryMask mask;
  MorphOp op = MorphOp::erode;
  int iterations = 0;
  bool fell_back = false;  ///< erosion emptied the mask; the original is returned
};

/// Erodes or dilates (uniform choice) by a uniform iteration count in [1, max_iterations].
/// max_iterations 0 leaves the mask unchanged. Throws PreconditionError on an empty mask.
MaskJitter morph_perturb_mask(const BinaryMask& m, Rng& rng, int max_iterations = 5);

/// A logged degenerate-box correction or emptied-mask fallback.
struct PerturbEvent {
  std::string sample_id;
  int trial = 0;
  std::string what;
};

/// Perturbs every element of a prompt per the config magnitudes; context is carried unchanged.
Prompt perturb_prompt(const Prompt& prompt, Index width, Index height, Rng& rng, const EvalConfig& cfg,
                      std::vector<std::string>& events);

struct TrialStats {
  std::string metric;
  Polarity polarity = Polarity::higher_better;
  double mean = 0.0;
  double stddev = 0.0;  ///< population standard deviation over trials
  int n_trials = 0;
  double ideal = 0.0;
  /// (mean - ideal) / |ideal|; absent when ideal is 0.
  std::optional<double> delta;
};

/// Mean / population std of `trial_values` and relative change against `ideal`.
TrialStats summarize_trials(const std::string& metric, const std::vector<double>& trial_values, double ideal);

enum class Effect { degraded, improved, unchanged };
/// Negative change on a higher-better metric, or positive on a lower-better one, is a degradation.
Effect effect_of(const TrialStats& s);
const char* effect_name(Effect e);

}  // namespace promptseg
