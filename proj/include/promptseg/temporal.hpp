#pragma once

// Video and volume orchestration: per-frame prompting, propagated prompts, multi-frame
// schedules and bidirectional inference from an anchor slice.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "promptseg/prompt_sim.hpp"

namespace promptseg {

enum class SequenceStrategy { per_frame_gt, propagated_point, propagated_box, multiframe, bidirectional };

SequenceStrategy parse_sequence_strategy(const std::string& name);
const char* sequence_strategy_name(SequenceStrategy s);

struct StrategySpec {
  SequenceStrategy kind = SequenceStrategy::per_frame_gt;
  int k = 1;                             ///< prompted frames for multiframe / bidirectional
  PromptMode mode = PromptMode::point;  ///< point, box or mask
};

struct PromptSchedule {
  std::vector<std::size_t> frames;  ///< strictly increasing, starts at 0
  int k = 1;
};

/// {0} and floor(len * i / k) for i in 1..k-1; a collision moves to the next free index.
/// Throws PreconditionError when len < k or k < 1.
PromptSchedule multiframe_schedule(std::size_t len, int k);

/// Prompt of the given mode derived from a mask: one foreground click at the deepest point of
/// each component, one box per component, or the mask itself. nullopt for an empty mask.
std::optional<Prompt> prompt_from_mask(const BinaryMask& mask, PromptMode mode, int connectivity = 8);

/// Carries the fallback chain for propagated prompts.
class PromptPropagator {
 public:
  PromptPropagator(PromptMode mode, Prompt initial, int connectivity = 8);

  /// Point mode: deepest point of prev; box mode: component boxes of prev. An empty prev reuses the
  /// last prompt derived from a nonempty prediction, else the initial prompt.
  Prompt next(const BinaryMask& prev);

 private:
  PromptMode mode_;
  Prompt initial_;
  std::optional<Prompt> last_;
  int connectivity_;
};

struct SequenceRun {
  std::vector<BinaryMask> predictions;     ///< one per frame; empty masks after a failure
  std::vector<std::size_t> prompted_frames;  ///< frames whose ground truth produced a prompt
  std::optional<std::size_t> anchor;
  std::vector<std::string> warnings;
  bool partial = false;
  std::string failure;
};

/// Runs a video with one of per_frame_gt, propagated_point, propagated_box, multiframe.
SequenceRun run_video(const SequenceRecord& seq, const StrategySpec& strategy, SegmenterHandle& seg,
                      const EvalConfig& cfg);

/// Anchor slice: largest ground-truth area, lowest index on ties. Throws on an all-background volume.
std::size_t anchor_slice(const SequenceRecord& vol);

/// Runs anchor..end forward and anchor..0 backward as two sequence requests and merges them,
/// taking the anchor from the forward half.
SequenceRun bidirectional_3d(const SequenceRecord& vol, int k, PromptMode mode, SegmenterHandle& seg,
                             const EvalConfig& cfg);

/// Dispatches on the strategy; bidirectional is only accepted for volumes and the others only for videos.
SequenceRun run_sequence(const SequenceRecord& seq, const StrategySpec& strategy, SegmenterHandle& seg,
                         const EvalConfig& cfg);

}  // namespace promptseg
