#pragma once

// Ideal prompts synthesized from ground truth, and the single-image prediction modes.

#include <functional>
#include <string>
#include <vector>

#include "promptseg/config.hpp"
#include "promptseg/core.hpp"
#include "promptseg/dataset.hpp"
#include "promptseg/segmenter.hpp"

namespace promptseg {

enum class PromptMode { point, box, everything, mask, icl };

PromptMode parse_prompt_mode(const std::string& name);
const char* prompt_mode_name(PromptMode mode);

enum class StopReason {
  iou_reached,
  click_limit,
  no_candidate,  ///< every error pixel already carries a click of its label
};

const char* stop_reason_name(StopReason r);

struct ClickRecord {
  PointPrompt point;
  double iou_after = 0.0;
};

struct ClickLog {
  std::vector<ClickRecord> clicks;
  StopReason stop_reason = StopReason::click_limit;

  PointList points() const;
};

struct ClickRun {
  BinaryMask prediction;
  ClickLog log;
};

/// Applied to each synthesized click before it is sent (identity when empty).
using ClickAdjust = std::function<PointPrompt(const PointPrompt&)>;

/// Picks the larger of FP / FN (FN on ties), clicks its deepest pixel not yet clicked with the
/// same label, and resends the accumulated clicks until IoU >= iou_stop or click_limit is hit.
ClickRun simulate_clicks(const std::string& image, const BinaryMask& gt, SegmenterHandle& seg, const EvalConfig& cfg,
                         const ClickAdjust& adjust = {});

/// One box per connected component of gt.
BoxList ideal_boxes(const BinaryMask& gt, int connectivity = 8);

/// Sends each box on its own and ORs the replies.
BinaryMask run_boxes(const std::string& image, Index width, Index height, const BoxList& boxes, SegmenterHandle& seg);

BinaryMask box_prompt_run(const std::string& image, const BinaryMask& gt, SegmenterHandle& seg, int connectivity = 8);

/// Union of the entities lying more than `threshold` inside gt.
BinaryMask ofs_filter(const std::vector<BinaryMask>& entities, const BinaryMask& gt, double threshold);

/// Entities of a reply; a single mask or a candidate list count as entities too.
std::vector<BinaryMask> reply_entities(const SegmentResponse& response);

BinaryMask everything_run(const std::string& image, const BinaryMask& gt, SegmenterHandle& seg, const EvalConfig& cfg);

/// Forwards a nonempty mask prompt and returns the reply.
BinaryMask mask_prompt_run(const std::string& image, const BinaryMask& prompt_mask, SegmenterHandle& seg);

/// The first k samples of a training manifest in native order, with their masks.
std::vector<ContextExemplar> icl_context(const DatasetManifest& train, std::size_t k);

/// Everything prompt carrying the exemplars. A mask reply is used as is; entities go through OFS.
BinaryMask icl_run(const std::string& image, const BinaryMask& gt, SegmenterHandle& seg, const EvalConfig& cfg,
                   const std::vector<ContextExemplar>& context);

struct ImagePrediction {
  BinaryMask mask;
  std::optional<ClickLog> clicks;
};

/// Dispatches one image through the selected mode. The mask mode prompts with gt itself.
ImagePrediction predict_image(PromptMode mode, const std::string& image, const BinaryMask& gt, SegmenterHandle& seg,
                              const EvalConfig& cfg, const std::vector<ContextExemplar>& context = {});

}  // namespace promptseg
