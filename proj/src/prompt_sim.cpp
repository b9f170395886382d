#include "promptseg/prompt_sim.hpp"

#include <set>
#include <utility>

#include "promptseg/error.hpp"
#include "promptseg/metrics.hpp"
#include "promptseg/raster.hpp"

namespace promptseg {

PromptMode parse_prompt_mode(const std::string& name) {
  if (name == "point") return PromptMode::point;
  if (name == "box") return PromptMode::box;
  if (name == "everything") return PromptMode::everything;
  if (name == "mask") return PromptMode::mask;
  if (name == "icl") return PromptMode::icl;
  throw ConfigError("unknown prompt mode '" + name + "' (expected point, box, everything, mask or icl)");
}

const char* prompt_mode_name(PromptMode mode) {
  switch (mode) {
    case PromptMode::point: return "point";
    case PromptMode::box: return "box";
    case PromptMode::everything: return "everything";
    case PromptMode::mask: return "mask";
    case PromptMode::icl: return "icl";
  }
  return "?";
}

const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::iou_reached: return "iou_reached";
    case StopReason::click_limit: return "click_limit";
    case StopReason::no_candidate: return "no_candidate";
  }
  return "?";
}

PointList ClickLog::points() const {
  PointList out;
  out.reserve(clicks.size());
  for (const auto& c : clicks) out.push_back(c.point);
  return out;
}

namespace {

using Coord = std::pair<Index, Index>;

// Deepest pixel of `region` that is not in `taken`; row-major first on ties.
std::optional<PointPrompt> deepest_free(const BinaryMask& region, PointLabel label, const std::set<Coord>& taken) {
  if (region.empty()) return std::nullopt;
  const Grid<double> dist = distance_to_background(region);
  std::optional<PointPrompt> best;
  double best_d = 0.0;
  for (Index y = 0; y < region.height(); ++y)
    for (Index x = 0; x < region.width(); ++x) {
      const double d = dist(y, x);
      if (d > best_d && !taken.count({x, y})) {
        best_d = d;
        best = PointPrompt{x, y, label};
      }
    }
  return best;
}

void require_gt(const BinaryMask& gt, const char* what) {
  if (gt.empty()) throw PreconditionError(std::string(what) + ": ground truth is empty");
}

}  // namespace

ClickRun simulate_clicks(const std::string& image, const BinaryMask& gt, SegmenterHandle& seg, const EvalConfig& cfg,
                         const ClickAdjust& adjust) {
  require_gt(gt, "simulate_clicks");
  ClickRun run{BinaryMask(gt.width(), gt.height()), {}};
  std::set<Coord> taken_fg, taken_bg;
  PointList sent;

  while (static_cast<int>(sent.size()) < cfg.click_limit) {
    const BinaryMask fn = gt - run.prediction;
    const BinaryMask fp = run.prediction - gt;
    const bool prefer_fn = fn.count() >= fp.count();

    std::optional<PointPrompt> click = prefer_fn ? deepest_free(fn, PointLabel::foreground, taken_fg)
                                                 : deepest_free(fp, PointLabel::background, taken_bg);
    if (!click)
      click = prefer_fn ? deepest_free(fp, PointLabel::background, taken_bg)
                        : deepest_free(fn, PointLabel::foreground, taken_fg);
    if (!click) {
      run.log.stop_reason = StopReason::no_candidate;
      return run;
    }
    (click->label == PointLabel::foreground ? taken_fg : taken_bg).insert({click->x, click->y});

    const PointPrompt p = adjust ? adjust(*click) : *click;
    sent.push_back(p);
    run.prediction = best_mask(seg.segment(image, gt.width(), gt.height(), Prompt::points(sent)));
    const double overlap = iou(run.prediction, gt).value;
    run.log.clicks.push_back({p, overlap});
    if (overlap >= cfg.iou_stop) {
      run.log.stop_reason = StopReason::iou_reached;
      return run;
    }
  }
  run.log.stop_reason = StopReason::click_limit;
  return run;
}

BoxList ideal_boxes(const BinaryMask& gt, int connectivity) {
  return component_boxes(connected_components(gt, connectivity));
}

BinaryMask run_boxes(const std::string& image, Index width, Index height, const BoxList& boxes, SegmenterHandle& seg) {
  BinaryMask out(width, height);
  for (const auto& b : boxes) {
    const BinaryMask reply = best_mask(seg.segment(image, width, height, Prompt::boxes({b})));
    out = out | reply;
  }
  return out;
}

BinaryMask box_prompt_run(const std::string& image, const BinaryMask& gt, SegmenterHandle& seg, int connectivity) {
  require_gt(gt, "box_prompt_run");
  return run_boxes(image, gt.width(), gt.height(), ideal_boxes(gt, connectivity), seg);
}

BinaryMask ofs_filter(const std::vector<BinaryMask>& entities, const BinaryMask& gt, double threshold) {
  BinaryMask out(gt.width(), gt.height());
  for (const auto& e : entities) {
    require_same_shape(e, gt, "ofs_filter");
    if (overlap_fraction(e, gt) > threshold) out = out | e;
  }
  return out;
}

std::vector<BinaryMask> reply_entities(const SegmentResponse& response) {
  return std::visit(
      [](const auto& body) -> std::vector<BinaryMask> {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, BinaryMask>) {
          return {body};
        } else if constexpr (std::is_same_v<T, std::vector<Candidate>>) {
          std::vector<BinaryMask> out;
          for (const auto& c : body) out.push_back(c.mask);
          return out;
        } else {
          return body;
        }
      },
      response.body);
}

BinaryMask everything_run(const std::string& image, const BinaryMask& gt, SegmenterHandle& seg, const EvalConfig& cfg) {
  const auto reply = seg.segment(image, gt.width(), gt.height(), Prompt::everything());
  return ofs_filter(reply_entities(reply), gt, cfg.ofs_threshold);
}

BinaryMask mask_prompt_run(const std::string& image, const BinaryMask& prompt_mask, SegmenterHandle& seg) {
  if (prompt_mask.empty()) throw PreconditionError("mask_prompt_run: prompt mask is empty");
  return best_mask(seg.segment(image, prompt_mask.width(), prompt_mask.height(), Prompt::mask(prompt_mask)));
}

std::vector<ContextExemplar> icl_context(const DatasetManifest& train, std::size_t k) {
  if (train.samples.size() < k)
    throw PreconditionError("icl_context: training set '" + train.name + "' has " +
                            std::to_string(train.samples.size()) + " samples, " + std::to_string(k) + " requested");
  std::vector<ContextExemplar> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i)
    out.push_back({train.samples[i].image.string(), load_mask(train.samples[i].mask)});
  return out;
}

BinaryMask icl_run(const std::string& image, const BinaryMask& gt, SegmenterHandle& seg, const EvalConfig& cfg,
                   const std::vector<ContextExemplar>& context) {
  Prompt prompt = Prompt::everything();
  prompt.context = context;
  const auto reply = seg.segment(image, gt.width(), gt.height(), prompt);
  if (reply.is_entities()) return ofs_filter(reply_entities(reply), gt, cfg.ofs_threshold);
  return best_mask(reply);
}

ImagePrediction predict_image(PromptMode mode, const std::string& image, const BinaryMask& gt, SegmenterHandle& seg,
                              const EvalConfig& cfg, const std::vector<ContextExemplar>& context) {
  switch (mode) {
    case PromptMode::point: {
      auto run = simulate_clicks(image, gt, seg, cfg);
      return {std::move(run.prediction), std::move(run.log)};
    }
    case PromptMode::box: return {box_prompt_run(image, gt, seg, cfg.connectivity), std::nullopt};
    case PromptMode::everything: return {everything_run(image, gt, seg, cfg), std::nullopt};
    case PromptMode::mask: return {mask_prompt_run(image, gt, seg), std::nullopt};
    case PromptMode::icl: return {icl_run(image, gt, seg, cfg, context), std::nullopt};
  }
  throw PreconditionError("predict_image: unknown mode");
}

}  // namespace promptseg
