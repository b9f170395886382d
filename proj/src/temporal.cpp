#include "promptseg/temporal.hpp"

#include <algorithm>
#include <set>

#include "promptseg/error.hpp"
#include "promptseg/raster.hpp"

namespace promptseg {

SequenceStrategy parse_sequence_strategy(const std::string& name) {
  if (name == "per_frame_gt") return SequenceStrategy::per_frame_gt;
  if (name == "propagated_point") return SequenceStrategy::propagated_point;
  if (name == "propagated_box") return SequenceStrategy::propagated_box;
  if (name == "multiframe") return SequenceStrategy::multiframe;
  if (name == "bidirectional") return SequenceStrategy::bidirectional;
  throw ConfigError("unknown strategy '" + name +
                    "' (expected per_frame_gt, propagated_point, propagated_box, multiframe or bidirectional)");
}

const char* sequence_strategy_name(SequenceStrategy s) {
  switch (s) {
    case SequenceStrategy::per_frame_gt: return "per_frame_gt";
    case SequenceStrategy::propagated_point: return "propagated_point";
    case SequenceStrategy::propagated_box: return "propagated_box";
    case SequenceStrategy::multiframe: return "multiframe";
    case SequenceStrategy::bidirectional: return "bidirectional";
  }
  return "?";
}

PromptSchedule multiframe_schedule(std::size_t len, int k) {
  if (k < 1) throw PreconditionError("multiframe_schedule: k must be >= 1");
  if (len < static_cast<std::size_t>(k))
    throw PreconditionError("multiframe_schedule: sequence of " + std::to_string(len) + " frames is shorter than k = " +
                            std::to_string(k));
  std::set<std::size_t> used{0};
  for (int i = 1; i < k; ++i) {
    std::size_t idx = len * static_cast<std::size_t>(i) / static_cast<std::size_t>(k);
    while (used.count(idx)) idx = (idx + 1) % len;
    used.insert(idx);
  }
  return {std::vector<std::size_t>(used.begin(), used.end()), k};
}

std::optional<Prompt> prompt_from_mask(const BinaryMask& mask, PromptMode mode, int connectivity) {
  if (mask.empty()) return std::nullopt;
  switch (mode) {
    case PromptMode::point: {
      const auto cc = connected_components(mask, connectivity);
      PointList points;
      for (int l = 1; l <= cc.count; ++l) points.push_back(deepest_point(cc.component(l)));
      return Prompt::points(std::move(points));
    }
    case PromptMode::box: return Prompt::boxes(ideal_boxes(mask, connectivity));
    case PromptMode::mask: return Prompt::mask(mask);
    default:
      throw ConfigError(std::string("sequence prompts must be point, box or mask, not ") + prompt_mode_name(mode));
  }
}

PromptPropagator::PromptPropagator(PromptMode mode, Prompt initial, int connectivity)
    : mode_(mode), initial_(std::move(initial)), connectivity_(connectivity) {
  if (mode_ != PromptMode::point && mode_ != PromptMode::box)
    throw ConfigError("propagated prompts must be point or box");
}

Prompt PromptPropagator::next(const BinaryMask& prev) {
  if (!prev.empty()) {
    last_ = mode_ == PromptMode::point ? Prompt::points({deepest_point(prev)})
                                       : Prompt::boxes(ideal_boxes(prev, connectivity_));
    return *last_;
  }
  return last_ ? *last_ : initial_;
}

namespace {

BinaryMask predict_with(const std::string& image, Index w, Index h, const Prompt& prompt, SegmenterHandle& seg) {
  if (const auto* boxes = std::get_if<BoxList>(&prompt.kind)) return run_boxes(image, w, h, *boxes, seg);
  return best_mask(seg.segment(image, w, h, prompt));
}

std::vector<std::string> frame_refs(const SequenceRecord& seq) {
  std::vector<std::string> out;
  for (const auto& f : seq.frames()) out.push_back(f.image);
  return out;
}

void fill_rest(SequenceRun& run, std::size_t n, Index w, Index h) {
  while (run.predictions.size() < n) run.predictions.emplace_back(w, h);
}

template <typename Body>
void guarded(SequenceRun& run, const SequenceRecord& seq, Body&& body) {
  try {
    body();
  } catch (const TransportError& e) {
    run.partial = true;
    run.failure = e.what();
  } catch (const ProtocolError& e) {
    run.partial = true;
    run.failure = e.what();
  }
  fill_rest(run, seq.size(), seq.width(), seq.height());
}

void run_per_frame(const SequenceRecord& seq, PromptMode mode, SegmenterHandle& seg, const EvalConfig& cfg,
                   SequenceRun& run) {
  if (mode == PromptMode::mask) throw ConfigError("mask prompts are only given on scheduled frames (use multiframe)");
  const Index w = seq.width(), h = seq.height();
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto& f = seq.frames()[i];
    if (f.gt.empty()) {
      run.warnings.push_back(seq.id() + ": frame " + std::to_string(i) + " has empty ground truth; predicted empty");
      run.predictions.emplace_back(w, h);
      continue;
    }
    run.prompted_frames.push_back(i);
    run.predictions.push_back(predict_image(mode, f.image, f.gt, seg, cfg).mask);
  }
}

void run_propagated(const SequenceRecord& seq, PromptMode mode, SegmenterHandle& seg, const EvalConfig& cfg,
                    SequenceRun& run) {
  const Index w = seq.width(), h = seq.height();
  const auto& first = seq.frames().front();
  if (first.gt.empty()) throw PreconditionError(seq.id() + ": propagation needs ground truth on frame 0");
  run.prompted_frames.push_back(0);

  Prompt initial = Prompt::everything();
  if (mode == PromptMode::point) {
    auto clicks = simulate_clicks(first.image, first.gt, seg, cfg);
    initial = Prompt::points(clicks.log.points());
    run.predictions.push_back(std::move(clicks.prediction));
  } else {
    initial = Prompt::boxes(ideal_boxes(first.gt, cfg.connectivity));
    run.predictions.push_back(predict_with(first.image, w, h, initial, seg));
  }

  PromptPropagator propagator(mode, std::move(initial), cfg.connectivity);
  for (std::size_t i = 1; i < seq.size(); ++i) {
    const Prompt prompt = propagator.next(run.predictions.back());
    run.predictions.push_back(predict_with(seq.frames()[i].image, w, h, prompt, seg));
  }
}

void run_multiframe(const SequenceRecord& seq, int k, PromptMode mode, SegmenterHandle& seg, const EvalConfig& cfg,
                    SequenceRun& run) {
  const auto schedule = multiframe_schedule(seq.size(), k);
  std::vector<ScheduledPrompt> prompts;
  for (std::size_t idx : schedule.frames) {
    auto p = prompt_from_mask(seq.frames()[idx].gt, mode, cfg.connectivity);
    if (!p) {
      run.warnings.push_back(seq.id() + ": scheduled frame " + std::to_string(idx) +
                             " has empty ground truth; prompt omitted");
      continue;
    }
    run.prompted_frames.push_back(idx);
    prompts.push_back({idx, std::move(*p)});
  }
  if (prompts.empty()) throw PreconditionError(seq.id() + ": no scheduled frame has ground truth");
  run.predictions = seg.segment_sequence(frame_refs(seq), seq.width(), seq.height(), prompts);
}

}  // namespace

SequenceRun run_video(const SequenceRecord& seq, const StrategySpec& strategy, SegmenterHandle& seg,
                      const EvalConfig& cfg) {
  SequenceRun run;
  guarded(run, seq, [&] {
    switch (strategy.kind) {
      case SequenceStrategy::per_frame_gt: run_per_frame(seq, strategy.mode, seg, cfg, run); break;
      case SequenceStrategy::propagated_point: run_propagated(seq, PromptMode::point, seg, cfg, run); break;
      case SequenceStrategy::propagated_box: run_propagated(seq, PromptMode::box, seg, cfg, run); break;
      case SequenceStrategy::multiframe: run_multiframe(seq, strategy.k, strategy.mode, seg, cfg, run); break;
      case SequenceStrategy::bidirectional:
        throw ConfigError("bidirectional inference applies to volumes, not videos");
    }
  });
  return run;
}

std::size_t anchor_slice(const SequenceRecord& vol) {
  std::size_t best = 0;
  Index best_area = 0;
  for (std::size_t i = 0; i < vol.size(); ++i) {
    const Index area = vol.frames()[i].gt.count();
    if (area > best_area) {
      best_area = area;
      best = i;
    }
  }
  if (best_area == 0) throw PreconditionError(vol.id() + ": every slice is background; no anchor");
  return best;
}

SequenceRun bidirectional_3d(const SequenceRecord& vol, int k, PromptMode mode, SegmenterHandle& seg,
                             const EvalConfig& cfg) {
  const std::size_t n = vol.size();
  const std::size_t anchor = anchor_slice(vol);
  const auto schedule = multiframe_schedule(n, k);

  SequenceRun run;
  run.anchor = anchor;
  std::vector<std::string> fwd_refs, bwd_refs;
  for (std::size_t i = anchor; i < n; ++i) fwd_refs.push_back(vol.frames()[i].image);
  for (std::size_t i = anchor + 1; i-- > 0;) bwd_refs.push_back(vol.frames()[i].image);

  const auto anchor_prompt = *prompt_from_mask(vol.frames()[anchor].gt, mode, cfg.connectivity);
  std::vector<ScheduledPrompt> fwd{{0, anchor_prompt}}, bwd{{0, anchor_prompt}};
  std::set<std::size_t> prompted{anchor};
  for (std::size_t idx : schedule.frames) {
    if (idx == 0 || idx == anchor) continue;
    auto p = prompt_from_mask(vol.frames()[idx].gt, mode, cfg.connectivity);
    if (!p) {
      run.warnings.push_back(vol.id() + ": scheduled slice " + std::to_string(idx) +
                             " has empty ground truth; prompt omitted");
      continue;
    }
    prompted.insert(idx);
    if (idx > anchor) fwd.push_back({idx - anchor, std::move(*p)});
    else bwd.push_back({anchor - idx, std::move(*p)});
  }
  run.prompted_frames.assign(prompted.begin(), prompted.end());
  auto by_frame = [](const ScheduledPrompt& a, const ScheduledPrompt& b) { return a.frame < b.frame; };
  std::sort(bwd.begin(), bwd.end(), by_frame);

  guarded(run, vol, [&] {
    const auto forward = seg.segment_sequence(fwd_refs, vol.width(), vol.height(), fwd);
    const auto backward = seg.segment_sequence(bwd_refs, vol.width(), vol.height(), bwd);
    std::vector<BinaryMask> merged;
    merged.reserve(n);
    for (std::size_t i = 0; i < n; ++i) merged.push_back(i >= anchor ? forward[i - anchor] : backward[anchor - i]);
    run.predictions = std::move(merged);
  });
  return run;
}

SequenceRun run_sequence(const SequenceRecord& seq, const StrategySpec& strategy, SegmenterHandle& seg,
                         const EvalConfig& cfg) {
  const bool bidir = strategy.kind == SequenceStrategy::bidirectional;
  if (seq.kind() == SequenceKind::volume && !bidir)
    throw ConfigError(std::string("volume '") + seq.id() + "' needs the bidirectional strategy, not " +
                      sequence_strategy_name(strategy.kind));
  if (seq.kind() == SequenceKind::video && bidir)
    throw ConfigError("bidirectional inference applies to volumes, not video '" + seq.id() + "'");
  return bidir ? bidirectional_3d(seq, strategy.k, strategy.mode, seg, cfg) : run_video(seq, strategy, seg, cfg);
}

}  // namespace promptseg
