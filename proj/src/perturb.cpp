#include "promptseg/perturb.hpp"

#include <algorithm>
#include <cmath>

namespace promptseg {

PointPrompt jitter_point(const PointPrompt& p, Index width, Index height, Rng& rng, int max_offset) {
  const auto dx = rng.uniform_int(-max_offset, max_offset);
  const auto dy = rng.uniform_int(-max_offset, max_offset);
  PointPrompt out = p;
  out.x = std::clamp<Index>(p.x + dx, 0, width - 1);
  out.y = std::clamp<Index>(p.y + dy, 0, height - 1);
  return out;
}

BoxJitter jitter_box(const BoxPrompt& b, Index width, Index height, Rng& rng, double ratio) {
  const Index shorter = std::min(b.box_width(), b.box_height());
  const auto m = static_cast<std::int64_t>(std::floor(ratio * static_cast<double>(shorter)));
  BoxJitter out{b, false};
  auto& r = out.box;
  r.x_min = std::clamp<Index>(b.x_min + rng.uniform_int(-m, m), 0, width);
  r.y_min = std::clamp<Index>(b.y_min + rng.uniform_int(-m, m), 0, height);
  r.x_max = std::clamp<Index>(b.x_max + rng.uniform_int(-m, m), 0, width);
  r.y_max = std::clamp<Index>(b.y_max + rng.uniform_int(-m, m), 0, height);

  auto fix = [&](Index& lo, Index& hi, Index limit) {
    if (lo < hi) return;
    out.corrected = true;
    // Grow one pixel past the low edge, or back off from the far image edge.
    if (lo < limit) hi = lo + 1;
    else {
      lo = limit - 1;
      hi = limit;
    }
  };
  fix(r.x_min, r.x_max, width);
  fix(r.y_min, r.y_max, height);
  return out;
}

MaskJitter morph_perturb_mask(const BinaryMask& m, Rng& rng, int max_iterations) {
  if (m.empty()) throw PreconditionError("morph_perturb_mask: mask is empty");
  MaskJitter out{m};
  if (max_iterations <= 0) return out;
  out.op = rng.uniform_int(0, 1) == 0 ? MorphOp::erode : MorphOp::dilate;
  out.iterations = static_cast<int>(rng.uniform_int(1, max_iterations));
  BinaryMask result = morph(m, out.op, out.iterations);
  if (result.empty()) out.fell_back = true;
  else out.mask = std::move(result);
  return out;
}

Prompt perturb_prompt(const Prompt& prompt, Index width, Index height, Rng& rng, const EvalConfig& cfg,
                      std::vector<std::string>& events) {
  Prompt out = prompt;
  if (auto* pts = std::get_if<PointList>(&out.kind)) {
    for (auto& p : *pts) p = jitter_point(p, width, height, rng, cfg.point_jitter_px);
  } else if (auto* boxes = std::get_if<BoxList>(&out.kind)) {
    for (auto& b : *boxes) {
      const auto j = jitter_box(b, width, height, rng, cfg.box_jitter_ratio);
      if (j.corrected) events.push_back("degenerate box corrected to 1-pixel extent");
      b = j.box;
    }
  } else if (auto* mask = std::get_if<BinaryMask>(&out.kind)) {
    const auto j = morph_perturb_mask(*mask, rng, cfg.mask_max_iterations);
    if (j.fell_back)
      events.push_back("erosion by " + std::to_string(j.iterations) + " emptied the mask; original kept");
    *mask = j.mask;
  }
  return out;
}

TrialStats summarize_trials(const std::string& metric, const std::vector<double>& values, double ideal) {
  if (values.empty()) throw PreconditionError("summarize_trials: no trial values");
  TrialStats s;
  s.metric = metric;
  s.polarity = polarity_of(metric);
  s.n_trials = static_cast<int>(values.size());
  // Welford: constant trials give exactly their value and a zero spread.
  double mean = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double d = values[k] - mean;
    mean += d / static_cast<double>(k + 1);
    m2 += d * (values[k] - mean);
  }
  s.mean = mean;
  s.stddev = std::sqrt(m2 / static_cast<double>(values.size()));
  s.ideal = ideal;
  if (ideal != 0.0) s.delta = (s.mean - ideal) / std::abs(ideal);
  return s;
}

Effect effect_of(const TrialStats& s) {
  const double change = s.mean - s.ideal;
  if (change == 0.0) return Effect::unchanged;
  const bool worse = s.polarity == Polarity::higher_better ? change < 0.0 : change > 0.0;
  return worse ? Effect::degraded : Effect::improved;
}

const char* effect_name(Effect e) {
  switch (e) {
    case Effect::degraded: return "degraded";
    case Effect::improved: return "improved";
    case Effect::unchanged: return "unchanged";
  }
  return "?";
}

}  // namespace promptseg
