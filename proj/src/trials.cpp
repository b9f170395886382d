#include "promptseg/trials.hpp"

#include <map>

#include "promptseg/error.hpp"

namespace promptseg {

IdealBaseline ideal_baseline(const SampleInput& sample, PromptMode mode, SegmenterHandle& seg, const EvalConfig& cfg) {
  const auto& gt = sample.gt;
  switch (mode) {
    case PromptMode::point: {
      auto run = simulate_clicks(sample.image, gt, seg, cfg);
      return {Prompt::points(run.log.points()), score_sample(run.prediction, gt, cfg)};
    }
    case PromptMode::box: {
      BoxList boxes = ideal_boxes(gt, cfg.connectivity);
      const BinaryMask pred = run_boxes(sample.image, gt.width(), gt.height(), boxes, seg);
      return {Prompt::boxes(std::move(boxes)), score_sample(pred, gt, cfg)};
    }
    case PromptMode::mask: {
      const BinaryMask pred = mask_prompt_run(sample.image, gt, seg);
      return {Prompt::mask(gt), score_sample(pred, gt, cfg)};
    }
    default:
      throw ConfigError(std::string("prompt mode '") + prompt_mode_name(mode) + "' has no prompt to perturb");
  }
}

namespace {

BinaryMask perturbed_prediction(const SampleInput& sample, PromptMode mode, SegmenterHandle& seg,
                                const EvalConfig& cfg, const IdealBaseline& ideal, Rng& rng,
                                std::vector<std::string>& notes) {
  const auto& gt = sample.gt;
  const Index w = gt.width(), h = gt.height();
  if (mode == PromptMode::point && cfg.point_full_loop) {
    auto adjust = [&](const PointPrompt& p) { return jitter_point(p, w, h, rng, cfg.point_jitter_px); };
    return simulate_clicks(sample.image, gt, seg, cfg, adjust).prediction;
  }
  const Prompt prompt = perturb_prompt(ideal.prompt, w, h, rng, cfg, notes);
  if (const auto* boxes = std::get_if<BoxList>(&prompt.kind)) return run_boxes(sample.image, w, h, *boxes, seg);
  return best_mask(seg.segment(sample.image, w, h, prompt));
}

}  // namespace

SampleTrials run_trials(const SampleInput& sample, PromptMode mode, SegmenterHandle& seg, const EvalConfig& cfg,
                        const IdealBaseline& ideal) {
  if (cfg.n_trials < 1) throw ConfigError("n_trials must be >= 1");
  SampleTrials out;
  out.sample_id = sample.id;
  for (int t = 0; t < cfg.n_trials; ++t) {
    Rng rng = Rng::substream(cfg.rng_seed, static_cast<std::uint64_t>(t), sample.id);
    std::vector<std::string> notes;
    try {
      const BinaryMask pred = perturbed_prediction(sample, mode, seg, cfg, ideal, rng, notes);
      out.per_trial.push_back(score_sample(pred, sample.gt, cfg));
    } catch (const TransportError& e) {
      out.partial = true;
      out.failure = e.what();
    } catch (const ProtocolError& e) {
      out.partial = true;
      out.failure = e.what();
    }
    for (auto& n : notes) out.events.push_back({sample.id, t, std::move(n)});
    if (out.partial) break;
  }
  if (out.per_trial.empty()) return out;

  for (std::size_t m = 0; m < ideal.metrics.size(); ++m) {
    std::vector<double> values;
    for (const auto& trial : out.per_trial) values.push_back(trial[m].value);
    out.stats.push_back(summarize_trials(ideal.metrics[m].name, values, ideal.metrics[m].value));
  }
  return out;
}

std::vector<TrialStats> summarize_dataset_trials(const std::vector<SampleTrials>& samples,
                                                 const std::vector<IdealBaseline>& ideals) {
  if (samples.size() != ideals.size()) throw PreconditionError("summarize_dataset_trials: size mismatch");
  if (ideals.empty()) return {};

  std::vector<TrialStats> out;
  for (std::size_t m = 0; m < ideals.front().metrics.size(); ++m) {
    double ideal_sum = 0.0;
    for (const auto& i : ideals) ideal_sum += i.metrics[m].value;
    const double ideal_mean = ideal_sum / static_cast<double>(ideals.size());

    std::map<std::size_t, std::pair<double, std::size_t>> per_trial;
    for (const auto& s : samples)
      for (std::size_t t = 0; t < s.per_trial.size(); ++t) {
        auto& [sum, n] = per_trial[t];
        sum += s.per_trial[t][m].value;
        ++n;
      }
    if (per_trial.empty()) continue;
    std::vector<double> trial_means;
    for (const auto& [t, acc] : per_trial) trial_means.push_back(acc.first / static_cast<double>(acc.second));
    out.push_back(summarize_trials(ideals.front().metrics[m].name, trial_means, ideal_mean));
  }
  return out;
}

}  // namespace promptseg
