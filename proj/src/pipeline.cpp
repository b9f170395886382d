#include "promptseg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "promptseg/error.hpp"

namespace promptseg {
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

bool is_sequence_kind(DatasetKind k) { return k != DatasetKind::image; }

bool needs_dataset_level(const EvalConfig& cfg) {
  return std::any_of(cfg.metrics.begin(), cfg.metrics.end(), [](const auto& m) { return !is_per_sample_metric(m); });
}

std::vector<DatasetManifest> scan_all(const RunSpec& run, std::ostream& diag) {
  std::vector<DatasetManifest> out;
  for (const auto& root : run.datasets) {
    out.push_back(scan_dataset(fs::weakly_canonical(root), run.kind, run.split));
    for (const auto& w : out.back().warnings) diag << "warning: " << out.back().name << ": " << w << "\n";
  }
  return out;
}

std::vector<ContextExemplar> load_context(const RunSpec& run, std::ostream& diag) {
  if (run.mode != PromptMode::icl) return {};
  const auto train = scan_dataset(fs::weakly_canonical(*run.train_dataset), DatasetKind::image, Split::train);
  for (const auto& w : train.warnings) diag << "warning: " << train.name << ": " << w << "\n";
  return icl_context(train, static_cast<std::size_t>(run.cfg.icl_count));
}

// Handshakes and checks the endpoint before any sample is touched.
SegmenterHandle open_primary(const RunSpec& run, const SegmenterFactory& make) {
  SegmenterHandle seg = make();
  for (auto c : run_capabilities(run))
    if (!seg.capabilities().has(c))
      throw CapabilityError("segmenter '" + seg.capabilities().name + "' lacks the '" + capability_name(c) +
                            "' capability needed by this run");
  return seg;
}

ojson manifest_json(const RunSpec& run, const char* command, const std::vector<DatasetManifest>& manifests,
                    const SegmenterHandle& seg) {
  ojson m;
  m["tool"] = "promptseg";
  m["command"] = command;
  m["protocol"] = kProtocolVersion;
  m["segmenter"] = {{"spec", run.segmenter}, {"name", seg.capabilities().name}};
  m["config_hash"] = config_hash(run.cfg);
  m["rng_seed"] = run.cfg.rng_seed;
  m["config"] = to_config_text(run.cfg);
  m["mode"] = prompt_mode_name(run.mode);
  if (is_sequence_kind(run.kind)) {
    m["strategy"] = sequence_strategy_name(run.strategy);
    m["frames"] = run.frames;
  }
  if (run.train_dataset) m["train_dataset"] = fs::weakly_canonical(*run.train_dataset).string();
  ojson ds = ojson::array();
  for (const auto& d : manifests)
    ds.push_back({{"name", d.name},
                  {"root", d.root.string()},
                  {"kind", dataset_kind_name(d.kind)},
                  {"split", d.split == Split::train ? "train" : "test"},
                  {"units", d.kind == DatasetKind::image ? d.samples.size() : d.sequences.size()}});
  m["datasets"] = ds;
  return m;
}

void finish_manifest(ojson& m, const std::vector<std::string>& outputs, const std::vector<std::string>& failures) {
  m["outputs"] = outputs;
  m["failures"] = failures;
  m["status"] = failures.empty() ? "ok" : "failed";
}

// Result of one work unit: an image, or a whole sequence.
struct UnitResult {
  std::vector<SampleMetrics> samples;
  std::vector<ScoreMap> maps;
  std::vector<BinaryMask> gts;
  std::vector<std::string> warnings;
  std::optional<std::string> failure;
};

BinaryMask predict_or_skip(const RunSpec& run, const SamplePaths& s, const BinaryMask& gt, SegmenterHandle& seg,
                           const std::vector<ContextExemplar>& context, UnitResult& r) {
  const bool gt_prompted = run.mode == PromptMode::point || run.mode == PromptMode::box || run.mode == PromptMode::mask;
  if (gt_prompted && gt.empty()) {
    r.warnings.push_back(s.id + ": empty ground truth gives no prompt; predicted empty");
    return BinaryMask(gt.width(), gt.height());
  }
  return predict_image(run.mode, s.image.string(), gt, seg, run.cfg, context).mask;
}

void record(UnitResult& r, const std::string& id, const BinaryMask& pred, const BinaryMask& gt, bool keep_maps,
            const EvalConfig& cfg) {
  r.samples.push_back({id, score_sample(pred, gt, cfg)});
  if (keep_maps) {
    r.maps.push_back(lift<double>(pred));
    r.gts.push_back(gt);
  }
}

void write_sequence_outputs(const RunSpec& run, const std::string& dataset, const SequencePaths& paths,
                            const SequenceRun& sr) {
  const fs::path dir = run.out / "predictions" / dataset / paths.id;
  fs::create_directories(dir);
  ojson index;
  index["sequence"] = paths.id;
  index["kind"] = dataset_kind_name(run.kind);
  index["strategy"] = sequence_strategy_name(run.strategy);
  index["mode"] = prompt_mode_name(run.mode);
  index["k"] = run.frames;
  index["prompted_frames"] = sr.prompted_frames;
  index["anchor"] = sr.anchor ? ojson(*sr.anchor) : ojson(nullptr);
  ojson frames = ojson::array();
  for (std::size_t i = 0; i < paths.frames.size(); ++i) {
    const std::string file = fs::path(paths.frames[i].id).filename().string() + ".png";
    save_mask_png(sr.predictions[i], dir / file);
    frames.push_back({{"index", i}, {"id", paths.frames[i].id}, {"file", file}});
  }
  index["frames"] = frames;
  index["partial"] = sr.partial;
  index["warnings"] = sr.warnings;
  write_text_file(dir / "index.json", index.dump(2) + "\n");
}

UnitResult eval_sequence(const RunSpec& run, const std::string& dataset, const SequencePaths& paths,
                         SegmenterHandle& seg, bool keep_maps) {
  UnitResult r;
  const auto kind = run.kind == DatasetKind::volume ? SequenceKind::volume : SequenceKind::video;
  const SequenceRecord seq = load_sequence(paths, kind);
  const StrategySpec strategy{run.strategy, run.frames, run.mode};
  const SequenceRun sr = run_sequence(seq, strategy, seg, run.cfg);
  r.warnings = sr.warnings;
  if (sr.partial) r.failure = paths.id + ": sequence stopped early: " + sr.failure;
  write_sequence_outputs(run, dataset, paths, sr);

  if (kind == SequenceKind::volume) {
    std::vector<BinaryMask> gts;
    for (const auto& f : seq.frames()) gts.push_back(f.gt);
    record(r, paths.id, stack_rows(sr.predictions), stack_rows(gts), keep_maps, run.cfg);
  } else {
    for (std::size_t i = 0; i < seq.size(); ++i)
      record(r, paths.frames[i].id, sr.predictions[i], seq.frames()[i].gt, keep_maps, run.cfg);
  }
  return r;
}

template <typename Job>
void guarded_unit(UnitResult& r, const std::string& id, Job&& job) {
  try {
    job();
  } catch (const std::exception& e) {
    r.failure = id + ": " + e.what();
  }
}

std::vector<std::string> write_eval_reports(const RunSpec& run, const std::vector<MetricReport>& reports) {
  write_report(reports, ReportFormat::csv, run.out / "metrics.csv");
  write_report(reports, ReportFormat::json, run.out / "metrics.json");
  return {"metrics.csv", "metrics.json"};
}

}  // namespace

void validate_run(const RunSpec& run) {
  validate(run.cfg);
  check_metric_names(run.cfg.metrics);
  if (run.datasets.empty()) throw ConfigError("no dataset given");
  if (run.kind == DatasetKind::volume && run.strategy != SequenceStrategy::bidirectional)
    throw ConfigError("volume datasets run only with the bidirectional strategy");
  if (run.kind == DatasetKind::video && run.strategy == SequenceStrategy::bidirectional)
    throw ConfigError("the bidirectional strategy applies to volume datasets");
  if (run.kind == DatasetKind::image && run.strategy != SequenceStrategy::per_frame_gt)
    throw ConfigError(std::string("strategy ") + sequence_strategy_name(run.strategy) +
                      " applies to video or volume datasets");
  const bool scheduled =
      run.strategy == SequenceStrategy::multiframe || run.strategy == SequenceStrategy::bidirectional;
  if (is_sequence_kind(run.kind)) {
    if (run.mode == PromptMode::icl || run.mode == PromptMode::everything)
      throw ConfigError(std::string(prompt_mode_name(run.mode)) + " mode applies to image datasets");
    if (scheduled && run.frames != 1 && run.frames != 3 && run.frames != 5)
      throw ConfigError("--frames must be 1, 3 or 5");
    if (run.mode == PromptMode::mask && !scheduled)
      throw ConfigError("mask prompts are only given on scheduled frames (multiframe or bidirectional)");
  }
  if (run.mode == PromptMode::icl && !run.train_dataset) throw ConfigError("icl mode needs --train-dataset");
  if (run.workers < 0) throw ConfigError("--workers must be >= 0");
}

std::vector<Capability> run_capabilities(const RunSpec& run) {
  std::vector<Capability> out;
  auto add = [&](Capability c) {
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  };
  switch (run.mode) {
    case PromptMode::point: add(Capability::points); break;
    case PromptMode::box: add(Capability::boxes); break;
    case PromptMode::mask: add(Capability::mask); break;
    case PromptMode::everything: add(Capability::everything); break;
    case PromptMode::icl:
      add(Capability::everything);
      add(Capability::context_memory);
      break;
  }
  if (is_sequence_kind(run.kind)) {
    switch (run.strategy) {
      case SequenceStrategy::propagated_point: out = {Capability::points}; break;
      case SequenceStrategy::propagated_box: out = {Capability::boxes}; break;
      case SequenceStrategy::multiframe:
      case SequenceStrategy::bidirectional: add(Capability::context_memory); break;
      case SequenceStrategy::per_frame_gt: break;
    }
  }
  return out;
}

GroundTruthSource ground_truth_index(const std::vector<DatasetManifest>& manifests) {
  auto index = std::make_shared<std::map<std::string, fs::path>>();
  for (const auto& m : manifests) {
    for (const auto& s : m.samples) (*index)[s.image.string()] = s.mask;
    for (const auto& seq : m.sequences)
      for (const auto& f : seq.frames) (*index)[f.image.string()] = f.mask;
  }
  return [index](const std::string& image) {
    const auto it = index->find(image);
    if (it == index->end()) throw PreconditionError("no ground truth for image '" + image + "'");
    return load_mask(it->second);
  };
}

SegmenterFactory segmenter_factory(const std::string& spec, GroundTruthSource source, int connectivity) {
  if (spec.rfind("oracle:", 0) == 0) {
    const OracleKind kind = parse_oracle_kind(spec.substr(7));
    auto oracle = std::make_shared<const Oracle>(kind, std::move(source), connectivity);
    return [oracle] { return SegmenterHandle(make_loopback_transport(oracle)); };
  }
  if (spec.rfind("stdio:", 0) == 0) {
    const std::string command = spec.substr(6);
    if (command.empty()) throw ConfigError("stdio segmenter needs a command after 'stdio:'");
    return [command] { return SegmenterHandle(make_stdio_transport(command)); };
  }
  if (spec.rfind("http://", 0) == 0) return [spec] { return SegmenterHandle(make_http_transport(spec)); };
  throw ConfigError("unknown segmenter '" + spec + "' (expected oracle:<kind>, stdio:<command> or http://host:port)");
}

void run_pool(std::size_t count, int workers, SegmenterHandle& primary, const SegmenterFactory& make,
              const std::function<void(std::size_t, SegmenterHandle&)>& job) {
  std::size_t threads = workers > 0 ? static_cast<std::size_t>(workers)
                                    : std::max(1u, std::thread::hardware_concurrency());
  const int sessions = primary.capabilities().sessions;
  if (sessions > 0) threads = std::min(threads, static_cast<std::size_t>(sessions));
  threads = std::max<std::size_t>(1, std::min(threads, count));

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&](SegmenterHandle& seg) {
    try {
      for (std::size_t i = next++; i < count; i = next++) job(i, seg);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
      next = count;
    }
  };

  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t)
    pool.emplace_back([&] {
      std::optional<SegmenterHandle> own;
      try {
        own.emplace(make());
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
      worker(*own);
    });
  worker(primary);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

EvalResult evaluate(const RunSpec& run, std::ostream& diag) {
  validate_run(run);
  const auto manifests = scan_all(run, diag);
  const auto context = load_context(run, diag);
  const auto make = segmenter_factory(run.segmenter, ground_truth_index(manifests), run.cfg.connectivity);
  SegmenterHandle primary = open_primary(run, make);
  fs::create_directories(run.out);

  EvalResult result;
  result.segmenter_name = primary.capabilities().name;
  const bool keep_maps = needs_dataset_level(run.cfg);

  for (const auto& m : manifests) {
    const bool images = m.kind == DatasetKind::image;
    const std::size_t units = images ? m.samples.size() : m.sequences.size();
    std::vector<UnitResult> results(units);
    diag << m.name << ": " << units << (images ? " images" : " sequences") << "\n";

    run_pool(units, run.workers, primary, make, [&](std::size_t i, SegmenterHandle& seg) {
      UnitResult& r = results[i];
      if (images) {
        const auto& s = m.samples[i];
        guarded_unit(r, s.id, [&] {
          const BinaryMask gt = load_mask(s.mask);
          const BinaryMask pred = predict_or_skip(run, s, gt, seg, context, r);
          record(r, s.id, pred, gt, keep_maps, run.cfg);
        });
      } else {
        const auto& seq = m.sequences[i];
        guarded_unit(r, seq.id, [&] { r = eval_sequence(run, m.name, seq, seg, keep_maps); });
      }
    });

    std::vector<SampleMetrics> samples;
    std::vector<ScoreMap> maps;
    std::vector<BinaryMask> gts;
    std::vector<std::string> warnings;
    for (auto& r : results) {
      for (auto& w : r.warnings) warnings.push_back(std::move(w));
      if (r.failure) result.failures.push_back(m.name + ": " + *r.failure);
      // A partial sequence is reported as failed and left out of the scores.
      if (r.failure) continue;
      for (auto& s : r.samples) samples.push_back(std::move(s));
      for (auto& x : r.maps) maps.push_back(std::move(x));
      for (auto& g : r.gts) gts.push_back(std::move(g));
    }
    if (samples.empty()) continue;
    MetricReport report = make_report(m.name, std::move(samples));
    report.dataset_level = dataset_level_metrics(maps, gts, run.cfg, warnings);
    report.warnings = std::move(warnings);
    for (const auto& w : report.warnings) diag << "warning: " << m.name << ": " << w << "\n";
    result.reports.push_back(std::move(report));
  }

  ojson manifest = manifest_json(run, "eval", manifests, primary);
  std::vector<std::string> outputs;
  if (!result.reports.empty()) outputs = write_eval_reports(run, result.reports);
  for (const auto& f : result.failures) diag << "error: " << f << "\n";
  finish_manifest(manifest, outputs, result.failures);
  write_text_file(run.out / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

int cmd_eval(const RunSpec& run, std::ostream& diag) {
  const auto result = evaluate(run, diag);
  if (result.reports.empty()) diag << "error: no sample was scored\n";
  return result.failures.empty() && !result.reports.empty() ? kExitOk : kExitFailure;
}

int cmd_perturb(const RunSpec& run, std::ostream& diag) {
  validate_run(run);
  if (run.kind != DatasetKind::image) throw ConfigError("perturbation runs apply to image datasets");
  if (run.mode != PromptMode::point && run.mode != PromptMode::box && run.mode != PromptMode::mask)
    throw ConfigError(std::string("perturbation needs point, box or mask prompts, not ") + prompt_mode_name(run.mode));

  const auto manifests = scan_all(run, diag);
  const auto make = segmenter_factory(run.segmenter, ground_truth_index(manifests), run.cfg.connectivity);
  SegmenterHandle primary = open_primary(run, make);
  fs::create_directories(run.out);

  std::vector<std::string> failures;
  std::vector<MetricReport> baselines;
  std::vector<TrialRow> rows;
  std::vector<PerturbEvent> events;

  for (const auto& m : manifests) {
    struct Unit {
      std::optional<IdealBaseline> ideal;
      std::optional<SampleTrials> trials;
      std::optional<std::string> skipped;
      std::optional<std::string> failure;
    };
    std::vector<Unit> units(m.samples.size());
    diag << m.name << ": " << units.size() << " images x " << run.cfg.n_trials << " trials\n";

    run_pool(units.size(), run.workers, primary, make, [&](std::size_t i, SegmenterHandle& seg) {
      const auto& s = m.samples[i];
      Unit& u = units[i];
      try {
        const SampleInput input{s.id, s.image.string(), load_mask(s.mask)};
        if (input.gt.empty()) {
          u.skipped = s.id + ": empty ground truth gives no prompt to perturb; skipped";
          return;
        }
        u.ideal = ideal_baseline(input, run.mode, seg, run.cfg);
        u.trials = run_trials(input, run.mode, seg, run.cfg, *u.ideal);
        if (u.trials->partial) u.failure = s.id + ": trials stopped early: " + u.trials->failure;
      } catch (const std::exception& e) {
        u.failure = s.id + ": " + e.what();
      }
    });

    std::vector<SampleMetrics> baseline_samples;
    std::vector<SampleTrials> done;
    std::vector<IdealBaseline> ideals;
    for (std::size_t i = 0; i < units.size(); ++i) {
      auto& u = units[i];
      if (u.skipped) diag << "warning: " << m.name << ": " << *u.skipped << "\n";
      if (u.failure) failures.push_back(m.name + ": " + *u.failure);
      if (u.trials)
        for (auto& e : u.trials->events) events.push_back(std::move(e));
      if (!u.ideal || !u.trials || u.failure) continue;
      baseline_samples.push_back({m.samples[i].id, u.ideal->metrics});
      for (const auto& st : u.trials->stats) rows.push_back({m.name, m.samples[i].id, st});
      ideals.push_back(*u.ideal);
      done.push_back(std::move(*u.trials));
    }
    if (baseline_samples.empty()) continue;
    for (const auto& st : summarize_dataset_trials(done, ideals)) rows.push_back({m.name, "*", st});
    baselines.push_back(make_report(m.name, std::move(baseline_samples)));
  }

  ojson manifest = manifest_json(run, "perturb", manifests, primary);
  std::vector<std::string> outputs;
  if (!rows.empty()) {
    write_report(baselines, ReportFormat::csv, run.out / "baseline.csv");
    write_report(rows, events, ReportFormat::csv, run.out / "trials.csv");
    write_report(rows, events, ReportFormat::json, run.out / "trials.json");
    outputs = {"baseline.csv", "trials.csv", "trials.json"};
  } else {
    diag << "error: no sample completed its trials\n";
  }
  for (const auto& e : events) diag << "note: " << e.sample_id << " trial " << e.trial << ": " << e.what << "\n";
  for (const auto& f : failures) diag << "error: " << f << "\n";
  finish_manifest(manifest, outputs, failures);
  write_text_file(run.out / "manifest.json", manifest.dump(2) + "\n");
  return failures.empty() && !rows.empty() ? kExitOk : kExitFailure;
}

int cmd_report(const std::vector<fs::path>& inputs, const fs::path& out, std::ostream& diag) {
  if (inputs.empty()) throw ConfigError("report needs at least one per-sample CSV");
  std::vector<MetricReport> all;
  for (const auto& p : inputs)
    for (auto& r : read_metric_csv(p)) all.push_back(std::move(r));
  const auto merged = aggregate(all, AggregationScheme::per_dataset_mean);
  fs::create_directories(out);
  write_report(merged, ReportFormat::csv, out / "metrics.csv");
  write_report(merged, ReportFormat::json, out / "metrics.json");
  diag << merged.size() << " datasets re-aggregated\n";
  return kExitOk;
}

}  // namespace promptseg
