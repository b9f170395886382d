#include "promptseg/report.hpp"

#include <algorithm>
#include <set>

namespace promptseg {
namespace {

const std::vector<std::string> kPerSample = {"MAE", "Sm", "wFm", "BER", "IoU", "Dice"};
const std::vector<std::string> kDatasetLevel = {"I-AUROC", "I-AP", "P-AUROC", "P-AP", "P-PRO"};

std::map<std::string, double> means_of(const std::vector<SampleMetrics>& samples) {
  std::map<std::string, double> sums;
  std::map<std::string, std::size_t> counts;
  for (const auto& s : samples) {
    for (const auto& v : s.values) {
      sums[v.name] += v.value;
      ++counts[v.name];
    }
  }
  for (auto& [name, sum] : sums) sum /= static_cast<double>(counts[name]);
  return sums;
}

}  // namespace

MetricReport make_report(std::string dataset, std::vector<SampleMetrics> samples) {
  std::set<std::string> seen;
  for (const auto& s : samples)
    if (!seen.insert(s.sample_id).second) throw PreconditionError("report: duplicate sample id '" + s.sample_id + "'");
  MetricReport r;
  r.dataset = std::move(dataset);
  r.aggregates = means_of(samples);
  r.per_sample = std::move(samples);
  return r;
}

std::vector<std::string> metric_names_of(const MetricReport& report) {
  std::vector<std::string> names;
  for (const auto& s : report.per_sample)
    for (const auto& v : s.values)
      if (std::find(names.begin(), names.end(), v.name) == names.end()) names.push_back(v.name);
  return names;
}

std::vector<MetricReport> aggregate(const std::vector<MetricReport>& reports, AggregationScheme scheme) {
  if (reports.empty()) throw PreconditionError("aggregate: no reports");
  const auto names = metric_names_of(reports.front());
  for (const auto& r : reports) {
    auto other = metric_names_of(r);
    if (std::set(other.begin(), other.end()) != std::set(names.begin(), names.end()))
      throw PreconditionError("aggregate: reports carry different metric sets");
  }

  std::vector<MetricReport> merged;
  for (const auto& r : reports) {
    auto it = std::find_if(merged.begin(), merged.end(), [&](const MetricReport& m) { return m.dataset == r.dataset; });
    if (it == merged.end()) {
      merged.push_back(r);
      continue;
    }
    auto samples = it->per_sample;
    samples.insert(samples.end(), r.per_sample.begin(), r.per_sample.end());
    auto warnings = it->warnings;
    warnings.insert(warnings.end(), r.warnings.begin(), r.warnings.end());
    auto dataset_level = it->dataset_level;
    *it = make_report(r.dataset, std::move(samples));
    it->warnings = std::move(warnings);
    it->dataset_level = std::move(dataset_level);
  }
  for (auto& m : merged) m.aggregates = means_of(m.per_sample);
  if (scheme == AggregationScheme::per_dataset_mean) return merged;

  std::vector<SampleMetrics> rows;
  for (const auto& m : merged) {
    SampleMetrics row{m.dataset, {}};
    for (const auto& [name, mean] : m.aggregates) row.values.push_back(make_metric(name, mean));
    rows.push_back(std::move(row));
  }
  return {make_report("cross_dataset", std::move(rows))};
}

bool is_per_sample_metric(const std::string& name) {
  return std::find(kPerSample.begin(), kPerSample.end(), name) != kPerSample.end();
}

void check_metric_names(const std::vector<std::string>& names) {
  for (const auto& n : names)
    if (!is_per_sample_metric(n) && std::find(kDatasetLevel.begin(), kDatasetLevel.end(), n) == kDatasetLevel.end())
      throw ConfigError("unknown metric '" + n + "'");
}

std::vector<MetricValue> dataset_level_metrics(const std::vector<ScoreMap>& maps, const std::vector<BinaryMask>& gts,
                                               const EvalConfig& cfg, std::vector<std::string>& warnings) {
  std::vector<MetricValue> out;
  if (maps.size() != gts.size()) throw DimensionMismatch("dataset_level_metrics: list lengths differ");
  if (maps.empty()) return out;

  Eigen::ArrayXd image_scores(static_cast<Index>(maps.size()));
  Eigen::Array<bool, Eigen::Dynamic, 1> image_labels(static_cast<Index>(maps.size()));
  Index pixels = 0;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    image_scores(static_cast<Index>(i)) = maps[i].scores().maxCoeff();
    image_labels(static_cast<Index>(i)) = !gts[i].empty();
    pixels += maps[i].size();
  }
  Eigen::ArrayXd pixel_scores(pixels);
  Eigen::Array<bool, Eigen::Dynamic, 1> pixel_labels(pixels);
  Index off = 0;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    require_same_shape(maps[i], gts[i], "dataset_level_metrics");
    pixel_scores.segment(off, maps[i].size()) = maps[i].scores().reshaped<Eigen::RowMajor>();
    pixel_labels.segment(off, maps[i].size()) = gts[i].bits().reshaped<Eigen::RowMajor>();
    off += maps[i].size();
  }

  auto attempt = [&](const std::string& name, auto&& fn) {
    if (std::find(cfg.metrics.begin(), cfg.metrics.end(), name) == cfg.metrics.end()) return;
    try {
      auto v = fn();
      v.name = name;
      out.push_back(std::move(v));
    } catch (const UndefinedMetric& e) {
      warnings.push_back(name + " undefined: " + e.what());
    }
  };
  attempt("I-AUROC", [&] { return auroc(image_scores, image_labels); });
  attempt("I-AP", [&] { return average_precision(image_scores, image_labels); });
  attempt("P-AUROC", [&] { return auroc(pixel_scores, pixel_labels); });
  attempt("P-AP", [&] { return average_precision(pixel_scores, pixel_labels); });
  attempt("P-PRO", [&] { return pro(maps, gts, cfg.pro_fpr_cap, cfg.connectivity); });
  return out;
}

}  // namespace promptseg
