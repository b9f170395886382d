#include "promptseg/report_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "promptseg/error.hpp"
#include "promptseg/text.hpp"

namespace promptseg {
namespace {

using ojson = nlohmann::ordered_json;

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

const char* polarity_word(Polarity p) { return p == Polarity::higher_better ? "higher" : "lower"; }

ojson dataset_json(const MetricReport& r) {
  ojson d;
  d["name"] = r.dataset;
  d["n_samples"] = r.per_sample.size();
  ojson agg = ojson::object();
  for (const auto& name : metric_names_of(r)) agg[name] = r.aggregates.at(name);
  d["aggregates"] = agg;
  ojson level = ojson::object();
  for (const auto& v : r.dataset_level) level[v.name] = v.value;
  d["dataset_level"] = level;
  d["warnings"] = r.warnings;
  return d;
}

ojson stats_json(const TrialStats& s) {
  ojson j;
  j["metric"] = s.metric;
  j["polarity"] = polarity_word(s.polarity);
  j["mean"] = s.mean;
  j["std"] = s.stddev;
  j["n_trials"] = s.n_trials;
  j["ideal"] = s.ideal;
  j["delta"] = s.delta ? ojson(*s.delta) : ojson(nullptr);
  j["delta_pct"] = format_delta_pct(s.delta);
  j["effect"] = effect_name(effect_of(s));
  return j;
}

}  // namespace

std::string format_delta_pct(const std::optional<double>& delta) {
  if (!delta) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.3f%%", *delta * 100.0);
  return buf;
}

std::string render_metric_csv(const std::vector<MetricReport>& reports) {
  std::string out = std::string(kSampleCsvHeader) + "\n";
  for (const auto& r : reports)
    for (const auto& s : r.per_sample)
      for (const auto& v : s.values)
        out += csv_field(r.dataset) + "," + csv_field(s.sample_id) + "," + v.name + "," + format_real(v.value) + "," +
               polarity_word(v.polarity) + "," + v.flag + "\n";
  return out;
}

std::string render_metric_json(const std::vector<MetricReport>& reports) {
  ojson root;
  root["schema"] = "promptseg.metrics/1";
  ojson datasets = ojson::array();
  for (const auto& r : reports) datasets.push_back(dataset_json(r));
  root["datasets"] = datasets;
  if (reports.size() > 1) {
    const auto cross = aggregate(reports, AggregationScheme::cross_dataset_mean).front();
    ojson c = ojson::object();
    for (const auto& name : metric_names_of(cross)) c[name] = cross.aggregates.at(name);
    root["cross_dataset_mean"] = c;
  }
  return root.dump(2) + "\n";
}

std::string render_trial_csv(const std::vector<TrialRow>& rows) {
  std::string out = std::string(kTrialCsvHeader) + "\n";
  for (const auto& row : rows) {
    const auto& s = row.stats;
    out += csv_field(row.dataset) + "," + csv_field(row.sample_id) + "," + s.metric + "," + polarity_word(s.polarity) +
           "," + format_real(s.mean) + "," + format_real(s.stddev) + "," + std::to_string(s.n_trials) + "," +
           format_real(s.ideal) + "," + (s.delta ? format_real(*s.delta) : std::string("n/a")) + "," +
           format_delta_pct(s.delta) + "," + effect_name(effect_of(s)) + "\n";
  }
  return out;
}

std::string render_trial_json(const std::vector<TrialRow>& rows, const std::vector<PerturbEvent>& events) {
  ojson root;
  root["schema"] = "promptseg.trials/1";
  ojson summary = ojson::array();
  ojson samples = ojson::array();
  for (const auto& row : rows) {
    ojson j = stats_json(row.stats);
    j["dataset"] = row.dataset;
    if (row.sample_id == "*") summary.push_back(j);
    else {
      j["sample_id"] = row.sample_id;
      samples.push_back(j);
    }
  }
  root["summary"] = summary;
  root["per_sample"] = samples;
  ojson ev = ojson::array();
  for (const auto& e : events) ev.push_back({{"sample_id", e.sample_id}, {"trial", e.trial}, {"event", e.what}});
  root["events"] = ev;
  return root.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_report(const std::vector<MetricReport>& reports, ReportFormat format, const std::filesystem::path& path) {
  if (reports.empty()) throw PreconditionError("write_report: report is empty");
  write_text_file(path, format == ReportFormat::csv ? render_metric_csv(reports) : render_metric_json(reports));
}

void write_report(const std::vector<TrialRow>& rows, const std::vector<PerturbEvent>& events, ReportFormat format,
                  const std::filesystem::path& path) {
  if (rows.empty()) throw PreconditionError("write_report: trial report is empty");
  write_text_file(path, format == ReportFormat::csv ? render_trial_csv(rows) : render_trial_json(rows, events));
}

std::vector<MetricReport> read_metric_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kSampleCsvHeader)
    throw IoError(path.string() + ": not a per-sample report (header mismatch)");

  std::vector<std::string> order;
  std::map<std::string, std::vector<SampleMetrics>> by_dataset;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 6) throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected 6 fields");
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), value);
    if (ec != std::errc() || ptr != f[3].data() + f[3].size())
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": bad value '" + f[3] + "'");
    if (!by_dataset.count(f[0])) order.push_back(f[0]);
    auto& samples = by_dataset[f[0]];
    if (samples.empty() || samples.back().sample_id != f[1]) samples.push_back({f[1], {}});
    samples.back().values.push_back(make_metric(f[2], value, f[5]));
  }
  std::vector<MetricReport> out;
  for (const auto& name : order) out.push_back(make_report(name, std::move(by_dataset[name])));
  return out;
}

}  // namespace promptseg
