#include "promptseg/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "promptseg/error.hpp"
#include "promptseg/text.hpp"

namespace promptseg {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string_view unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("config: bad value for " + std::string(key) + ": '" + std::string(value) + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config: bad boolean for " + std::string(key) + ": '" + std::string(value) + "'");
}

std::vector<std::string> parse_list(std::string_view value) {
  std::vector<std::string> out;
  if (!value.empty() && value.front() == '[' && value.back() == ']') value = value.substr(1, value.size() - 2);
  while (!value.empty()) {
    const auto comma = value.find(',');
    auto item = trim(unquote(trim(value.substr(0, comma))));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  return out;
}

void check_ratio(std::string_view key, double v, bool allow_zero = false) {
  const bool ok = allow_zero ? (v >= 0.0 && v <= 1.0) : (v > 0.0 && v <= 1.0);
  if (!ok) throw ConfigError("config: " + std::string(key) + " must lie in " + (allow_zero ? "[0, 1]" : "(0, 1]"));
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "click_limit", "iou_stop",          "ofs_threshold",   "binarize_threshold", "s_measure_alpha",
      "wfm_beta2",   "wfm_sigma",         "pro_fpr_cap",     "n_trials",           "rng_seed",
      "icl_count",   "connectivity",      "point_jitter_px", "box_jitter_ratio",   "mask_max_iterations",
      "point_full_loop", "metrics"};
  return keys;
}

void set_config_value(EvalConfig& cfg, std::string_view key, std::string_view raw) {
  const auto value = unquote(trim(raw));
  if (key == "click_limit") cfg.click_limit = parse_number<int>(key, value);
  else if (key == "iou_stop") cfg.iou_stop = parse_number<double>(key, value);
  else if (key == "ofs_threshold") cfg.ofs_threshold = parse_number<double>(key, value);
  else if (key == "binarize_threshold") cfg.binarize_threshold = parse_number<double>(key, value);
  else if (key == "s_measure_alpha") cfg.s_measure_alpha = parse_number<double>(key, value);
  else if (key == "wfm_beta2") cfg.wfm_beta2 = parse_number<double>(key, value);
  else if (key == "wfm_sigma") cfg.wfm_sigma = parse_number<double>(key, value);
  else if (key == "pro_fpr_cap") cfg.pro_fpr_cap = parse_number<double>(key, value);
  else if (key == "n_trials") cfg.n_trials = parse_number<int>(key, value);
  else if (key == "rng_seed") cfg.rng_seed = parse_number<std::uint64_t>(key, value);
  else if (key == "icl_count") cfg.icl_count = parse_number<int>(key, value);
  else if (key == "connectivity") cfg.connectivity = parse_number<int>(key, value);
  else if (key == "point_jitter_px") cfg.point_jitter_px = parse_number<int>(key, value);
  else if (key == "box_jitter_ratio") cfg.box_jitter_ratio = parse_number<double>(key, value);
  else if (key == "mask_max_iterations") cfg.mask_max_iterations = parse_number<int>(key, value);
  else if (key == "point_full_loop") cfg.point_full_loop = parse_bool(key, value);
  else if (key == "metrics") cfg.metrics = parse_list(trim(raw));
  else throw ConfigError("config: unknown key '" + std::string(key) + "'");
}

std::string get_config_value(const EvalConfig& cfg, std::string_view key) {
  if (key == "click_limit") return std::to_string(cfg.click_limit);
  if (key == "iou_stop") return format_real(cfg.iou_stop);
  if (key == "ofs_threshold") return format_real(cfg.ofs_threshold);
  if (key == "binarize_threshold") return format_real(cfg.binarize_threshold);
  if (key == "s_measure_alpha") return format_real(cfg.s_measure_alpha);
  if (key == "wfm_beta2") return format_real(cfg.wfm_beta2);
  if (key == "wfm_sigma") return format_real(cfg.wfm_sigma);
  if (key == "pro_fpr_cap") return format_real(cfg.pro_fpr_cap);
  if (key == "n_trials") return std::to_string(cfg.n_trials);
  if (key == "rng_seed") return std::to_string(cfg.rng_seed);
  if (key == "icl_count") return std::to_string(cfg.icl_count);
  if (key == "connectivity") return std::to_string(cfg.connectivity);
  if (key == "point_jitter_px") return std::to_string(cfg.point_jitter_px);
  if (key == "box_jitter_ratio") return format_real(cfg.box_jitter_ratio);
  if (key == "mask_max_iterations") return std::to_string(cfg.mask_max_iterations);
  if (key == "point_full_loop") return cfg.point_full_loop ? "true" : "false";
  if (key == "metrics") {
    std::string out = "[";
    for (std::size_t i = 0; i < cfg.metrics.size(); ++i) out += (i ? ", \"" : "\"") + cfg.metrics[i] + "\"";
    return out + "]";
  }
  throw ConfigError("config: unknown key '" + std::string(key) + "'");
}

void validate(const EvalConfig& cfg) {
  if (cfg.click_limit < 1) throw ConfigError("config: click_limit must be >= 1");
  if (cfg.n_trials < 1) throw ConfigError("config: n_trials must be >= 1");
  if (cfg.icl_count < 1) throw ConfigError("config: icl_count must be >= 1");
  check_ratio("iou_stop", cfg.iou_stop);
  check_ratio("ofs_threshold", cfg.ofs_threshold);
  check_ratio("binarize_threshold", cfg.binarize_threshold);
  if (cfg.binarize_threshold >= 1.0) throw ConfigError("config: binarize_threshold must be < 1");
  check_ratio("s_measure_alpha", cfg.s_measure_alpha);
  check_ratio("wfm_beta2", cfg.wfm_beta2);
  check_ratio("pro_fpr_cap", cfg.pro_fpr_cap);
  check_ratio("box_jitter_ratio", cfg.box_jitter_ratio, true);
  if (!(cfg.wfm_sigma > 0.0)) throw ConfigError("config: wfm_sigma must be > 0");
  if (cfg.connectivity != 4 && cfg.connectivity != 8) throw ConfigError("config: connectivity must be 4 or 8");
  if (cfg.point_jitter_px < 0) throw ConfigError("config: point_jitter_px must be >= 0");
  if (cfg.mask_max_iterations < 0) throw ConfigError("config: mask_max_iterations must be >= 0");
  if (cfg.metrics.empty()) throw ConfigError("config: metrics list is empty");
}

EvalConfig parse_config(std::string_view text) {
  EvalConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos && line.find('"') > hash)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config: line " + std::to_string(line_no) + ": expected 'key = value'");
    set_config_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  validate(cfg);
  return cfg;
}

EvalConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_config_text(const EvalConfig& cfg) {
  std::string out;
  for (const auto& key : config_keys()) out += key + " = " + get_config_value(cfg, key) + "\n";
  return out;
}

std::string config_hash(const EvalConfig& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : to_config_text(cfg)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace promptseg
