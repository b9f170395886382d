#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace promptseg {

/// Every knob of an evaluation run. Field names are also the config-file keys and CLI flag names.
struct EvalConfig {
  int click_limit = 6;
  double iou_stop = 0.9;
  double ofs_threshold = 0.9;
  double binarize_threshold = 0.5;
  double s_measure_alpha = 0.5;
  double wfm_beta2 = 1.0;
  double wfm_sigma = 5.0;
  double pro_fpr_cap = 0.3;
  int n_trials = 5;
  std::uint64_t rng_seed = 0;
  int icl_count = 20;

  int connectivity = 8;
  int point_jitter_px = 10;
  double box_jitter_ratio = 0.1;
  int mask_max_iterations = 5;
  bool point_full_loop = false;
  std::vector<std::string> metrics = {"MAE", "Sm", "wFm", "BER", "IoU", "Dice"};

  friend bool operator==(const EvalConfig&, const EvalConfig&) = default;
};

/// Config keys in canonical order.
const std::vector<std::string>& config_keys();

/// Sets one field from its textual value; throws ConfigError on unknown key or bad value.
void set_config_value(EvalConfig& cfg, std::string_view key, std::string_view value);
std::string get_config_value(const EvalConfig& cfg, std::string_view key);

/// Throws ConfigError when a field is out of range.
void validate(const EvalConfig& cfg);

/// Parses `key = value` lines. Blank lines and `#` comments are ignored; missing keys keep defaults.
EvalConfig parse_config(std::string_view text);
EvalConfig load_config_file(const std::filesystem::path& path);

/// Canonical text form; parse_config(to_config_text(c)) == c.
std::string to_config_text(const EvalConfig& cfg);

/// FNV-1a of the canonical text, hex encoded.
std::string config_hash(const EvalConfig& cfg);

}  // namespace promptseg
