#pragma once

// Random instances, scratch directories and small builders shared by the test binaries.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "promptseg/core.hpp"
#include "promptseg/dataset.hpp"
#include "promptseg/oracles.hpp"

namespace fixtures {

using promptseg::BinaryMask;
using promptseg::Grid;
using promptseg::Index;
using promptseg::ScoreMap;

/// Removes the directory tree on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int serial = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("promptseg-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(serial++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

/// Each pixel set with probability `density`.
inline BinaryMask noise_mask(std::mt19937_64& gen, Index w, Index h, double density) {
  std::bernoulli_distribution coin(density);
  Grid<bool> bits(h, w);
  for (Index i = 0; i < bits.size(); ++i) bits.data()[i] = coin(gen);
  return BinaryMask(bits);
}

/// Union of `count` random axis-aligned ellipses.
inline BinaryMask blob_mask(std::mt19937_64& gen, Index w, Index h, int count) {
  Grid<bool> bits = Grid<bool>::Zero(h, w);
  std::uniform_real_distribution<double> cx(0, static_cast<double>(w)), cy(0, static_cast<double>(h));
  std::uniform_real_distribution<double> radius(1.5, static_cast<double>(std::min(w, h)) / 4.0);
  for (int b = 0; b < count; ++b) {
    const double x0 = cx(gen), y0 = cy(gen), rx = radius(gen), ry = radius(gen);
    for (Index y = 0; y < h; ++y)
      for (Index x = 0; x < w; ++x) {
        const double dx = (static_cast<double>(x) - x0) / rx, dy = (static_cast<double>(y) - y0) / ry;
        if (dx * dx + dy * dy <= 1.0) bits(y, x) = true;
      }
  }
  return BinaryMask(bits);
}

/// One filled ellipse fully inside the image, at least a few pixels across.
inline BinaryMask single_blob(std::mt19937_64& gen, Index w, Index h) {
  std::uniform_real_distribution<double> rx(2.0, static_cast<double>(w) / 4.0), ry(2.0, static_cast<double>(h) / 4.0);
  const double a = rx(gen), b = ry(gen);
  std::uniform_real_distribution<double> cx(a + 1.0, static_cast<double>(w) - a - 1.0);
  std::uniform_real_distribution<double> cy(b + 1.0, static_cast<double>(h) - b - 1.0);
  const double x0 = cx(gen), y0 = cy(gen);
  Grid<bool> bits = Grid<bool>::Zero(h, w);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) {
      const double dx = (static_cast<double>(x) - x0) / a, dy = (static_cast<double>(y) - y0) / b;
      bits(y, x) = dx * dx + dy * dy <= 1.0;
    }
  return BinaryMask(bits);
}

/// Mix of shapes, noise, and the empty / full edge cases.
inline BinaryMask random_mask(std::mt19937_64& gen, Index w, Index h) {
  std::uniform_int_distribution<int> pick(0, 9);
  switch (pick(gen)) {
    case 0: return BinaryMask(w, h);
    case 1: return BinaryMask(Grid<bool>::Constant(h, w, true));
    case 2:
    case 3: return noise_mask(gen, w, h, std::uniform_real_distribution<double>(0.05, 0.6)(gen));
    default: return blob_mask(gen, w, h, std::uniform_int_distribution<int>(1, 4)(gen));
  }
}

/// Scores on the grid k / levels, so ties are frequent.
inline Grid<double> quantized_scores(std::mt19937_64& gen, Index w, Index h, int levels) {
  std::uniform_int_distribution<int> level(0, levels);
  Grid<double> s(h, w);
  for (Index i = 0; i < s.size(); ++i) s.data()[i] = static_cast<double>(level(gen)) / levels;
  return s;
}

/// Scores correlated with the mask: foreground drawn higher on average.
inline Grid<double> soft_prediction(std::mt19937_64& gen, const BinaryMask& gt, double noise) {
  std::normal_distribution<double> n(0.0, noise);
  Grid<double> s(gt.height(), gt.width());
  for (Index y = 0; y < gt.height(); ++y)
    for (Index x = 0; x < gt.width(); ++x)
      s(y, x) = std::clamp((gt(y, x) ? 0.75 : 0.25) + n(gen), 0.0, 1.0);
  return s;
}

inline Grid<double> uniform_scores(std::mt19937_64& gen, Index w, Index h) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Grid<double> s(h, w);
  for (Index i = 0; i < s.size(); ++i) s.data()[i] = u(gen);
  return s;
}

/// Mask from rows of '#' and '.'.
inline BinaryMask ascii_mask(const std::vector<std::string>& rows) {
  Grid<bool> bits(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index y = 0; y < bits.rows(); ++y)
    for (Index x = 0; x < bits.cols(); ++x) bits(y, x) = rows[y][x] == '#';
  return BinaryMask(bits);
}

inline BinaryMask rect_mask(Index w, Index h, Index x0, Index y0, Index x1, Index y1) {
  Grid<bool> bits = Grid<bool>::Zero(h, w);
  bits.block(y0, x0, y1 - y0, x1 - x0).setConstant(true);
  return BinaryMask(bits);
}

/// Pixels within `r` of (cx, cy).
inline BinaryMask disk_mask(Index w, Index h, Index cx, Index cy, double r) {
  Grid<bool> bits(h, w);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x)
      bits(y, x) = static_cast<double>((x - cx) * (x - cx) + (y - cy) * (y - cy)) <= r * r;
  return BinaryMask(bits);
}

/// Ground truth keyed by image reference, for in-process oracles.
class GtTable {
 public:
  void add(const std::string& image, BinaryMask gt) { table_->insert_or_assign(image, std::move(gt)); }
  promptseg::GroundTruthSource source() const {
    return [table = table_](const std::string& image) {
      const auto it = table->find(image);
      if (it == table->end()) throw promptseg::PreconditionError("unknown image " + image);
      return it->second;
    };
  }

 private:
  std::shared_ptr<std::map<std::string, BinaryMask>> table_ = std::make_shared<std::map<std::string, BinaryMask>>();
};

/// Oracle handle that counts segment and segment_sequence requests.
inline promptseg::SegmenterHandle counted_oracle(promptseg::OracleKind kind, promptseg::GroundTruthSource source,
                                                 std::shared_ptr<std::size_t> calls) {
  auto oracle = std::make_shared<const promptseg::Oracle>(kind, std::move(source));
  return promptseg::SegmenterHandle(promptseg::make_function_transport(
      [oracle, calls](const promptseg::json& req) {
        if (req.at("op") != "handshake") ++*calls;
        return oracle->serve(req);
      },
      promptseg::oracle_name(kind)));
}

/// Writes <root>/images and <root>/masks PNG pairs; the image file carries the mask pixels.
inline void write_image_pairs(const std::filesystem::path& root,
                              const std::vector<std::pair<std::string, BinaryMask>>& pairs) {
  std::filesystem::create_directories(root / "images");
  std::filesystem::create_directories(root / "masks");
  for (const auto& [stem, m] : pairs) {
    promptseg::save_mask_png(m, root / "images" / (stem + ".png"));
    promptseg::save_mask_png(m, root / "masks" / (stem + ".png"));
  }
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

/// Binary PGM bytes with the given maximum value.
inline std::string pgm_bytes(const Grid<int>& values, int maxval = 255) {
  std::string out = "P5\n" + std::to_string(values.cols()) + " " + std::to_string(values.rows()) + "\n" +
                    std::to_string(maxval) + "\n";
  for (Index i = 0; i < values.size(); ++i) out.push_back(static_cast<char>(values.data()[i]));
  return out;
}

}  // namespace fixtures
