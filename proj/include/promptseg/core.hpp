#pragma once

// Shared raster and prompt types.
//
// Coordinates: origin at the top-left pixel, x is the column and y the row.
// Boxes are half-open: a box covers columns [x_min, x_max) and rows
// [y_min, y_max).

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "promptseg/error.hpp"

namespace promptseg {

/// Row-major dense grid; row index is y, column index is x.
template <typename Scalar>
using Grid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Index = Eigen::Index;

/// Immutable binary raster. Ground truth, predictions and mask prompts all use it.
class BinaryMask {
 public:
  BinaryMask(Index width, Index height) : bits_(Grid<bool>::Zero(checked(height), checked(width))) {}

  explicit BinaryMask(Grid<bool> bits) : bits_(std::move(bits)) {
    if (bits_.rows() < 1 || bits_.cols() < 1) throw PreconditionError("BinaryMask: width and height must be >= 1");
  }

  /// Builds from any boolean Eigen expression, e.g. `BinaryMask(a.bits() && !b.bits())`.
  template <typename Derived>
  explicit BinaryMask(const Eigen::ArrayBase<Derived>& expr) : BinaryMask(Grid<bool>(expr)) {}

  Index width() const { return bits_.cols(); }
  Index height() const { return bits_.rows(); }
  Index size() const { return bits_.size(); }
  const Grid<bool>& bits() const { return bits_; }

  bool operator()(Index y, Index x) const { return bits_(y, x); }
  bool at(Index x, Index y) const { return bits_(y, x); }

  Index count() const { return bits_.count(); }
  bool empty() const { return !bits_.any(); }
  double foreground_fraction() const { return static_cast<double>(count()) / static_cast<double>(size()); }

  bool same_shape(const BinaryMask& other) const {
    return width() == other.width() && height() == other.height();
  }

  friend bool operator==(const BinaryMask& a, const BinaryMask& b) {
    return a.same_shape(b) && (a.bits_ == b.bits_).all();
  }

 private:
  static Index checked(Index n) {
    if (n < 1) throw PreconditionError("BinaryMask: width and height must be >= 1");
    return n;
  }

  Grid<bool> bits_;
};

inline BinaryMask operator&(const BinaryMask& a, const BinaryMask& b) { return BinaryMask(a.bits() && b.bits()); }
inline BinaryMask operator|(const BinaryMask& a, const BinaryMask& b) { return BinaryMask(a.bits() || b.bits()); }
inline BinaryMask operator~(const BinaryMask& a) { return BinaryMask(!a.bits()); }
/// Set difference a \ b.
inline BinaryMask operator-(const BinaryMask& a, const BinaryMask& b) { return BinaryMask(a.bits() && !b.bits()); }

inline void require_same_shape(const BinaryMask& a, const BinaryMask& b, const char* what) {
  if (!a.same_shape(b)) throw DimensionMismatch(std::string(what) + ": mask dimensions differ");
}

/// Immutable raster of scores in [0, 1].
template <typename Scalar>
class ScoreMapT {
 public:
  using ScalarType = Scalar;

  explicit ScoreMapT(Grid<Scalar> scores) : scores_(std::move(scores)) {
    if (scores_.rows() < 1 || scores_.cols() < 1) throw PreconditionError("ScoreMap: width and height must be >= 1");
    for (Index i = 0; i < scores_.size(); ++i) {
      const Scalar s = scores_.data()[i];
      if (!(s >= Scalar(0) && s <= Scalar(1))) throw PreconditionError("ScoreMap: scores must lie in [0, 1]");
    }
  }

  template <typename Derived>
  explicit ScoreMapT(const Eigen::ArrayBase<Derived>& expr) : ScoreMapT(Grid<Scalar>(expr)) {}

  Index width() const { return scores_.cols(); }
  Index height() const { return scores_.rows(); }
  Index size() const { return scores_.size(); }
  const Grid<Scalar>& scores() const { return scores_; }
  Scalar operator()(Index y, Index x) const { return scores_(y, x); }

 private:
  Grid<Scalar> scores_;
};

using ScoreMap = ScoreMapT<double>;

template <typename Scalar>
void require_same_shape(const ScoreMapT<Scalar>& a, const BinaryMask& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height())
    throw DimensionMismatch(std::string(what) + ": map dimensions differ");
}

/// Foreground iff score > threshold. Requires 0 <= threshold < 1.
template <typename Scalar>
BinaryMask binarize(const ScoreMapT<Scalar>& map, double threshold) {
  if (!(threshold >= 0.0 && threshold < 1.0)) throw PreconditionError("binarize: threshold must lie in [0, 1)");
  return BinaryMask(map.scores() > static_cast<Scalar>(threshold));
}

/// Lifts a mask to {0, 1} scores.
template <typename Scalar = double>
ScoreMapT<Scalar> lift(const BinaryMask& mask) {
  return ScoreMapT<Scalar>(mask.bits().template cast<Scalar>());
}

enum class PointLabel : std::uint8_t { background = 0, foreground = 1 };

struct PointPrompt {
  Index x = 0;
  Index y = 0;
  PointLabel label = PointLabel::foreground;

  friend bool operator==(const PointPrompt&, const PointPrompt&) = default;
};

struct BoxPrompt {
  Index x_min = 0;
  Index y_min = 0;
  Index x_max = 0;
  Index y_max = 0;

  Index box_width() const { return x_max - x_min; }
  Index box_height() const { return y_max - y_min; }
  friend bool operator==(const BoxPrompt&, const BoxPrompt&) = default;
};

struct EverythingPrompt {
  friend bool operator==(const EverythingPrompt&, const EverythingPrompt&) = default;
};

using PointList = std::vector<PointPrompt>;
using BoxList = std::vector<BoxPrompt>;

/// An (image, mask) exemplar used as context in in-context-learning mode.
struct ContextExemplar {
  std::string image;
  BinaryMask mask;
};

struct Prompt {
  std::variant<PointList, BoxList, BinaryMask, EverythingPrompt> kind;
  std::vector<ContextExemplar> context;

  static Prompt points(PointList p) { return Prompt{std::move(p), {}}; }
  static Prompt boxes(BoxList b) { return Prompt{std::move(b), {}}; }
  static Prompt mask(BinaryMask m) { return Prompt{std::move(m), {}}; }
  static Prompt everything() { return Prompt{EverythingPrompt{}, {}}; }

  bool is_points() const { return std::holds_alternative<PointList>(kind); }
  bool is_boxes() const { return std::holds_alternative<BoxList>(kind); }
  bool is_mask() const { return std::holds_alternative<BinaryMask>(kind); }
  bool is_everything() const { return std::holds_alternative<EverythingPrompt>(kind); }
};

bool point_in_bounds(const PointPrompt& p, Index width, Index height);
bool box_valid(const BoxPrompt& b, Index width, Index height);

/// Throws PreconditionError when a prompt violates its type invariants for an image of the given size.
void validate_prompt(const Prompt& prompt, Index width, Index height);

struct Frame {
  std::string image;
  BinaryMask gt;
};

enum class SequenceKind { video, volume };

/// Ordered frames (video) or slices (volume) with optional per-frame predictions.
class SequenceRecord {
 public:
  SequenceRecord(std::string id, SequenceKind kind, std::vector<Frame> frames);

  const std::string& id() const { return id_; }
  SequenceKind kind() const { return kind_; }
  const std::vector<Frame>& frames() const { return frames_; }
  std::size_t size() const { return frames_.size(); }
  Index width() const { return frames_.front().gt.width(); }
  Index height() const { return frames_.front().gt.height(); }

  const std::optional<std::vector<BinaryMask>>& predictions() const { return predictions_; }

  /// Returns a copy carrying one prediction per frame.
  SequenceRecord with_predictions(std::vector<BinaryMask> predictions) const;

 private:
  std::string id_;
  SequenceKind kind_;
  std::vector<Frame> frames_;
  std::optional<std::vector<BinaryMask>> predictions_;
};

/// Stacks masks vertically; pixel-count metrics on the stack equal their volumetric counterparts.
BinaryMask stack_rows(const std::vector<BinaryMask>& masks);

}  // namespace promptseg
