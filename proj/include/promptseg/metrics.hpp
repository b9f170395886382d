#pragma once

// Segmentation and anomaly-detection scores.
//
// Soft-map metrics (MAE, S-measure, weighted F-measure) take a ScoreMapT<Scalar>; overlap
// metrics (BER, IoU, Dice) take binary masks. Ranking metrics accept any pair of Eigen
// dense expressions, so `auroc(map.scores().reshaped(), gt.bits().reshaped())` works.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "promptseg/core.hpp"
#include "promptseg/raster.hpp"

namespace promptseg {

enum class Polarity { higher_better, lower_better };

namespace metric_names {
inline constexpr const char* kMAE = "MAE";
inline constexpr const char* kSm = "Sm";
inline constexpr const char* kWFm = "wFm";
inline constexpr const char* kBER = "BER";
inline constexpr const char* kIoU = "IoU";
inline constexpr const char* kDice = "Dice";
inline constexpr const char* kAUROC = "AUROC";
inline constexpr const char* kAP = "AP";
inline constexpr const char* kPRO = "PRO";
}  // namespace metric_names

Polarity polarity_of(const std::string& name);
const char* polarity_arrow(Polarity p);

struct MetricValue {
  std::string name;
  double value = 0.0;
  Polarity polarity = Polarity::higher_better;
  /// Non-empty when the value comes from a degenerate-input rule (e.g. "empty_gt").
  std::string flag;
};

inline MetricValue make_metric(std::string name, double value, std::string flag = {}) {
  const auto p = polarity_of(name);
  return MetricValue{std::move(name), value, p, std::move(flag)};
}

namespace detail {

inline constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Confusion {
  Index tp = 0, fp = 0, fn = 0, tn = 0;
};

inline Confusion confusion(const BinaryMask& pred, const BinaryMask& gt) {
  Confusion c;
  c.tp = (pred.bits() && gt.bits()).count();
  c.fp = (pred.bits() && !gt.bits()).count();
  c.fn = (!pred.bits() && gt.bits()).count();
  c.tn = pred.size() - c.tp - c.fp - c.fn;
  return c;
}

/// Structural similarity of one quadrant; sample variances use N - 1 and are 0 for N < 2.
template <typename DerivedP, typename DerivedG>
double region_ssim(const Eigen::ArrayBase<DerivedP>& pred, const Eigen::ArrayBase<DerivedG>& gt) {
  const double n = static_cast<double>(pred.size());
  const double x = pred.mean();
  const double y = gt.mean();
  double sx = 0.0, sy = 0.0, sxy = 0.0;
  if (n > 1) {
    sx = (pred - x).square().sum() / (n - 1);
    sy = (gt - y).square().sum() / (n - 1);
    sxy = ((pred - x) * (gt - y)).sum() / (n - 1);
  }
  const double alpha = 4.0 * x * y * sxy;
  const double beta = (x * x + y * y) * (sx + sy);
  if (alpha != 0.0) return alpha / (beta + kEps);
  return beta == 0.0 ? 1.0 : 0.0;
}

/// Mean/std (ddof 1, 0 for a single value) similarity term of the object-aware score.
inline double object_similarity(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double sd = 0.0;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    sd = std::sqrt(ss / (n - 1));
  }
  return 2.0 * mean / (mean * mean + 1.0 + sd + kEps);
}

/// Normalized 2-D Gaussian window of odd `size`, with entries below eps*max zeroed.
Grid<double> gaussian_window(int size, double sigma);

/// Zero-padded 2-D correlation with a (symmetric) window.
Grid<double> filter_zero_padded(const Grid<double>& image, const Grid<double>& window);

}  // namespace detail

template <typename Scalar>
MetricValue mae(const ScoreMapT<Scalar>& pred, const BinaryMask& gt) {
  require_same_shape(pred, gt, "mae");
  const double v = (pred.scores() - gt.bits().template cast<Scalar>()).abs().template cast<double>().mean();
  return make_metric(metric_names::kMAE, v);
}

/// Structure measure: alpha * object-aware + (1 - alpha) * region-aware similarity.
/// Degenerate rules: empty gt -> 1 - mean(pred); full gt -> mean(pred).
template <typename Scalar>
MetricValue s_measure(const ScoreMapT<Scalar>& pred_map, const BinaryMask& gt_mask, double alpha = 0.5) {
  require_same_shape(pred_map, gt_mask, "s_measure");
  const Grid<double> pred = pred_map.scores().template cast<double>();
  const Grid<double> gt = gt_mask.bits().template cast<double>();
  const double fg = gt_mask.foreground_fraction();

  if (fg == 0.0) return make_metric(metric_names::kSm, 1.0 - pred.mean(), "empty_gt");
  if (fg == 1.0) return make_metric(metric_names::kSm, pred.mean(), "full_gt");

  std::vector<double> inside, outside;
  inside.reserve(gt_mask.count());
  outside.reserve(gt_mask.size() - gt_mask.count());
  double row_sum = 0.0, col_sum = 0.0;
  for (Index y = 0; y < pred.rows(); ++y) {
    for (Index x = 0; x < pred.cols(); ++x) {
      if (gt_mask(y, x)) {
        inside.push_back(pred(y, x));
        row_sum += static_cast<double>(y);
        col_sum += static_cast<double>(x);
      } else {
        outside.push_back(1.0 - pred(y, x));
      }
    }
  }
  const double object =
      fg * detail::object_similarity(inside) + (1.0 - fg) * detail::object_similarity(outside);

  // Centroid rounded half-to-even, shifted by one so quadrant [0, cy) includes the centroid row.
  const double n = static_cast<double>(inside.size());
  const Index cx = static_cast<Index>(std::nearbyint(col_sum / n)) + 1;
  const Index cy = static_cast<Index>(std::nearbyint(row_sum / n)) + 1;
  const Index h = pred.rows(), w = pred.cols();
  const double area = static_cast<double>(h * w);
  const double w1 = static_cast<double>(cx * cy) / area;
  const double w2 = static_cast<double>(cy * (w - cx)) / area;
  const double w3 = static_cast<double>((h - cy) * cx) / area;
  const double w4 = 1.0 - w1 - w2 - w3;

  double region = 0.0;
  auto add = [&](double weight, Index r0, Index c0, Index rows, Index cols) {
    if (rows <= 0 || cols <= 0) return;
    region += weight * detail::region_ssim(pred.block(r0, c0, rows, cols), gt.block(r0, c0, rows, cols));
  };
  add(w1, 0, 0, cy, cx);
  add(w2, 0, cx, cy, w - cx);
  add(w3, cy, 0, h - cy, cx);
  add(w4, cy, cx, h - cy, w - cx);

  const double sm = alpha * object + (1.0 - alpha) * region;
  return make_metric(metric_names::kSm, std::max(0.0, sm));
}

/// Weighted F-measure with Gaussian dependency weighting (7x7 window, `sigma`) and
/// distance-based importance weighting of background errors. Empty gt scores 0, flagged.
template <typename Scalar>
MetricValue weighted_f_measure(const ScoreMapT<Scalar>& pred_map, const BinaryMask& gt_mask, double beta2 = 1.0,
                               double sigma = 5.0) {
  require_same_shape(pred_map, gt_mask, "weighted_f_measure");
  if (gt_mask.empty()) return make_metric(metric_names::kWFm, 0.0, "empty_gt");

  const Grid<double> pred = pred_map.scores().template cast<double>();
  const Grid<double> gt = gt_mask.bits().template cast<double>();
  const Grid<double> err = (pred - gt).abs();

  const auto ft = feature_transform(gt_mask.bits());
  Grid<double> err_t = err;
  Grid<double> dist(err.rows(), err.cols());
  for (Index i = 0; i < err.size(); ++i) {
    dist.data()[i] = std::sqrt(static_cast<double>(ft.squared_distance.data()[i]));
    if (!gt_mask.bits().data()[i]) err_t.data()[i] = err.data()[ft.nearest.data()[i]];
  }

  const Grid<double> err_a = detail::filter_zero_padded(err_t, detail::gaussian_window(7, sigma));
  const Grid<double> min_err = (gt_mask.bits() && (err_a < err)).select(err_a, err);
  const Grid<double> importance =
      gt_mask.bits().select(Grid<double>::Ones(err.rows(), err.cols()), 2.0 - (std::log(0.5) / 5.0 * dist).exp());
  const Grid<double> weighted = min_err * importance;

  const double fg = static_cast<double>(gt_mask.count());
  const double err_fg = gt_mask.bits().select(weighted, 0.0).sum();
  const double err_bg = (!gt_mask.bits()).select(weighted, 0.0).sum();
  const double tp = fg - err_fg;
  const double recall = 1.0 - err_fg / fg;
  const double precision = tp / (tp + err_bg + detail::kEps);
  const double q = (1.0 + beta2) * recall * precision / (recall + beta2 * precision + detail::kEps);
  return make_metric(metric_names::kWFm, q);
}

/// Balanced error rate; a rate whose denominator is zero contributes 0.
inline MetricValue ber(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_shape(pred, gt, "ber");
  const auto c = detail::confusion(pred, gt);
  const double fpr = (c.fp + c.tn) ? static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn) : 0.0;
  const double fnr = (c.fn + c.tp) ? static_cast<double>(c.fn) / static_cast<double>(c.fn + c.tp) : 0.0;
  return make_metric(metric_names::kBER, 0.5 * (fpr + fnr));
}

inline MetricValue iou(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_shape(pred, gt, "iou");
  const Index inter = (pred.bits() && gt.bits()).count();
  const Index uni = (pred.bits() || gt.bits()).count();
  if (uni == 0) return make_metric(metric_names::kIoU, 1.0, "both_empty");
  return make_metric(metric_names::kIoU, static_cast<double>(inter) / static_cast<double>(uni));
}

/// 2I / (|P| + |G|), evaluated as 2 IoU / (1 + IoU) so the two scores agree to the last bit.
inline MetricValue dice(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_shape(pred, gt, "dice");
  const MetricValue j = iou(pred, gt);
  return make_metric(metric_names::kDice, 2.0 * j.value / (1.0 + j.value), j.flag);
}

namespace detail {

struct Ranked {
  std::vector<double> scores;
  std::vector<bool> labels;
  Index positives = 0;
};

template <typename DerivedS, typename DerivedL>
Ranked collect_ranked(const Eigen::DenseBase<DerivedS>& scores, const Eigen::DenseBase<DerivedL>& labels) {
  if (scores.size() != labels.size()) throw DimensionMismatch("ranking metric: scores and labels differ in length");
  Ranked r;
  r.scores.resize(scores.size());
  r.labels.resize(scores.size());
  Index i = 0;
  for (Index c = 0; c < scores.cols(); ++c) {
    for (Index row = 0; row < scores.rows(); ++row, ++i) {
      const double s = static_cast<double>(scores(row, c));
      if (!std::isfinite(s)) throw PreconditionError("ranking metric: non-finite score");
      r.scores[i] = s;
      r.labels[i] = static_cast<bool>(labels(row, c));
      r.positives += r.labels[i];
    }
  }
  return r;
}

double auroc_ranked(const Ranked& r);
double average_precision_ranked(const Ranked& r);

}  // namespace detail

/// Rank-based AUROC with midranks for ties. Needs both classes.
template <typename DerivedS, typename DerivedL>
MetricValue auroc(const Eigen::DenseBase<DerivedS>& scores, const Eigen::DenseBase<DerivedL>& labels) {
  return make_metric(metric_names::kAUROC, detail::auroc_ranked(detail::collect_ranked(scores, labels)));
}

/// Sum over recall steps of precision, thresholds at distinct scores. Needs a positive.
template <typename DerivedS, typename DerivedL>
MetricValue average_precision(const Eigen::DenseBase<DerivedS>& scores, const Eigen::DenseBase<DerivedL>& labels) {
  return make_metric(metric_names::kAP, detail::average_precision_ranked(detail::collect_ranked(scores, labels)));
}

/// Per-region overlap curve integrated over false-positive rate in [0, fpr_cap] and
/// normalized by fpr_cap. Curve points are the thresholds `score >= t` at every distinct
/// score whose FPR is within the cap; beyond the last such point the curve is held flat.
MetricValue pro_from_flat(const std::vector<double>& scores, const std::vector<bool>& labels,
                          const std::vector<std::int64_t>& region_ids, std::int64_t region_count, double fpr_cap);

template <typename Scalar>
MetricValue pro(const std::vector<ScoreMapT<Scalar>>& maps, const std::vector<BinaryMask>& gts, double fpr_cap = 0.3,
                int connectivity = 8) {
  if (maps.size() != gts.size()) throw DimensionMismatch("pro: map and gt lists differ in length");
  std::vector<double> scores;
  std::vector<bool> labels;
  std::vector<std::int64_t> region;
  std::int64_t offset = 0;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    require_same_shape(maps[i], gts[i], "pro");
    const auto cc = connected_components(gts[i], connectivity);
    for (Index p = 0; p < maps[i].size(); ++p) {
      scores.push_back(static_cast<double>(maps[i].scores().data()[p]));
      labels.push_back(gts[i].bits().data()[p]);
      const auto l = cc.label_map.data()[p];
      region.push_back(l ? offset + l - 1 : -1);
    }
    offset += cc.count;
  }
  return pro_from_flat(scores, labels, region, offset, fpr_cap);
}

}  // namespace promptseg
