#include "promptseg/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace promptseg {

Polarity polarity_of(const std::string& name) {
  // Strip an "I-" / "P-" level prefix.
  const std::string base = (name.size() > 2 && name[1] == '-') ? name.substr(2) : name;
  if (base == metric_names::kMAE || base == metric_names::kBER) return Polarity::lower_better;
  return Polarity::higher_better;
}

const char* polarity_arrow(Polarity p) { return p == Polarity::higher_better ? "↑" : "↓"; }

namespace detail {

Grid<double> gaussian_window(int size, double sigma) {
  const int half = (size - 1) / 2;
  Grid<double> k(size, size);
  for (int y = -half; y <= half; ++y)
    for (int x = -half; x <= half; ++x) k(y + half, x + half) = std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
  const double cutoff = std::numeric_limits<double>::epsilon() * k.maxCoeff();
  k = (k < cutoff).select(0.0, k);
  const double total = k.sum();
  if (total != 0.0) k /= total;
  return k;
}

Grid<double> filter_zero_padded(const Grid<double>& image, const Grid<double>& window) {
  const Index h = image.rows(), w = image.cols();
  const Index kh = window.rows() / 2, kw = window.cols() / 2;
  Grid<double> out = Grid<double>::Zero(h, w);
  for (Index dy = -kh; dy <= kh; ++dy) {
    for (Index dx = -kw; dx <= kw; ++dx) {
      const double wt = window(dy + kh, dx + kw);
      if (wt == 0.0) continue;
      // out(y, x) += wt * image(y + dy, x + dx) over the overlap.
      const Index y0 = std::max<Index>(0, -dy), y1 = std::min<Index>(h, h - dy);
      const Index x0 = std::max<Index>(0, -dx), x1 = std::min<Index>(w, w - dx);
      if (y1 <= y0 || x1 <= x0) continue;
      out.block(y0, x0, y1 - y0, x1 - x0) += wt * image.block(y0 + dy, x0 + dx, y1 - y0, x1 - x0);
    }
  }
  return out;
}

namespace {

std::vector<std::size_t> order_by_score_desc(const std::vector<double>& scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

double auroc_ranked(const Ranked& r) {
  const auto n = static_cast<Index>(r.scores.size());
  const Index pos = r.positives, neg = n - r.positives;
  if (pos == 0 || neg == 0) throw UndefinedMetric("auroc: needs at least one positive and one negative label");

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return r.scores[a] < r.scores[b]; });

  // Sum of (1-based) midranks of the positives.
  double rank_sum = 0.0;
  for (Index i = 0; i < n;) {
    Index j = i;
    Index pos_in_group = 0;
    while (j < n && r.scores[idx[j]] == r.scores[idx[i]]) pos_in_group += r.labels[idx[j++]];
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    rank_sum += midrank * static_cast<double>(pos_in_group);
    i = j;
  }
  const double p = static_cast<double>(pos), q = static_cast<double>(neg);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

double average_precision_ranked(const Ranked& r) {
  if (r.positives == 0) throw UndefinedMetric("average_precision: needs at least one positive label");
  const auto idx = order_by_score_desc(r.scores);
  const auto n = idx.size();
  const double total_pos = static_cast<double>(r.positives);
  double tp = 0.0, fp = 0.0, prev_recall = 0.0, ap = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && r.scores[idx[j]] == r.scores[idx[i]]) {
      if (r.labels[idx[j]]) tp += 1.0;
      else fp += 1.0;
      ++j;
    }
    const double recall = tp / total_pos;
    ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
    i = j;
  }
  return ap;
}

}  // namespace detail

MetricValue pro_from_flat(const std::vector<double>& scores, const std::vector<bool>& labels,
                          const std::vector<std::int64_t>& region_ids, std::int64_t region_count, double fpr_cap) {
  if (!(fpr_cap > 0.0 && fpr_cap <= 1.0)) throw PreconditionError("pro: fpr_cap must lie in (0, 1]");
  if (region_count == 0) throw UndefinedMetric("pro: no anomalous pixels in any ground truth");
  const auto negatives = static_cast<double>(std::count(labels.begin(), labels.end(), false));
  if (negatives == 0.0) throw UndefinedMetric("pro: no normal pixels, false-positive rate undefined");

  std::vector<double> inv_area(region_count, 0.0);
  for (auto id : region_ids)
    if (id >= 0) inv_area[id] += 1.0;
  for (auto& a : inv_area) a = 1.0 / a;

  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double fp = 0.0, recall_sum = 0.0;
  double prev_fpr = 0.0, prev_pro = 0.0, area = 0.0;
  const auto n = idx.size();
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) {
      const auto p = idx[j++];
      if (region_ids[p] >= 0) recall_sum += inv_area[region_ids[p]];
      else if (!labels[p]) fp += 1.0;
    }
    const double fpr = fp / negatives;
    if (fpr > fpr_cap) break;
    const double pro = std::min(1.0, recall_sum / static_cast<double>(region_count));
    area += 0.5 * (fpr - prev_fpr) * (pro + prev_pro);
    prev_fpr = fpr;
    prev_pro = pro;
    i = j;
  }
  area += (fpr_cap - prev_fpr) * prev_pro;
  return make_metric("PRO", area / fpr_cap);
}

}  // namespace promptseg
