#include "promptseg/raster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace promptseg {
namespace {

std::int32_t find_root(std::vector<std::int32_t>& parent, std::int32_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

void unite(std::vector<std::int32_t>& parent, std::int32_t a, std::int32_t b) {
  a = find_root(parent, a);
  b = find_root(parent, b);
  if (a == b) return;
  if (a < b) parent[b] = a;
  else parent[a] = b;
}

std::int64_t floor_div(std::int64_t num, std::int64_t den) {
  std::int64_t q = num / den;
  if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
  return q;
}

}  // namespace

ComponentSet connected_components(const BinaryMask& mask, int connectivity) {
  if (connectivity != 4 && connectivity != 8) throw PreconditionError("connected_components: connectivity must be 4 or 8");
  const Index h = mask.height(), w = mask.width();
  const auto& bits = mask.bits();

  ComponentSet out;
  out.label_map = Grid<std::int32_t>::Zero(h, w);
  auto& labels = out.label_map;
  std::vector<std::int32_t> parent{0};

  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) {
      if (!bits(y, x)) continue;
      std::int32_t nb[4];
      int n = 0;
      if (x > 0 && labels(y, x - 1)) nb[n++] = labels(y, x - 1);
      if (y > 0) {
        if (labels(y - 1, x)) nb[n++] = labels(y - 1, x);
        if (connectivity == 8) {
          if (x > 0 && labels(y - 1, x - 1)) nb[n++] = labels(y - 1, x - 1);
          if (x + 1 < w && labels(y - 1, x + 1)) nb[n++] = labels(y - 1, x + 1);
        }
      }
      if (n == 0) {
        const auto id = static_cast<std::int32_t>(parent.size());
        parent.push_back(id);
        labels(y, x) = id;
        continue;
      }
      std::int32_t best = nb[0];
      for (int i = 1; i < n; ++i) best = std::min(best, nb[i]);
      labels(y, x) = best;
      for (int i = 0; i < n; ++i) unite(parent, best, nb[i]);
    }
  }

  std::vector<std::int32_t> final_label(parent.size(), 0);
  for (Index i = 0; i < labels.size(); ++i) {
    auto& l = labels.data()[i];
    if (!l) continue;
    const auto root = find_root(parent, l);
    if (!final_label[root]) {
      final_label[root] = ++out.count;
      out.areas.push_back(0);
    }
    l = final_label[root];
    ++out.areas[l - 1];
  }
  return out;
}

FeatureTransform feature_transform(const Grid<bool>& sites) {
  const Index h = sites.rows(), w = sites.cols();
  constexpr std::int64_t kNone = -1;

  // Column pass: vertical offset to the nearest site in the same column (ties -> upper site).
  Grid<std::int64_t> gdist(h, w), grow(h, w);
  std::vector<std::int64_t> up(h), down(h);
  for (Index x = 0; x < w; ++x) {
    std::int64_t last = kNone;
    for (Index y = 0; y < h; ++y) {
      if (sites(y, x)) last = y;
      up[y] = last;
    }
    last = kNone;
    for (Index y = h - 1; y >= 0; --y) {
      if (sites(y, x)) last = y;
      down[y] = last;
    }
    for (Index y = 0; y < h; ++y) {
      const std::int64_t du = up[y] == kNone ? kNone : y - up[y];
      const std::int64_t dd = down[y] == kNone ? kNone : down[y] - y;
      if (du == kNone && dd == kNone) {
        gdist(y, x) = kNone;
        grow(y, x) = kNone;
      } else if (dd == kNone || (du != kNone && du <= dd)) {
        gdist(y, x) = du;
        grow(y, x) = up[y];
      } else {
        gdist(y, x) = dd;
        grow(y, x) = down[y];
      }
    }
  }

  // Row pass: lower envelope of parabolas (x - i)^2 + g(i)^2.
  FeatureTransform out{Grid<std::int64_t>::Constant(h, w, kNone), Grid<std::int64_t>::Constant(h, w, kNone)};
  std::vector<std::int64_t> s(w), t(w);
  for (Index y = 0; y < h; ++y) {
    auto g2 = [&](std::int64_t i) { return gdist(y, i) * gdist(y, i); };
    auto f = [&](std::int64_t x, std::int64_t i) { return (x - i) * (x - i) + g2(i); };
    Index q = -1;
    for (Index u = 0; u < w; ++u) {
      if (gdist(y, u) == kNone) continue;
      while (q >= 0 && f(t[q], s[q]) > f(t[q], u)) --q;
      if (q < 0) {
        q = 0;
        s[0] = u;
        t[0] = 0;
      } else {
        const std::int64_t sep = floor_div(u * u - s[q] * s[q] + g2(u) - g2(s[q]), 2 * (u - s[q]));
        const std::int64_t start = sep + 1;
        if (start < w) {
          ++q;
          s[q] = u;
          t[q] = start;
        }
      }
    }
    if (q < 0) continue;
    for (Index x = w - 1; x >= 0; --x) {
      out.squared_distance(y, x) = f(x, s[q]);
      out.nearest(y, x) = grow(y, s[q]) * w + s[q];
      if (x == t[q]) --q;
    }
  }
  return out;
}

Grid<double> distance_to_background(const BinaryMask& mask) {
  const Index h = mask.height(), w = mask.width();
  const auto ft = feature_transform(!mask.bits());
  Grid<double> out(h, w);
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) {
      if (!mask(y, x)) {
        out(y, x) = 0.0;
        continue;
      }
      const std::int64_t border = std::min({y + 1, x + 1, h - y, w - x});
      std::int64_t d2 = border * border;
      if (ft.squared_distance(y, x) >= 0) d2 = std::min(d2, ft.squared_distance(y, x));
      out(y, x) = std::sqrt(static_cast<double>(d2));
    }
  }
  return out;
}

PointPrompt deepest_point(const BinaryMask& mask, PointLabel label) {
  if (mask.empty()) throw PreconditionError("deepest_point: mask is empty");
  const auto dist = distance_to_background(mask);
  Index best = 0;
  for (Index i = 1; i < dist.size(); ++i)
    if (dist.data()[i] > dist.data()[best]) best = i;
  return PointPrompt{best % mask.width(), best / mask.width(), label};
}

BoxPrompt bounding_box(const BinaryMask& component) {
  if (component.empty()) throw PreconditionError("bounding_box: component is empty");
  const auto& bits = component.bits();
  const auto rows = bits.rowwise().any();
  const auto cols = bits.colwise().any();
  BoxPrompt box;
  Index lo = 0, hi = bits.rows() - 1;
  while (!rows(lo)) ++lo;
  while (!rows(hi)) --hi;
  box.y_min = lo;
  box.y_max = hi + 1;
  lo = 0;
  hi = bits.cols() - 1;
  while (!cols(lo)) ++lo;
  while (!cols(hi)) --hi;
  box.x_min = lo;
  box.x_max = hi + 1;
  return box;
}

std::vector<BoxPrompt> component_boxes(const ComponentSet& components) {
  const Index h = components.label_map.rows(), w = components.label_map.cols();
  std::vector<BoxPrompt> boxes(components.count, BoxPrompt{w, h, 0, 0});
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) {
      const auto l = components.label_map(y, x);
      if (!l) continue;
      auto& b = boxes[l - 1];
      b.x_min = std::min(b.x_min, x);
      b.y_min = std::min(b.y_min, y);
      b.x_max = std::max(b.x_max, x + 1);
      b.y_max = std::max(b.y_max, y + 1);
    }
  }
  return boxes;
}

BinaryMask morph(const BinaryMask& mask, MorphOp op, int iterations) {
  if (iterations < 0) throw PreconditionError("morph: iterations must be >= 0");
  Grid<bool> cur = mask.bits();
  const Index h = cur.rows(), w = cur.cols();
  for (int it = 0; it < iterations; ++it) {
    Grid<bool> next = cur;
    if (op == MorphOp::erode) {
      if (h > 1) {
        next.topRows(h - 1) = next.topRows(h - 1) && cur.bottomRows(h - 1);
        next.bottomRows(h - 1) = next.bottomRows(h - 1) && cur.topRows(h - 1);
      }
      if (w > 1) {
        next.leftCols(w - 1) = next.leftCols(w - 1) && cur.rightCols(w - 1);
        next.rightCols(w - 1) = next.rightCols(w - 1) && cur.leftCols(w - 1);
      }
    } else {
      if (h > 1) {
        next.topRows(h - 1) = next.topRows(h - 1) || cur.bottomRows(h - 1);
        next.bottomRows(h - 1) = next.bottomRows(h - 1) || cur.topRows(h - 1);
      }
      if (w > 1) {
        next.leftCols(w - 1) = next.leftCols(w - 1) || cur.rightCols(w - 1);
        next.rightCols(w - 1) = next.rightCols(w - 1) || cur.leftCols(w - 1);
      }
    }
    if ((next == cur).all()) break;
    cur = std::move(next);
  }
  return BinaryMask(std::move(cur));
}

double overlap_fraction(const BinaryMask& entity, const BinaryMask& gt) {
  require_same_shape(entity, gt, "overlap_fraction");
  const Index area = entity.count();
  if (area == 0) throw PreconditionError("overlap_fraction: entity is empty");
  return static_cast<double>((entity.bits() && gt.bits()).count()) / static_cast<double>(area);
}

BinaryMask box_mask(const BoxPrompt& box, Index width, Index height) {
  Grid<bool> bits = Grid<bool>::Zero(height, width);
  const Index x0 = std::clamp<Index>(box.x_min, 0, width), x1 = std::clamp<Index>(box.x_max, 0, width);
  const Index y0 = std::clamp<Index>(box.y_min, 0, height), y1 = std::clamp<Index>(box.y_max, 0, height);
  if (x1 > x0 && y1 > y0) bits.block(y0, x0, y1 - y0, x1 - x0).setConstant(true);
  return BinaryMask(std::move(bits));
}

}  // namespace promptseg
