#pragma once

#include <cstdint>
#include <vector>

#include "promptseg/core.hpp"

namespace promptseg {

/// Labeled connected components; label 0 is background, components are numbered 1..count
/// in the order their first pixel appears in a row-major scan.
struct ComponentSet {
  Grid<std::int32_t> label_map;
  int count = 0;
  std::vector<Index> areas;  // areas[k - 1] is the pixel count of component k

  BinaryMask component(int label) const { return BinaryMask(label_map == label); }
};

ComponentSet connected_components(const BinaryMask& mask, int connectivity = 8);

/// Exact squared Euclidean distance from every pixel to the nearest site, and that site's
/// row-major linear index. Among equidistant sites the one with the smallest column wins,
/// then the smallest row. Pixels with no reachable site hold -1 in both grids.
struct FeatureTransform {
  Grid<std::int64_t> squared_distance;
  Grid<std::int64_t> nearest;
};

FeatureTransform feature_transform(const Grid<bool>& sites);

/// Euclidean distance from each foreground pixel to the nearest background pixel, with
/// everything outside the image counting as background. Background pixels hold 0.
Grid<double> distance_to_background(const BinaryMask& mask);

/// Pixel maximizing distance_to_background; ties go to the first pixel in row-major order.
/// Throws PreconditionError for an empty mask.
PointPrompt deepest_point(const BinaryMask& mask, PointLabel label = PointLabel::foreground);

/// Tightest half-open box around the foreground. Throws PreconditionError when empty.
BoxPrompt bounding_box(const BinaryMask& component);

/// One box per component, in label order, from a single pass over the label map.
std::vector<BoxPrompt> component_boxes(const ComponentSet& components);

enum class MorphOp { erode, dilate };

/// 3x3 cross structuring element applied `iterations` times. Pixels outside the image
/// never affect the result (OpenCV's default border behaviour).
BinaryMask morph(const BinaryMask& mask, MorphOp op, int iterations);

/// |entity ∩ gt| / |entity|.
double overlap_fraction(const BinaryMask& entity, const BinaryMask& gt);

/// Mask of the pixels inside a half-open box.
BinaryMask box_mask(const BoxPrompt& box, Index width, Index height);

}  // namespace promptseg
