#include "promptseg/core.hpp"

namespace promptseg {

bool point_in_bounds(const PointPrompt& p, Index width, Index height) {
  return p.x >= 0 && p.x < width && p.y >= 0 && p.y < height;
}

bool box_valid(const BoxPrompt& b, Index width, Index height) {
  return b.x_min >= 0 && b.y_min >= 0 && b.x_min < b.x_max && b.y_min < b.y_max && b.x_max <= width &&
         b.y_max <= height;
}

void validate_prompt(const Prompt& prompt, Index width, Index height) {
  if (const auto* pts = std::get_if<PointList>(&prompt.kind)) {
    if (pts->empty()) throw PreconditionError("prompt: point list is empty");
    for (const auto& p : *pts)
      if (!point_in_bounds(p, width, height)) throw PreconditionError("prompt: point outside image bounds");
  } else if (const auto* boxes = std::get_if<BoxList>(&prompt.kind)) {
    if (boxes->empty()) throw PreconditionError("prompt: box list is empty");
    for (const auto& b : *boxes)
      if (!box_valid(b, width, height)) throw PreconditionError("prompt: box is degenerate or outside image bounds");
  } else if (const auto* mask = std::get_if<BinaryMask>(&prompt.kind)) {
    if (mask->width() != width || mask->height() != height)
      throw DimensionMismatch("prompt: mask prompt dimensions differ from the image");
  }
  for (const auto& ex : prompt.context)
    if (ex.image.empty()) throw PreconditionError("prompt: context exemplar without image reference");
}

SequenceRecord::SequenceRecord(std::string id, SequenceKind kind, std::vector<Frame> frames)
    : id_(std::move(id)), kind_(kind), frames_(std::move(frames)) {
  if (frames_.empty()) throw PreconditionError("SequenceRecord: no frames");
  for (const auto& f : frames_)
    if (!f.gt.same_shape(frames_.front().gt)) throw DimensionMismatch("SequenceRecord: frames differ in size");
}

SequenceRecord SequenceRecord::with_predictions(std::vector<BinaryMask> predictions) const {
  if (predictions.size() != frames_.size())
    throw PreconditionError("SequenceRecord: prediction count must equal frame count");
  for (const auto& p : predictions)
    if (!p.same_shape(frames_.front().gt)) throw DimensionMismatch("SequenceRecord: prediction size differs");
  SequenceRecord out = *this;
  out.predictions_ = std::move(predictions);
  return out;
}

BinaryMask stack_rows(const std::vector<BinaryMask>& masks) {
  if (masks.empty()) throw PreconditionError("stack_rows: no masks");
  const Index w = masks.front().width();
  Index rows = 0;
  for (const auto& m : masks) {
    if (m.width() != w) throw DimensionMismatch("stack_rows: widths differ");
    rows += m.height();
  }
  Grid<bool> out(rows, w);
  Index r = 0;
  for (const auto& m : masks) {
    out.middleRows(r, m.height()) = m.bits();
    r += m.height();
  }
  return BinaryMask(std::move(out));
}

}  // namespace promptseg
