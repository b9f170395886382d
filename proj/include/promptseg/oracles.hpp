#pragma once

// Deterministic reference segmenters. They answer wire-protocol requests from ground
// truth alone, so every pipeline can run and be tested without a model.

#include <functional>
#include <memory>
#include <string>

#include "promptseg/segmenter.hpp"

namespace promptseg {

/// Looks up the ground truth for an image reference; throws when unknown.
using GroundTruthSource = std::function<BinaryMask(const std::string& image)>;

enum class OracleKind {
  gt,          ///< points: GT components under foreground clicks; boxes: GT ∩ boxes; mask: GT ∩ mask; everything: GT components
  echo,        ///< every prompt and every sequence frame answered with the full GT
  noisy,       ///< GT morphologically perturbed (seeded by image ref), one iteration less per extra click
  everything,  ///< everything mode only: GT components plus two distractor blobs disjoint from GT
  empty,       ///< always an empty mask
  identity,    ///< mask prompt echoed back; boxes filled; points empty
};

OracleKind parse_oracle_kind(const std::string& name);
const char* oracle_name(OracleKind kind);

class Oracle {
 public:
  Oracle(OracleKind kind, GroundTruthSource source, int connectivity = 8)
      : kind_(kind), source_(std::move(source)), connectivity_(connectivity) {}

  /// Answers one request object (handshake / segment / segment_sequence).
  json serve(const json& request) const;

  OracleKind kind() const { return kind_; }

 private:
  json handshake(const json& request) const;
  json segment(const json& request) const;
  json segment_sequence(const json& request) const;
  BinaryMask answer(const std::string& image, const BinaryMask& gt, const Prompt& prompt) const;

  OracleKind kind_;
  GroundTruthSource source_;
  int connectivity_;
};

/// Up to two 3x3 blobs placed (first fit, row-major) where they and a 1-pixel margin avoid the GT.
std::vector<BinaryMask> distractor_blobs(const BinaryMask& gt);

/// In-process transport; each request/reply is serialized to text and parsed back.
std::unique_ptr<Transport> make_loopback_transport(std::shared_ptr<const Oracle> oracle);

/// Convenience: a handle on an in-process oracle.
SegmenterHandle make_oracle_handle(OracleKind kind, GroundTruthSource source, int connectivity = 8);

/// Transport backed by an arbitrary request handler (tests and custom in-process models).
std::unique_ptr<Transport> make_function_transport(std::function<json(const json&)> handler, std::string name);

}  // namespace promptseg
