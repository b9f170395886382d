#pragma once

// Client side of the segmenter wire protocol.
//
// Messages are JSON objects. Over stdio each message is framed as its byte length in
// ASCII decimal, a '\n', then the JSON bytes. Over HTTP the same bodies are POSTed to
// /handshake, /segment and /segment_sequence. See docs/protocol.md.

#include <chrono>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "promptseg/core.hpp"

namespace promptseg {

using json = nlohmann::json;

inline constexpr const char* kProtocolVersion = "promptseg/1";

/// Run-length text form: "<W>x<H>;<v>:<n>,<v>:<n>,..." with row-major runs of alternating
/// value, the first run always background (its count may be 0), counts summing to W*H.
std::string encode_rle(const BinaryMask& mask);
/// Throws ProtocolError on any deviation from the grammar.
BinaryMask decode_rle(std::string_view text);

enum class Capability { points, boxes, mask, everything, context_memory };

const char* capability_name(Capability c);

struct Capabilities {
  bool points = false;
  bool boxes = false;
  bool mask = false;
  bool everything = false;
  bool context_memory = false;
  /// Concurrent independent sessions the endpoint accepts; 0 means unlimited.
  int sessions = 1;
  std::string name;
  std::string protocol;

  bool has(Capability c) const;
};

json prompt_to_json(const Prompt& prompt);
Prompt prompt_from_json(const json& j);

struct Candidate {
  BinaryMask mask;
  double score = 0.0;
};

/// One of: a single mask, scored candidates, or an entity list (everything mode).
struct SegmentResponse {
  std::variant<BinaryMask, std::vector<Candidate>, std::vector<BinaryMask>> body;

  bool is_entities() const { return body.index() == 2; }
};

/// The mask, or the highest-scoring candidate (first on ties). Throws ProtocolError for entity lists.
BinaryMask best_mask(const SegmentResponse& response);

/// A GT-derived prompt attached to one frame of a sequence request.
struct ScheduledPrompt {
  std::size_t frame = 0;
  Prompt prompt;
};

class Transport {
 public:
  virtual ~Transport() = default;
  /// Sends one request and returns the parsed reply. Throws TransportError.
  virtual json call(const json& request) = 0;
  virtual std::string describe() const = 0;
};

/// A connection to one segmenter session; capabilities come from the handshake made at construction.
class SegmenterHandle {
 public:
  explicit SegmenterHandle(std::unique_ptr<Transport> transport);

  const Capabilities& capabilities() const { return caps_; }
  std::string describe() const { return transport_->describe(); }

  /// Repeats the handshake. Throws ProtocolError on version mismatch.
  const Capabilities& handshake();

  SegmentResponse segment(const std::string& image, Index width, Index height, const Prompt& prompt);

  /// One mask per frame. Requires the context_memory capability (checked before any transport use).
  std::vector<BinaryMask> segment_sequence(const std::vector<std::string>& frames, Index width, Index height,
                                           const std::vector<ScheduledPrompt>& prompts,
                                           const std::vector<ContextExemplar>& context = {});

  /// Number of segment / segment_sequence requests sent so far.
  std::size_t request_count() const { return requests_; }

 private:
  void require(Capability c) const;
  json checked_call(const json& request);

  std::unique_ptr<Transport> transport_;
  Capabilities caps_;
  std::size_t requests_ = 0;
};

/// Capabilities a prompt needs.
std::vector<Capability> required_capabilities(const Prompt& prompt);

/// Spawns `command` through /bin/sh and talks framed JSON over its stdin/stdout. On a
/// failed exchange the child is restarted and the request resent once.
std::unique_ptr<Transport> make_stdio_transport(std::string command,
                                                std::chrono::milliseconds timeout = std::chrono::seconds(60));

/// POSTs to `<url>/<op>`; url is "http://host:port". One retry on failure.
std::unique_ptr<Transport> make_http_transport(std::string url,
                                               std::chrono::milliseconds timeout = std::chrono::seconds(60));

/// Framing helpers shared with servers. read_frame returns false on clean EOF.
bool read_frame(int fd, std::string& payload, int timeout_ms = -1);
void write_frame(int fd, std::string_view payload);

}  // namespace promptseg
