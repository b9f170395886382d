#include "promptseg/segmenter.hpp"

#include <algorithm>
#include <charconv>

#include "promptseg/error.hpp"

namespace promptseg {
namespace {

Index parse_index(std::string_view s, std::string_view what) {
  Index v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ProtocolError("rle: bad " + std::string(what) + " '" + std::string(s) + "'");
  return v;
}

PointLabel parse_label(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "fg") return PointLabel::foreground;
    if (s == "bg") return PointLabel::background;
  }
  throw ProtocolError("prompt: point label must be \"fg\" or \"bg\"");
}

}  // namespace

std::string encode_rle(const BinaryMask& mask) {
  std::string out = std::to_string(mask.width()) + "x" + std::to_string(mask.height()) + ";";
  const auto& bits = mask.bits();
  const bool* data = bits.data();
  const Index n = bits.size();
  bool value = false;
  Index i = 0;
  bool first = true;
  while (i < n || first) {
    Index j = i;
    while (j < n && data[j] == value) ++j;
    if (!first) out += ',';
    out += (value ? "1:" : "0:") + std::to_string(j - i);
    first = false;
    i = j;
    value = !value;
  }
  return out;
}

BinaryMask decode_rle(std::string_view text) {
  const auto semi = text.find(';');
  const auto x = text.find('x');
  if (semi == std::string_view::npos || x == std::string_view::npos || x > semi)
    throw ProtocolError("rle: expected '<W>x<H>;runs'");
  const Index w = parse_index(text.substr(0, x), "width");
  const Index h = parse_index(text.substr(x + 1, semi - x - 1), "height");
  if (w < 1 || h < 1) throw ProtocolError("rle: dimensions must be >= 1");
  Grid<bool> bits(h, w);
  bool* data = bits.data();
  const Index n = w * h;
  Index pos = 0;
  bool expect = false;
  bool first = true;
  auto runs = text.substr(semi + 1);
  while (!runs.empty()) {
    const auto comma = runs.find(',');
    const auto run = runs.substr(0, comma);
    if (run.size() < 3 || run[1] != ':') throw ProtocolError("rle: malformed run '" + std::string(run) + "'");
    const bool value = run[0] == '1';
    if ((run[0] != '0' && run[0] != '1') || value != expect)
      throw ProtocolError("rle: runs must alternate starting with background");
    const Index count = parse_index(run.substr(2), "run length");
    if (count < 0 || (count == 0 && !first)) throw ProtocolError("rle: only the first run may be empty");
    if (pos + count > n) throw ProtocolError("rle: runs exceed W*H");
    std::fill(data + pos, data + pos + count, value);
    pos += count;
    expect = !expect;
    first = false;
    if (comma == std::string_view::npos) break;
    runs.remove_prefix(comma + 1);
    if (runs.empty()) throw ProtocolError("rle: trailing ','");
  }
  if (first || pos != n) throw ProtocolError("rle: runs do not cover W*H pixels");
  return BinaryMask(std::move(bits));
}

const char* capability_name(Capability c) {
  switch (c) {
    case Capability::points: return "points";
    case Capability::boxes: return "boxes";
    case Capability::mask: return "mask";
    case Capability::everything: return "everything";
    case Capability::context_memory: return "context_memory";
  }
  return "?";
}

bool Capabilities::has(Capability c) const {
  switch (c) {
    case Capability::points: return points;
    case Capability::boxes: return boxes;
    case Capability::mask: return mask;
    case Capability::everything: return everything;
    case Capability::context_memory: return context_memory;
  }
  return false;
}

json prompt_to_json(const Prompt& prompt) {
  json j;
  if (const auto* pts = std::get_if<PointList>(&prompt.kind)) {
    j["kind"] = "points";
    j["points"] = json::array();
    for (const auto& p : *pts)
      j["points"].push_back({{"x", p.x}, {"y", p.y}, {"label", p.label == PointLabel::foreground ? "fg" : "bg"}});
  } else if (const auto* boxes = std::get_if<BoxList>(&prompt.kind)) {
    j["kind"] = "boxes";
    j["boxes"] = json::array();
    for (const auto& b : *boxes) j["boxes"].push_back({b.x_min, b.y_min, b.x_max, b.y_max});
  } else if (const auto* m = std::get_if<BinaryMask>(&prompt.kind)) {
    j["kind"] = "mask";
    j["mask"] = encode_rle(*m);
  } else {
    j["kind"] = "everything";
  }
  if (!prompt.context.empty()) {
    j["context"] = json::array();
    for (const auto& ex : prompt.context) j["context"].push_back({{"image", ex.image}, {"mask", encode_rle(ex.mask)}});
  }
  return j;
}

Prompt prompt_from_json(const json& j) {
  try {
    Prompt p = Prompt::everything();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "points") {
      PointList pts;
      for (const auto& e : j.at("points"))
        pts.push_back({e.at("x").get<Index>(), e.at("y").get<Index>(), parse_label(e.at("label"))});
      p = Prompt::points(std::move(pts));
    } else if (kind == "boxes") {
      BoxList boxes;
      for (const auto& e : j.at("boxes")) {
        if (!e.is_array() || e.size() != 4) throw ProtocolError("prompt: box must be [x_min, y_min, x_max, y_max]");
        boxes.push_back({e[0].get<Index>(), e[1].get<Index>(), e[2].get<Index>(), e[3].get<Index>()});
      }
      p = Prompt::boxes(std::move(boxes));
    } else if (kind == "mask") {
      p = Prompt::mask(decode_rle(j.at("mask").get<std::string>()));
    } else if (kind != "everything") {
      throw ProtocolError("prompt: unknown kind '" + kind + "'");
    }
    if (j.contains("context"))
      for (const auto& e : j.at("context"))
        p.context.push_back({e.at("image").get<std::string>(), decode_rle(e.at("mask").get<std::string>())});
    return p;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("prompt: ") + e.what());
  }
}

BinaryMask best_mask(const SegmentResponse& response) {
  if (const auto* m = std::get_if<BinaryMask>(&response.body)) return *m;
  if (const auto* c = std::get_if<std::vector<Candidate>>(&response.body)) {
    if (c->empty()) throw ProtocolError("segment: empty candidate list");
    const auto best = std::max_element(c->begin(), c->end(),
                                       [](const Candidate& a, const Candidate& b) { return a.score < b.score; });
    return best->mask;
  }
  throw ProtocolError("segment: expected a mask, got an entity list");
}

std::vector<Capability> required_capabilities(const Prompt& prompt) {
  std::vector<Capability> out;
  if (prompt.is_points()) out.push_back(Capability::points);
  else if (prompt.is_boxes()) out.push_back(Capability::boxes);
  else if (prompt.is_mask()) out.push_back(Capability::mask);
  else out.push_back(Capability::everything);
  if (!prompt.context.empty()) out.push_back(Capability::context_memory);
  return out;
}

SegmenterHandle::SegmenterHandle(std::unique_ptr<Transport> transport) : transport_(std::move(transport)) {
  handshake();
}

const Capabilities& SegmenterHandle::handshake() {
  const json reply = checked_call({{"op", "handshake"}, {"protocol", kProtocolVersion}});
  Capabilities caps;
  try {
    caps.protocol = reply.at("protocol").get<std::string>();
    if (caps.protocol != kProtocolVersion)
      throw ProtocolError("handshake: protocol version mismatch: peer speaks '" + caps.protocol + "', expected '" +
                          kProtocolVersion + "'");
    for (const auto& c : reply.at("capabilities")) {
      const auto s = c.get<std::string>();
      if (s == "points") caps.points = true;
      else if (s == "boxes") caps.boxes = true;
      else if (s == "mask") caps.mask = true;
      else if (s == "everything") caps.everything = true;
      else if (s == "context_memory") caps.context_memory = true;
    }
    caps.sessions = reply.value("sessions", 1);
    caps.name = reply.value("name", std::string("unnamed"));
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("handshake: malformed reply: ") + e.what());
  }
  caps_ = std::move(caps);
  return caps_;
}

void SegmenterHandle::require(Capability c) const {
  if (!caps_.has(c))
    throw CapabilityError(std::string("segmenter '") + caps_.name + "' does not declare capability '" +
                          capability_name(c) + "'");
}

json SegmenterHandle::checked_call(const json& request) {
  json reply = transport_->call(request);
  if (!reply.is_object()) throw ProtocolError("reply is not a JSON object");
  if (reply.contains("error")) {
    const auto msg = reply["error"].is_string() ? reply["error"].get<std::string>() : reply["error"].dump();
    if (request.value("op", "") == "handshake" && reply.contains("protocol") &&
        reply["protocol"] != kProtocolVersion)
      throw ProtocolError("handshake: protocol version mismatch: " + msg);
    throw TransportError("segmenter reported an error: " + msg);
  }
  return reply;
}

SegmentResponse SegmenterHandle::segment(const std::string& image, Index width, Index height, const Prompt& prompt) {
  for (auto c : required_capabilities(prompt)) require(c);
  validate_prompt(prompt, width, height);
  json request = {{"op", "segment"}, {"image", image}, {"width", width}, {"height", height},
                  {"prompt", prompt_to_json(prompt)}};
  ++requests_;
  const json reply = checked_call(request);

  auto checked = [&](const json& rle) {
    BinaryMask m = decode_rle(rle.get<std::string>());
    if (m.width() != width || m.height() != height)
      throw ProtocolError("segment: reply mask is " + std::to_string(m.width()) + "x" + std::to_string(m.height()) +
                          ", expected " + std::to_string(width) + "x" + std::to_string(height));
    return m;
  };
  try {
    if (reply.contains("mask")) return {checked(reply.at("mask"))};
    if (reply.contains("candidates")) {
      std::vector<Candidate> out;
      for (const auto& c : reply.at("candidates")) out.push_back({checked(c.at("mask")), c.at("score").get<double>()});
      return {std::move(out)};
    }
    if (reply.contains("entities")) {
      std::vector<BinaryMask> out;
      for (const auto& e : reply.at("entities")) out.push_back(checked(e));
      return {std::move(out)};
    }
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("segment: malformed reply: ") + e.what());
  }
  throw ProtocolError("segment: reply has none of mask / candidates / entities");
}

std::vector<BinaryMask> SegmenterHandle::segment_sequence(const std::vector<std::string>& frames, Index width,
                                                          Index height, const std::vector<ScheduledPrompt>& prompts,
                                                          const std::vector<ContextExemplar>& context) {
  require(Capability::context_memory);
  json jp = json::array();
  for (const auto& sp : prompts) {
    if (sp.frame >= frames.size()) throw PreconditionError("segment_sequence: prompt frame index out of range");
    for (auto c : required_capabilities(sp.prompt)) require(c);
    validate_prompt(sp.prompt, width, height);
    jp.push_back({{"frame", sp.frame}, {"prompt", prompt_to_json(sp.prompt)}});
  }
  json request = {{"op", "segment_sequence"}, {"frames", frames}, {"width", width}, {"height", height},
                  {"prompts", jp}};
  if (!context.empty()) {
    request["context"] = json::array();
    for (const auto& ex : context) request["context"].push_back({{"image", ex.image}, {"mask", encode_rle(ex.mask)}});
  }
  ++requests_;
  const json reply = checked_call(request);
  std::vector<BinaryMask> out;
  try {
    for (const auto& m : reply.at("masks")) {
      auto mask = decode_rle(m.get<std::string>());
      if (mask.width() != width || mask.height() != height)
        throw ProtocolError("segment_sequence: reply mask has wrong dimensions");
      out.push_back(std::move(mask));
    }
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("segment_sequence: malformed reply: ") + e.what());
  }
  if (out.size() != frames.size()) throw ProtocolError("segment_sequence: expected one mask per frame");
  return out;
}

}  // namespace promptseg
