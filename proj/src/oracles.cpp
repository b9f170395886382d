#include "promptseg/oracles.hpp"

#include "promptseg/error.hpp"
#include "promptseg/raster.hpp"
#include "promptseg/rng.hpp"

namespace promptseg {
namespace {

json error_reply(const std::string& msg) { return {{"error", msg}, {"protocol", kProtocolVersion}}; }

class FunctionTransport final : public Transport {
 public:
  FunctionTransport(std::function<json(const json&)> handler, std::string name)
      : handler_(std::move(handler)), name_(std::move(name)) {}

  json call(const json& request) override { return json::parse(handler_(json::parse(request.dump())).dump()); }
  std::string describe() const override { return name_; }

 private:
  std::function<json(const json&)> handler_;
  std::string name_;
};

}  // namespace

OracleKind parse_oracle_kind(const std::string& name) {
  if (name == "gt") return OracleKind::gt;
  if (name == "echo") return OracleKind::echo;
  if (name == "noisy") return OracleKind::noisy;
  if (name == "everything") return OracleKind::everything;
  if (name == "empty") return OracleKind::empty;
  if (name == "identity") return OracleKind::identity;
  throw ConfigError("unknown oracle '" + name + "' (gt, echo, noisy, everything, empty, identity)");
}

const char* oracle_name(OracleKind kind) {
  switch (kind) {
    case OracleKind::gt: return "gt";
    case OracleKind::echo: return "echo";
    case OracleKind::noisy: return "noisy";
    case OracleKind::everything: return "everything";
    case OracleKind::empty: return "empty";
    case OracleKind::identity: return "identity";
  }
  return "?";
}

std::vector<BinaryMask> distractor_blobs(const BinaryMask& gt) {
  std::vector<BinaryMask> out;
  Grid<bool> blocked = gt.bits();
  const Index h = gt.height(), w = gt.width();
  for (Index y = 1; y + 4 <= h && out.size() < 2; ++y) {
    for (Index x = 1; x + 4 <= w && out.size() < 2; ++x) {
      // 3x3 blob at (x, y) plus a 1-pixel margin must be clear.
      if (blocked.block(y - 1, x - 1, 5, 5).any()) continue;
      Grid<bool> blob = Grid<bool>::Zero(h, w);
      blob.block(y, x, 3, 3).setConstant(true);
      blocked.block(y - 1, x - 1, 5, 5).setConstant(true);
      out.emplace_back(std::move(blob));
    }
  }
  return out;
}

json Oracle::serve(const json& request) const {
  try {
    const auto op = request.at("op").get<std::string>();
    if (op == "handshake") return handshake(request);
    if (op == "segment") return segment(request);
    if (op == "segment_sequence") return segment_sequence(request);
    return error_reply("unknown op '" + op + "'");
  } catch (const std::exception& e) {
    return error_reply(e.what());
  }
}

json Oracle::handshake(const json& request) const {
  if (request.value("protocol", std::string()) != kProtocolVersion)
    return error_reply("unsupported protocol version '" + request.value("protocol", std::string()) + "'");
  json caps = json::array();
  switch (kind_) {
    case OracleKind::gt: caps = {"points", "boxes", "mask", "everything"}; break;
    case OracleKind::echo:
    case OracleKind::empty: caps = {"points", "boxes", "mask", "everything", "context_memory"}; break;
    case OracleKind::noisy:
    case OracleKind::identity: caps = {"points", "boxes", "mask"}; break;
    case OracleKind::everything: caps = {"everything"}; break;
  }
  return {{"protocol", kProtocolVersion},
          {"capabilities", caps},
          {"sessions", 0},
          {"name", std::string("oracle:") + oracle_name(kind_)}};
}

BinaryMask Oracle::answer(const std::string& image, const BinaryMask& gt, const Prompt& prompt) const {
  const Index w = gt.width(), h = gt.height();
  switch (kind_) {
    case OracleKind::echo: return gt;
    case OracleKind::empty: return BinaryMask(w, h);
    case OracleKind::identity:
      if (const auto* m = std::get_if<BinaryMask>(&prompt.kind)) return *m;
      if (const auto* boxes = std::get_if<BoxList>(&prompt.kind)) {
        BinaryMask out(w, h);
        for (const auto& b : *boxes) out = out | box_mask(b, w, h);
        return out;
      }
      return BinaryMask(w, h);
    case OracleKind::noisy: {
      const std::uint64_t seed = Rng::mix(fnv1a(image));
      const MorphOp op = (seed & 1) ? MorphOp::erode : MorphOp::dilate;
      const int base = 1 + static_cast<int>((seed >> 1) % 5);
      const auto* pts = std::get_if<PointList>(&prompt.kind);
      const int clicks = pts ? static_cast<int>(pts->size()) : 1;
      return morph(gt, op, std::max(0, base - (clicks - 1)));
    }
    case OracleKind::gt:
    case OracleKind::everything: break;
  }

  if (const auto* pts = std::get_if<PointList>(&prompt.kind)) {
    const auto cc = connected_components(gt, connectivity_);
    std::vector<bool> keep(cc.count + 1, false), drop(cc.count + 1, false);
    for (const auto& p : *pts) {
      const auto l = cc.label_map(p.y, p.x);
      if (!l) continue;
      (p.label == PointLabel::foreground ? keep : drop)[l] = true;
    }
    Grid<bool> out = Grid<bool>::Zero(h, w);
    for (Index i = 0; i < out.size(); ++i) {
      const auto l = cc.label_map.data()[i];
      out.data()[i] = l && keep[l] && !drop[l];
    }
    return BinaryMask(std::move(out));
  }
  if (const auto* boxes = std::get_if<BoxList>(&prompt.kind)) {
    BinaryMask region(w, h);
    for (const auto& b : *boxes) region = region | box_mask(b, w, h);
    return gt & region;
  }
  if (const auto* m = std::get_if<BinaryMask>(&prompt.kind)) return gt & *m;
  return gt;
}

json Oracle::segment(const json& request) const {
  const auto image = request.at("image").get<std::string>();
  const auto w = request.at("width").get<Index>(), h = request.at("height").get<Index>();
  const Prompt prompt = prompt_from_json(request.at("prompt"));
  const BinaryMask gt = source_(image);
  if (gt.width() != w || gt.height() != h) return error_reply("image size does not match ground truth for " + image);

  if (prompt.is_everything() && (kind_ == OracleKind::gt || kind_ == OracleKind::everything)) {
    json entities = json::array();
    const auto cc = connected_components(gt, connectivity_);
    for (int l = 1; l <= cc.count; ++l) entities.push_back(encode_rle(cc.component(l)));
    if (kind_ == OracleKind::everything)
      for (const auto& blob : distractor_blobs(gt)) entities.push_back(encode_rle(blob));
    return {{"entities", entities}};
  }
  if (kind_ == OracleKind::everything) return error_reply("everything oracle only answers everything prompts");
  return {{"mask", encode_rle(answer(image, gt, prompt))}};
}

json Oracle::segment_sequence(const json& request) const {
  if (kind_ != OracleKind::echo && kind_ != OracleKind::empty)
    return error_reply(std::string("oracle '") + oracle_name(kind_) + "' has no sequence memory");
  const auto w = request.at("width").get<Index>(), h = request.at("height").get<Index>();
  json masks = json::array();
  for (const auto& f : request.at("frames")) {
    const auto image = f.get<std::string>();
    const BinaryMask gt = source_(image);
    if (gt.width() != w || gt.height() != h) return error_reply("frame size does not match ground truth for " + image);
    masks.push_back(encode_rle(kind_ == OracleKind::echo ? gt : BinaryMask(w, h)));
  }
  for (const auto& p : request.at("prompts")) prompt_from_json(p.at("prompt"));
  return {{"masks", masks}};
}

std::unique_ptr<Transport> make_loopback_transport(std::shared_ptr<const Oracle> oracle) {
  const std::string name = std::string("oracle:") + oracle_name(oracle->kind());
  return make_function_transport([oracle](const json& req) { return oracle->serve(req); }, name);
}

SegmenterHandle make_oracle_handle(OracleKind kind, GroundTruthSource source, int connectivity) {
  return SegmenterHandle(make_loopback_transport(std::make_shared<const Oracle>(kind, std::move(source), connectivity)));
}

std::unique_ptr<Transport> make_function_transport(std::function<json(const json&)> handler, std::string name) {
  return std::make_unique<FunctionTransport>(std::move(handler), std::move(name));
}

}  // namespace promptseg
