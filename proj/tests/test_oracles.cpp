#include <gtest/gtest.h>

#include <random>

#include "promptseg/config.hpp"
#include "promptseg/metrics.hpp"
#include "promptseg/oracles.hpp"
#include "promptseg/prompt_sim.hpp"
#include "support/fixtures.hpp"

using namespace promptseg;

namespace {

BinaryMask reply_mask(SegmenterHandle& seg, const std::string& image, const BinaryMask& gt, const Prompt& p) {
  return best_mask(seg.segment(image, gt.width(), gt.height(), p));
}

const BinaryMask kGt = fixtures::rect_mask(20, 14, 2, 2, 7, 6) | fixtures::rect_mask(20, 14, 10, 7, 17, 12);

}  // namespace

TEST(OracleKinds, NamesRoundTrip) {
  for (auto k : {OracleKind::gt, OracleKind::echo, OracleKind::noisy, OracleKind::everything, OracleKind::empty,
                 OracleKind::identity})
    EXPECT_EQ(parse_oracle_kind(oracle_name(k)), k);
  EXPECT_THROW(parse_oracle_kind("sam"), ConfigError);
}

TEST(GtOracle, BoxReturnsGtWithinBox) {
  fixtures::GtTable t;
  t.add("i", kGt);
  auto seg = make_oracle_handle(OracleKind::gt, t.source());
  const BoxPrompt b{5, 3, 12, 9};
  EXPECT_EQ(reply_mask(seg, "i", kGt, Prompt::boxes({b})), kGt & box_mask(b, 20, 14));
}

TEST(GtOracle, PointReturnsComponentUnderIt) {
  fixtures::GtTable t;
  t.add("i", kGt);
  auto seg = make_oracle_handle(OracleKind::gt, t.source());
  EXPECT_EQ(reply_mask(seg, "i", kGt, Prompt::points({{3, 3}})), fixtures::rect_mask(20, 14, 2, 2, 7, 6));
  EXPECT_TRUE(reply_mask(seg, "i", kGt, Prompt::points({{0, 13}})).empty());
  // A background click on a selected component removes it.
  EXPECT_TRUE(reply_mask(seg, "i", kGt, Prompt::points({{3, 3}, {4, 4, PointLabel::background}})).empty());
  EXPECT_EQ(reply_mask(seg, "i", kGt, Prompt::points({{3, 3}, {12, 9}})), kGt);
}

TEST(GtOracle, MaskAndEverything) {
  fixtures::GtTable t;
  t.add("i", kGt);
  auto seg = make_oracle_handle(OracleKind::gt, t.source());
  EXPECT_EQ(reply_mask(seg, "i", kGt, Prompt::mask(kGt)), kGt);
  const auto reply = seg.segment("i", 20, 14, Prompt::everything());
  ASSERT_TRUE(reply.is_entities());
  EXPECT_EQ(std::get<2>(reply.body).size(), 2u);
}

TEST(EverythingOracle, DistractorsAreDisjointFromGt) {
  fixtures::GtTable t;
  t.add("i", kGt);
  auto seg = make_oracle_handle(OracleKind::everything, t.source());
  EXPECT_FALSE(seg.capabilities().points);
  const auto entities = reply_entities(seg.segment("i", 20, 14, Prompt::everything()));
  ASSERT_EQ(entities.size(), 4u);
  EXPECT_DOUBLE_EQ(overlap_fraction(entities[2], kGt), 0.0);
  EXPECT_DOUBLE_EQ(overlap_fraction(entities[3], kGt), 0.0);
  EXPECT_EQ(entities[2].count(), 9);
  EXPECT_EQ(ofs_filter(entities, kGt, 0.9), kGt);
}

TEST(EverythingOracle, DistractorsKeepMarginAndFit) {
  std::mt19937_64 gen(61);
  for (int i = 0; i < 30; ++i) {
    const auto gt = fixtures::blob_mask(gen, 24, 24, 2);
    const auto blobs = distractor_blobs(gt);
    EXPECT_LE(blobs.size(), 2u);
    for (const auto& b : blobs) {
      EXPECT_TRUE((morph(b, MorphOp::dilate, 1) & gt).empty());
      EXPECT_EQ(b.count(), 9);
    }
  }
}

TEST(EchoOracle, AnswersGtForAnyPromptAndSequence) {
  fixtures::GtTable t;
  t.add("i", kGt);
  auto seg = make_oracle_handle(OracleKind::echo, t.source());
  EXPECT_TRUE(seg.capabilities().context_memory);
  EXPECT_EQ(reply_mask(seg, "i", kGt, Prompt::points({{0, 0}})), kGt);
  const auto seq = seg.segment_sequence({"i", "i"}, 20, 14, {{0, Prompt::points({{3, 3}})}});
  ASSERT_EQ(seq.size(), 2u);
  EXPECT_EQ(seq[1], kGt);
}

TEST(EmptyOracle, AlwaysEmpty) {
  fixtures::GtTable t;
  t.add("i", kGt);
  auto seg = make_oracle_handle(OracleKind::empty, t.source());
  EXPECT_TRUE(reply_mask(seg, "i", kGt, Prompt::mask(kGt)).empty());
  EXPECT_TRUE(reply_mask(seg, "i", kGt, Prompt::points({{3, 3}})).empty());
}

TEST(IdentityOracle, EchoesMaskFillsBoxes) {
  fixtures::GtTable t;
  t.add("i", kGt);
  auto seg = make_oracle_handle(OracleKind::identity, t.source());
  const auto prompt = fixtures::rect_mask(20, 14, 0, 0, 3, 3);
  EXPECT_EQ(reply_mask(seg, "i", kGt, Prompt::mask(prompt)), prompt);
  EXPECT_EQ(reply_mask(seg, "i", kGt, Prompt::boxes({{1, 1, 4, 5}})), box_mask({1, 1, 4, 5}, 20, 14));
  EXPECT_TRUE(reply_mask(seg, "i", kGt, Prompt::points({{3, 3}})).empty());
}

TEST(NoisyOracle, ConvergesWithinClickLimit) {
  std::mt19937_64 gen(62);
  const EvalConfig cfg;
  fixtures::GtTable t;
  std::vector<std::pair<std::string, BinaryMask>> samples;
  for (int i = 0; i < 40; ++i) {
    samples.emplace_back("n" + std::to_string(i), fixtures::single_blob(gen, 48, 48));
    t.add(samples.back().first, samples.back().second);
  }
  auto seg = make_oracle_handle(OracleKind::noisy, t.source());
  for (const auto& [image, gt] : samples) {
    const auto run = simulate_clicks(image, gt, seg, cfg);
    EXPECT_LE(run.log.clicks.size(), 6u) << image;
    EXPECT_GE(iou(run.prediction, gt).value, 0.9) << image;
    EXPECT_EQ(run.log.stop_reason, StopReason::iou_reached) << image;
  }
}

TEST(NoisyOracle, DeterministicPerImage) {
  fixtures::GtTable t;
  t.add("i", kGt);
  auto a = make_oracle_handle(OracleKind::noisy, t.source());
  auto b = make_oracle_handle(OracleKind::noisy, t.source());
  EXPECT_EQ(reply_mask(a, "i", kGt, Prompt::points({{3, 3}})), reply_mask(b, "i", kGt, Prompt::points({{3, 3}})));
}

TEST(Oracle, ErrorsBecomeErrorReplies) {
  fixtures::GtTable t;
  t.add("i", kGt);
  const Oracle oracle(OracleKind::gt, t.source());
  EXPECT_TRUE(oracle.serve({{"op", "dance"}}).contains("error"));
  EXPECT_TRUE(oracle.serve({{"op", "handshake"}, {"protocol", "other/9"}}).contains("error"));
  EXPECT_TRUE(oracle.serve({{"op", "segment"}, {"image", "unknown"}, {"width", 20}, {"height", 14},
                            {"prompt", prompt_to_json(Prompt::everything())}})
                  .contains("error"));
  EXPECT_TRUE(oracle.serve({{"op", "segment_sequence"}, {"frames", {"i"}}, {"width", 20}, {"height", 14},
                            {"prompts", json::array()}})
                  .contains("error"));
}
