#include <gtest/gtest.h>

#include <random>
#include <set>

#include "promptseg/config.hpp"
#include "promptseg/core.hpp"
#include "promptseg/rng.hpp"
#include "support/fixtures.hpp"

using namespace promptseg;

TEST(BinaryMask, RejectsEmptyDimensions) {
  EXPECT_THROW(BinaryMask(0, 3), PreconditionError);
  EXPECT_THROW(BinaryMask(3, 0), PreconditionError);
  EXPECT_THROW(BinaryMask(Grid<bool>(0, 0)), PreconditionError);
}

TEST(BinaryMask, WidthIsColumnsHeightIsRows) {
  const BinaryMask m(5, 3);
  EXPECT_EQ(m.width(), 5);
  EXPECT_EQ(m.height(), 3);
  EXPECT_EQ(m.size(), 15);
  EXPECT_TRUE(m.empty());
}

TEST(BinaryMask, CountAndFractionAgreeOnRandomMasks) {
  std::mt19937_64 gen(1);
  for (int i = 0; i < 50; ++i) {
    const auto m = fixtures::random_mask(gen, 17, 9);
    Index manual = 0;
    for (Index y = 0; y < m.height(); ++y)
      for (Index x = 0; x < m.width(); ++x) manual += m(y, x);
    EXPECT_EQ(m.count(), manual);
    EXPECT_EQ(m.bits().size(), m.width() * m.height());
    EXPECT_GE(m.foreground_fraction(), 0.0);
    EXPECT_LE(m.foreground_fraction(), 1.0);
    EXPECT_DOUBLE_EQ(m.foreground_fraction(), static_cast<double>(manual) / 153.0);
  }
}

TEST(BinaryMask, SetAlgebra) {
  const auto a = fixtures::ascii_mask({"##..", "##.."});
  const auto b = fixtures::ascii_mask({".##.", ".##."});
  EXPECT_EQ((a & b).count(), 2);
  EXPECT_EQ((a | b).count(), 6);
  EXPECT_EQ((a - b).count(), 2);
  EXPECT_EQ((~a).count(), 4);
  EXPECT_THROW(require_same_shape(a, BinaryMask(3, 2), "t"), DimensionMismatch);
}

TEST(ScoreMap, RejectsOutOfRangeScores) {
  Grid<double> g = Grid<double>::Constant(2, 2, 0.5);
  g(1, 1) = 1.5;
  EXPECT_THROW(ScoreMap{g}, PreconditionError);
  g(1, 1) = -0.1;
  EXPECT_THROW(ScoreMap{g}, PreconditionError);
  g(1, 1) = std::nan("");
  EXPECT_THROW(ScoreMap{g}, PreconditionError);
  g(1, 1) = 1.0;
  EXPECT_NO_THROW(ScoreMap{g});
}

TEST(Binarize, ZeroMapGivesBackground) {
  const ScoreMap map(Grid<double>::Zero(3, 4));
  const auto m = binarize(map, 0.5);
  EXPECT_TRUE(m.empty());
  EXPECT_EQ(m.width(), 4);
  EXPECT_EQ(m.height(), 3);
}

TEST(Binarize, LiftedMaskRoundTrips) {
  std::mt19937_64 gen(2);
  for (int i = 0; i < 20; ++i) {
    const auto m = fixtures::random_mask(gen, 11, 7);
    EXPECT_EQ(binarize(lift<double>(m), 0.5), m);
  }
}

TEST(Binarize, StrictlyGreaterThanThreshold) {
  Grid<double> g(2, 2);
  g << 0.4, 0.6, 0.5, 0.51;
  EXPECT_EQ(binarize(ScoreMap(g), 0.5), fixtures::ascii_mask({".#", ".#"}));
}

TEST(Binarize, ThresholdOutsideUnitIntervalRejected) {
  const ScoreMap map(Grid<double>::Zero(2, 2));
  EXPECT_THROW(binarize(map, 1.0), PreconditionError);
  EXPECT_THROW(binarize(map, -0.1), PreconditionError);
  EXPECT_NO_THROW(binarize(map, 0.0));
}

TEST(Binarize, FloatMapsWork) {
  Grid<float> g(1, 3);
  g << 0.2f, 0.7f, 0.9f;
  EXPECT_EQ(binarize(ScoreMapT<float>(g), 0.5).count(), 2);
}

TEST(Prompt, PointsMustLieInsideTheImage) {
  EXPECT_NO_THROW(validate_prompt(Prompt::points({{0, 0}, {4, 2}}), 5, 3));
  EXPECT_THROW(validate_prompt(Prompt::points({{5, 0}}), 5, 3), PreconditionError);
  EXPECT_THROW(validate_prompt(Prompt::points({{0, -1}}), 5, 3), PreconditionError);
  EXPECT_THROW(validate_prompt(Prompt::points({}), 5, 3), PreconditionError);
}

TEST(Prompt, BoxesAreHalfOpenAndNonDegenerate) {
  EXPECT_NO_THROW(validate_prompt(Prompt::boxes({{0, 0, 5, 3}}), 5, 3));
  EXPECT_THROW(validate_prompt(Prompt::boxes({{0, 0, 6, 3}}), 5, 3), PreconditionError);
  EXPECT_THROW(validate_prompt(Prompt::boxes({{2, 0, 2, 3}}), 5, 3), PreconditionError);
  EXPECT_THROW(validate_prompt(Prompt::boxes({{0, 2, 3, 1}}), 5, 3), PreconditionError);
}

TEST(Prompt, MaskMustMatchImage) {
  EXPECT_THROW(validate_prompt(Prompt::mask(BinaryMask(4, 3)), 5, 3), DimensionMismatch);
  EXPECT_NO_THROW(validate_prompt(Prompt::mask(BinaryMask(5, 3)), 5, 3));
}

TEST(Prompt, ExactlyOneKind) {
  const auto p = Prompt::everything();
  EXPECT_TRUE(p.is_everything());
  EXPECT_FALSE(p.is_points() || p.is_boxes() || p.is_mask());
  EXPECT_TRUE(p.context.empty());
}

TEST(SequenceRecord, FramesShareDimensions) {
  std::vector<Frame> frames = {{"a", BinaryMask(4, 4)}, {"b", BinaryMask(4, 5)}};
  EXPECT_THROW(SequenceRecord("s", SequenceKind::video, frames), DimensionMismatch);
  EXPECT_THROW(SequenceRecord("s", SequenceKind::video, {}), PreconditionError);
}

TEST(SequenceRecord, OnePredictionPerFrame) {
  const SequenceRecord seq("s", SequenceKind::video, {{"a", BinaryMask(4, 4)}, {"b", BinaryMask(4, 4)}});
  EXPECT_FALSE(seq.predictions().has_value());
  EXPECT_THROW(seq.with_predictions({BinaryMask(4, 4)}), PreconditionError);
  EXPECT_THROW(seq.with_predictions({BinaryMask(4, 4), BinaryMask(3, 4)}), DimensionMismatch);
  const auto done = seq.with_predictions({BinaryMask(4, 4), BinaryMask(4, 4)});
  ASSERT_TRUE(done.predictions().has_value());
  EXPECT_EQ(done.predictions()->size(), 2u);
}

TEST(StackRows, PreservesCounts) {
  std::mt19937_64 gen(3);
  std::vector<BinaryMask> masks;
  Index total = 0;
  for (int i = 0; i < 5; ++i) {
    masks.push_back(fixtures::random_mask(gen, 8, 6));
    total += masks.back().count();
  }
  const auto stacked = stack_rows(masks);
  EXPECT_EQ(stacked.height(), 30);
  EXPECT_EQ(stacked.count(), total);
  EXPECT_EQ(stacked(6, 3), masks[1](0, 3));
  EXPECT_THROW(stack_rows({BinaryMask(3, 3), BinaryMask(4, 3)}), DimensionMismatch);
}

TEST(Config, DefaultsMatchDocumentedConstants) {
  const EvalConfig cfg;
  EXPECT_EQ(cfg.click_limit, 6);
  EXPECT_DOUBLE_EQ(cfg.iou_stop, 0.9);
  EXPECT_DOUBLE_EQ(cfg.ofs_threshold, 0.9);
  EXPECT_DOUBLE_EQ(cfg.binarize_threshold, 0.5);
  EXPECT_DOUBLE_EQ(cfg.s_measure_alpha, 0.5);
  EXPECT_DOUBLE_EQ(cfg.wfm_beta2, 1.0);
  EXPECT_EQ(cfg.icl_count, 20);
  EXPECT_EQ(cfg.point_jitter_px, 10);
  EXPECT_DOUBLE_EQ(cfg.box_jitter_ratio, 0.1);
  EXPECT_EQ(cfg.mask_max_iterations, 5);
  EXPECT_NO_THROW(validate(cfg));
}

TEST(Config, RoundTripsThroughText) {
  std::mt19937_64 gen(4);
  for (int i = 0; i < 30; ++i) {
    EvalConfig cfg;
    cfg.click_limit = std::uniform_int_distribution<int>(1, 20)(gen);
    cfg.iou_stop = std::uniform_real_distribution<double>(0.01, 1.0)(gen);
    cfg.wfm_sigma = std::uniform_real_distribution<double>(0.5, 9.0)(gen);
    cfg.rng_seed = gen();
    cfg.connectivity = i % 2 ? 4 : 8;
    cfg.point_full_loop = i % 3 == 0;
    cfg.metrics = {"IoU", "MAE"};
    EXPECT_EQ(parse_config(to_config_text(cfg)), cfg);
  }
}

TEST(Config, CommentsBlankLinesAndDefaults) {
  const auto cfg = parse_config("# header\n\nclick_limit = 3   # trailing\nmetrics = [\"IoU\", \"Dice\"]\n");
  EXPECT_EQ(cfg.click_limit, 3);
  EXPECT_EQ(cfg.metrics, (std::vector<std::string>{"IoU", "Dice"}));
  EXPECT_DOUBLE_EQ(cfg.iou_stop, 0.9);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("nonsense = 1"), ConfigError);
  EXPECT_THROW(parse_config("click_limit"), ConfigError);
  EXPECT_THROW(parse_config("click_limit = abc"), ConfigError);
  EXPECT_THROW(parse_config("click_limit = 0"), ConfigError);
  EXPECT_THROW(parse_config("iou_stop = 1.5"), ConfigError);
  EXPECT_THROW(parse_config("iou_stop = 0"), ConfigError);
  EXPECT_THROW(parse_config("binarize_threshold = 1"), ConfigError);
  EXPECT_THROW(parse_config("connectivity = 6"), ConfigError);
  EXPECT_THROW(parse_config("point_full_loop = maybe"), ConfigError);
}

TEST(Config, HashFollowsContent) {
  EvalConfig a, b;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.rng_seed = 1;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, EveryKeyReadsBack) {
  const EvalConfig cfg;
  for (const auto& key : config_keys()) {
    EvalConfig copy;
    set_config_value(copy, key, get_config_value(cfg, key));
    EXPECT_EQ(copy, cfg) << key;
  }
}

TEST(Rng, UniformIntStaysInRangeAndCoversIt) {
  Rng rng(9);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 10000; ++i) {
    const auto v = rng.uniform_int(-3, 3);
    ASSERT_GE(v, -3);
    ASSERT_LE(v, 3);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
  EXPECT_EQ(rng.uniform_int(4, 4), 4);
}

TEST(Rng, SubstreamsAreDeterministicAndDistinct) {
  auto a = Rng::substream(1, 0, "x"), b = Rng::substream(1, 0, "x");
  auto c = Rng::substream(1, 1, "x"), d = Rng::substream(1, 0, "y");
  const auto va = a.next();
  EXPECT_EQ(va, b.next());
  EXPECT_NE(va, c.next());
  EXPECT_NE(va, d.next());
}
