#include <gtest/gtest.h>

#include <png.h>

#include <cstdio>
#include <random>

#include "promptseg/dataset.hpp"
#include "support/fixtures.hpp"

using namespace promptseg;
namespace fs = std::filesystem;

namespace {

/// Raw PNG writer for inputs the library refuses to produce (colour, 16-bit, arbitrary gray levels).
void write_png(const fs::path& path, int w, int h, int color_type, int bit_depth, const std::vector<unsigned char>& data) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  ASSERT_NE(f, nullptr);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, f);
  png_set_IHDR(png, info, w, h, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = data.size() / static_cast<std::size_t>(h);
  for (int y = 0; y < h; ++y) png_write_row(png, const_cast<unsigned char*>(data.data() + y * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

void touch(const fs::path& p) { fixtures::write_file(p, "x"); }

}  // namespace

TEST(LoadMask, GrayPngThresholdIsStrict) {
  fixtures::TempDir tmp("png");
  write_png(tmp / "levels.png", 4, 1, PNG_COLOR_TYPE_GRAY, 8, {0, 127, 128, 255});
  const auto m = load_mask(tmp / "levels.png");
  EXPECT_EQ(m, fixtures::ascii_mask({"..##"}));

  write_png(tmp / "full.png", 3, 2, PNG_COLOR_TYPE_GRAY, 8, std::vector<unsigned char>(6, 255));
  EXPECT_EQ(load_mask(tmp / "full.png").count(), 6);
  write_png(tmp / "zero.png", 3, 2, PNG_COLOR_TYPE_GRAY, 8, std::vector<unsigned char>(6, 0));
  EXPECT_TRUE(load_mask(tmp / "zero.png").empty());
}

TEST(LoadMask, ColourAnd16BitPngRejectedWithHint) {
  fixtures::TempDir tmp("png");
  write_png(tmp / "rgb.png", 2, 1, PNG_COLOR_TYPE_RGB, 8, {255, 255, 255, 0, 0, 0});
  write_png(tmp / "deep.png", 2, 1, PNG_COLOR_TYPE_GRAY, 16, {255, 255, 0, 0});
  for (const char* name : {"rgb.png", "deep.png"}) {
    try {
      load_mask(tmp / name);
      ADD_FAILURE() << name << " was accepted";
    } catch (const IoError& e) {
      EXPECT_NE(std::string(e.what()).find("convert"), std::string::npos) << e.what();
    }
  }
}

TEST(LoadMask, PgmBinaryAndAscii) {
  fixtures::TempDir tmp("pgm");
  Grid<int> values(2, 3);
  values << 0, 127, 128, 255, 200, 1;
  fixtures::write_file(tmp / "b.pgm", fixtures::pgm_bytes(values));
  EXPECT_EQ(load_mask(tmp / "b.pgm"), fixtures::ascii_mask({"..#", "##."}));
  fixtures::write_file(tmp / "a.pgm", "P2\n# comment\n3 2\n255\n0 127 128\n255 200 1\n");
  EXPECT_EQ(load_mask(tmp / "a.pgm"), fixtures::ascii_mask({"..#", "##."}));
  fixtures::write_file(tmp / "wide.pgm", "P2\n1 1\n65535\n40000\n");
  EXPECT_THROW(load_mask(tmp / "wide.pgm"), IoError);
  fixtures::write_file(tmp / "c.ppm", "P6\n1 1\n255\nabc");
  EXPECT_THROW(load_mask(tmp / "c.ppm"), IoError);
  fixtures::write_file(tmp / "short.pgm", "P5\n4 4\n255\nab");
  EXPECT_THROW(load_mask(tmp / "short.pgm"), IoError);
  fixtures::write_file(tmp / "m.jpg", "not really");
  EXPECT_THROW(load_mask(tmp / "m.jpg"), IoError);
  EXPECT_THROW(load_mask(tmp / "missing.png"), IoError);
}

TEST(SaveMask, RoundTripsBothFormats) {
  fixtures::TempDir tmp("save");
  std::mt19937_64 gen(91);
  for (int i = 0; i < 30; ++i) {
    const auto m = fixtures::random_mask(gen, 1 + i % 17, 1 + i % 11);
    save_mask_png(m, tmp / "m.png");
    save_mask_pgm(m, tmp / "m.pgm");
    EXPECT_EQ(load_mask(tmp / "m.png"), m);
    EXPECT_EQ(load_mask(tmp / "m.pgm"), m);
  }
  EXPECT_THROW(save_mask_png(BinaryMask(2, 2), tmp / "no" / "dir.png"), IoError);
}

TEST(Scan, ZeroPairsAndMissingLayout) {
  fixtures::TempDir tmp("scan");
  EXPECT_THROW(scan_dataset(tmp.path(), DatasetKind::image), IoError);
  fs::create_directories(tmp / "images");
  fs::create_directories(tmp / "masks");
  EXPECT_THROW(scan_dataset(tmp.path(), DatasetKind::image), IoError);
  EXPECT_THROW(scan_dataset(tmp / "absent", DatasetKind::image), IoError);
}

TEST(Scan, MatchedAndUnmatchedStems) {
  fixtures::TempDir tmp("scan");
  const auto m = fixtures::rect_mask(4, 4, 1, 1, 3, 3);
  fixtures::write_image_pairs(tmp / "three", {{"a", m}, {"b", m}, {"c", m}});
  const auto full = scan_dataset(tmp / "three", DatasetKind::image);
  EXPECT_EQ(full.samples.size(), 3u);
  EXPECT_TRUE(full.warnings.empty());
  EXPECT_EQ(full.name, "three");

  fs::remove(tmp / "three" / "masks" / "b.png");
  const auto partial = scan_dataset(tmp / "three", DatasetKind::image);
  ASSERT_EQ(partial.samples.size(), 2u);
  EXPECT_EQ(partial.warnings.size(), 1u);
  EXPECT_EQ(partial.samples[0].id, "a");
  EXPECT_EQ(partial.samples[1].id, "c");
  EXPECT_EQ(partial.unmatched_images + partial.samples.size(), partial.discovered_images);
}

TEST(Scan, CountsAddUpOnRandomLayouts) {
  std::mt19937_64 gen(92);
  for (int round = 0; round < 10; ++round) {
    fixtures::TempDir tmp("scan");
    fs::create_directories(tmp / "d" / "images");
    fs::create_directories(tmp / "d" / "masks");
    std::bernoulli_distribution coin(0.5);
    std::size_t loadable = 0;
    for (int i = 0; i < 15; ++i) {
      const std::string stem = "s" + std::to_string(i);
      const bool img = coin(gen), msk = coin(gen);
      if (img) touch(tmp / "d" / "images" / (stem + ".jpg"));
      if (msk) save_mask_png(BinaryMask(3, 3), tmp / "d" / "masks" / (stem + ".png"));
      loadable += img && msk;
    }
    if (loadable == 0) {
      EXPECT_THROW(scan_dataset(tmp / "d", DatasetKind::image), IoError);
      continue;
    }
    const auto m = scan_dataset(tmp / "d", DatasetKind::image);
    EXPECT_EQ(m.samples.size(), loadable);
    EXPECT_EQ(m.samples.size() + m.unmatched_images, m.discovered_images);
    for (const auto& s : m.samples) EXPECT_NO_THROW(load_mask(s.mask));
  }
}

TEST(Scan, FramesSortNumerically) {
  fixtures::TempDir tmp("video");
  const auto m = fixtures::rect_mask(4, 4, 0, 0, 2, 2);
  fs::create_directories(tmp / "images" / "seq");
  fs::create_directories(tmp / "masks" / "seq");
  for (const std::string stem : {"10", "7", "08", "0", "intro", "100"}) {
    save_mask_png(m, tmp / "images" / "seq" / (stem + ".png"));
    save_mask_png(m, tmp / "masks" / "seq" / (stem + ".png"));
  }
  const auto manifest = scan_dataset(tmp.path(), DatasetKind::video);
  ASSERT_EQ(manifest.sequences.size(), 1u);
  std::vector<std::string> ids;
  for (const auto& f : manifest.sequences[0].frames) ids.push_back(f.id);
  EXPECT_EQ(ids, (std::vector<std::string>{"seq/0", "seq/7", "seq/08", "seq/10", "seq/100", "seq/intro"}));

  const auto record = load_sequence(manifest.sequences[0], SequenceKind::video);
  EXPECT_EQ(record.size(), 6u);
  EXPECT_EQ(record.id(), "seq");
  EXPECT_EQ(fs::path(record.frames()[2].image).filename(), "08.png");
}

TEST(Scan, SequenceWithoutMasksIsWarned) {
  fixtures::TempDir tmp("video");
  const auto m = fixtures::rect_mask(4, 4, 0, 0, 2, 2);
  for (const char* seq : {"a", "b"}) {
    fs::create_directories(tmp / "images" / seq);
    save_mask_png(m, tmp / "images" / seq / "0.png");
  }
  fs::create_directories(tmp / "masks" / "a");
  save_mask_png(m, tmp / "masks" / "a" / "0.png");
  const auto manifest = scan_dataset(tmp.path(), DatasetKind::volume);
  ASSERT_EQ(manifest.sequences.size(), 1u);
  EXPECT_EQ(manifest.sequences[0].id, "a");
  EXPECT_FALSE(manifest.warnings.empty());
}

TEST(KnownCounts, ReferenceSizesWarnOnly) {
  EXPECT_EQ(known_sample_count("DUTS", Split::test), std::optional<std::size_t>(5019));
  EXPECT_EQ(known_sample_count("duts", Split::train), std::optional<std::size_t>(10553));
  EXPECT_EQ(known_sample_count("CAMO", Split::test), std::optional<std::size_t>(1250));
  EXPECT_EQ(known_sample_count("NC4K", Split::test), std::optional<std::size_t>(4121));
  EXPECT_FALSE(known_sample_count("mine", Split::test).has_value());

  fixtures::TempDir tmp("known");
  fixtures::write_image_pairs(tmp / "CAMO", {{"a", fixtures::rect_mask(3, 3, 0, 0, 1, 1)}});
  const auto m = scan_dataset(tmp / "CAMO", DatasetKind::image);
  EXPECT_EQ(m.samples.size(), 1u);
  ASSERT_EQ(m.warnings.size(), 1u);
  EXPECT_NE(m.warnings[0].find("1250"), std::string::npos);
}

TEST(DatasetKinds, NamesRoundTrip) {
  for (const auto k : {DatasetKind::image, DatasetKind::video, DatasetKind::volume})
    EXPECT_EQ(parse_dataset_kind(dataset_kind_name(k)), k);
  EXPECT_THROW(parse_dataset_kind("point-cloud"), ConfigError);
}
