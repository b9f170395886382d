#pragma once

// Local dataset layouts.
//
//   image:   <root>/images/<stem>.<ext>        <root>/masks/<stem>.<png|pgm>
//   video:   <root>/images/<seq>/<frame>.<ext> <root>/masks/<seq>/<frame>.<png|pgm>
//   volume:  same as video, one directory per volume, one file per slice
//
// Images are paired with masks by filename stem. Frames sort by the numeric value of
// their stem ("7" < "08" < "10"); non-numeric stems sort after numeric ones, by name.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "promptseg/core.hpp"

namespace promptseg {

enum class DatasetKind { image, video, volume };
enum class Split { train, test };

DatasetKind parse_dataset_kind(const std::string& s);
const char* dataset_kind_name(DatasetKind k);

struct SamplePaths {
  std::string id;
  std::filesystem::path image;
  std::filesystem::path mask;
};

struct SequencePaths {
  std::string id;
  std::vector<SamplePaths> frames;
};

struct DatasetManifest {
  std::string name;
  DatasetKind kind = DatasetKind::image;
  Split split = Split::test;
  std::filesystem::path root;
  std::vector<SamplePaths> samples;      // image kind
  std::vector<SequencePaths> sequences;  // video / volume kinds
  /// Images without a mask, masks without an image, size-count notes.
  std::vector<std::string> warnings;
  /// Count of discovered image files (matched + unmatched).
  std::size_t discovered_images = 0;
  std::size_t unmatched_images = 0;
};

/// Throws IoError when the layout directories are missing or no pair matches.
DatasetManifest scan_dataset(const std::filesystem::path& root, DatasetKind kind, Split split = Split::test);

/// 8-bit grayscale PNG or binary/ASCII PGM; foreground iff value > 127.
/// Colour or 16-bit inputs are rejected with a conversion hint.
BinaryMask load_mask(const std::filesystem::path& path);

/// Writes an 8-bit grayscale PNG with 0 / 255 values.
void save_mask_png(const BinaryMask& mask, const std::filesystem::path& path);
/// Writes a binary PGM with 0 / 255 values.
void save_mask_pgm(const BinaryMask& mask, const std::filesystem::path& path);

/// Loads every frame of a sequence into a SequenceRecord (image refs are the image paths).
SequenceRecord load_sequence(const SequencePaths& seq, SequenceKind kind);

/// Reference sample counts for well-known benchmarks (warn-only sanity check).
std::optional<std::size_t> known_sample_count(const std::string& dataset_name, Split split);

}  // namespace promptseg
