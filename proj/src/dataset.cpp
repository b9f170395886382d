#include "promptseg/dataset.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>

#include "promptseg/error.hpp"

namespace promptseg {
namespace fs = std::filesystem;
namespace {

const std::set<std::string> kImageExt = {".png", ".jpg", ".jpeg", ".bmp", ".pgm", ".ppm", ".tif", ".tiff"};
const std::set<std::string> kMaskExt = {".png", ".pgm"};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool is_numeric(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

/// Numeric stems first by value (zero padding ignored), then the rest by name.
bool frame_less(const std::string& a, const std::string& b) {
  const bool na = is_numeric(a), nb = is_numeric(b);
  if (na != nb) return na;
  if (na) {
    auto strip = [](const std::string& s) {
      const auto p = s.find_first_not_of('0');
      return p == std::string::npos ? std::string("0") : s.substr(p);
    };
    const auto sa = strip(a), sb = strip(b);
    if (sa.size() != sb.size()) return sa.size() < sb.size();
    if (sa != sb) return sa < sb;
  }
  return a < b;
}

/// stem -> path for regular files with an accepted extension; duplicate stems are warned about.
std::map<std::string, fs::path> files_by_stem(const fs::path& dir, const std::set<std::string>& exts,
                                              std::vector<std::string>& warnings) {
  std::map<std::string, fs::path> out;
  std::vector<fs::path> entries;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && exts.count(lower(e.path().extension().string()))) entries.push_back(e.path());
  std::sort(entries.begin(), entries.end());
  for (const auto& p : entries) {
    const auto stem = p.stem().string();
    if (!out.emplace(stem, p).second) warnings.push_back("duplicate stem '" + stem + "' ignored: " + p.string());
  }
  return out;
}

std::vector<SamplePaths> pair_files(const fs::path& images, const fs::path& masks, const std::string& prefix,
                                    DatasetManifest& m) {
  const auto imgs = files_by_stem(images, kImageExt, m.warnings);
  const auto msks = fs::is_directory(masks) ? files_by_stem(masks, kMaskExt, m.warnings)
                                            : std::map<std::string, fs::path>{};
  std::vector<SamplePaths> out;
  for (const auto& [stem, path] : imgs) {
    ++m.discovered_images;
    auto it = msks.find(stem);
    if (it == msks.end()) {
      ++m.unmatched_images;
      m.warnings.push_back("image without mask: " + path.string());
      continue;
    }
    out.push_back({prefix + stem, path, it->second});
  }
  for (const auto& [stem, path] : msks)
    if (!imgs.count(stem)) m.warnings.push_back("mask without image: " + path.string());
  return out;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

BinaryMask load_png(const fs::path& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError("load_mask: cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) throw IoError("load_mask: libpng init failed");
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};

  if (setjmp(png_jmpbuf(png))) throw IoError("load_mask: corrupt PNG " + path.string());
  png_init_io(png, f.get());
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY)
    throw IoError("load_mask: " + path.string() +
                  " is not single-channel grayscale; convert it first (e.g. `convert in.png -colorspace Gray "
                  "-depth 8 out.png`)");
  if (depth == 16)
    throw IoError("load_mask: " + path.string() + " is 16-bit; convert it to 8-bit grayscale first");
  if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);

  const Index w = png_get_image_width(png, info), h = png_get_image_height(png, info);
  std::vector<png_byte> row(png_get_rowbytes(png, info));
  Grid<bool> bits(h, w);
  for (Index y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (Index x = 0; x < w; ++x) bits(y, x) = row[x] > 127;
  }
  return BinaryMask(std::move(bits));
}

BinaryMask load_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_mask: cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic == "P3" || magic == "P6")
    throw IoError("load_mask: " + path.string() + " is a colour PPM; convert it to 8-bit grayscale (P5) first");
  if (magic != "P2" && magic != "P5") throw IoError("load_mask: " + path.string() + " is not a PGM file");
  auto next_int = [&]() {
    for (;;) {
      in >> std::ws;
      if (in.peek() == '#') {
        std::string comment;
        std::getline(in, comment);
        continue;
      }
      long v = -1;
      if (!(in >> v)) throw IoError("load_mask: truncated PGM header in " + path.string());
      return v;
    }
  };
  const long w = next_int(), h = next_int(), maxval = next_int();
  if (w < 1 || h < 1) throw IoError("load_mask: bad PGM dimensions in " + path.string());
  if (maxval != 255)
    throw IoError("load_mask: " + path.string() + " has maxval " + std::to_string(maxval) +
                  "; only 8-bit (maxval 255) grayscale is accepted");
  Grid<bool> bits(h, w);
  if (magic == "P5") {
    in.get();
    std::vector<unsigned char> data(static_cast<std::size_t>(w * h));
    if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size())))
      throw IoError("load_mask: truncated PGM data in " + path.string());
    for (Index i = 0; i < bits.size(); ++i) bits.data()[i] = data[static_cast<std::size_t>(i)] > 127;
  } else {
    for (Index i = 0; i < bits.size(); ++i) bits.data()[i] = next_int() > 127;
  }
  return BinaryMask(std::move(bits));
}

}  // namespace

DatasetKind parse_dataset_kind(const std::string& s) {
  if (s == "image") return DatasetKind::image;
  if (s == "video") return DatasetKind::video;
  if (s == "volume") return DatasetKind::volume;
  throw ConfigError("unknown dataset kind '" + s + "' (image, video, volume)");
}

const char* dataset_kind_name(DatasetKind k) {
  switch (k) {
    case DatasetKind::image: return "image";
    case DatasetKind::video: return "video";
    case DatasetKind::volume: return "volume";
  }
  return "?";
}

DatasetManifest scan_dataset(const fs::path& root, DatasetKind kind, Split split) {
  const fs::path images = root / "images", masks = root / "masks";
  if (!fs::is_directory(root)) throw IoError("scan_dataset: missing directory " + root.string());
  if (!fs::is_directory(images)) throw IoError("scan_dataset: missing directory " + images.string());

  DatasetManifest m;
  m.root = root;
  m.name = fs::absolute(root).lexically_normal().filename().string();
  if (m.name.empty()) m.name = fs::absolute(root).lexically_normal().parent_path().filename().string();
  m.kind = kind;
  m.split = split;

  std::size_t pairs = 0;
  if (kind == DatasetKind::image) {
    m.samples = pair_files(images, masks, "", m);
    pairs = m.samples.size();
  } else {
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(images))
      if (e.is_directory()) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) {
      const auto seq_id = d.filename().string();
      SequencePaths seq{seq_id, pair_files(d, masks / seq_id, seq_id + "/", m)};
      std::sort(seq.frames.begin(), seq.frames.end(), [&](const SamplePaths& a, const SamplePaths& b) {
        return frame_less(a.image.stem().string(), b.image.stem().string());
      });
      if (seq.frames.empty()) {
        m.warnings.push_back("sequence without any matched frame: " + d.string());
        continue;
      }
      pairs += seq.frames.size();
      m.sequences.push_back(std::move(seq));
    }
  }
  if (pairs == 0) throw IoError("scan_dataset: no image/mask pairs under " + root.string());

  if (auto expected = known_sample_count(m.name, split); expected && kind == DatasetKind::image && *expected != pairs)
    m.warnings.push_back("dataset '" + m.name + "' has " + std::to_string(pairs) + " pairs; the reference " +
                         (split == Split::train ? "training" : "test") + " split has " + std::to_string(*expected));
  return m;
}

BinaryMask load_mask(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw IoError("load_mask: cannot read " + path.string());
  const auto ext = lower(path.extension().string());
  if (ext == ".png") return load_png(path);
  if (ext == ".pgm" || ext == ".pnm" || ext == ".ppm") return load_pnm(path);
  throw IoError("load_mask: unsupported mask format '" + ext + "' (" + path.string() +
                "); convert masks to 8-bit grayscale PNG");
}

void save_mask_png(const BinaryMask& mask, const fs::path& path) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("save_mask_png: cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) throw IoError("save_mask_png: libpng init failed");
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};
  if (setjmp(png_jmpbuf(png))) throw IoError("save_mask_png: write failed for " + path.string());
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(mask.width()), static_cast<png_uint_32>(mask.height()), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(mask.width()));
  for (Index y = 0; y < mask.height(); ++y) {
    for (Index x = 0; x < mask.width(); ++x) row[static_cast<std::size_t>(x)] = mask(y, x) ? 255 : 0;
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
}

void save_mask_pgm(const BinaryMask& mask, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_mask_pgm: cannot write " + path.string());
  out << "P5\n" << mask.width() << " " << mask.height() << "\n255\n";
  for (Index i = 0; i < mask.size(); ++i) out.put(mask.bits().data()[i] ? static_cast<char>(255) : 0);
}

SequenceRecord load_sequence(const SequencePaths& seq, SequenceKind kind) {
  std::vector<Frame> frames;
  frames.reserve(seq.frames.size());
  for (const auto& f : seq.frames) frames.push_back({f.image.string(), load_mask(f.mask)});
  return SequenceRecord(seq.id, kind, std::move(frames));
}

std::optional<std::size_t> known_sample_count(const std::string& dataset_name, Split split) {
  struct Known {
    const char* name;
    std::size_t train, test;
  };
  static const Known kTable[] = {
      {"DUTS", 10553, 5019}, {"ECSSD", 0, 1000}, {"DUT-OMRON", 0, 5168}, {"PASCAL-S", 0, 850},
      {"CAMO", 0, 1250},     {"COD10K", 0, 5066}, {"NC4K", 0, 4121},
  };
  const auto upper = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
    return s;
  };
  const auto name = upper(dataset_name);
  for (const auto& k : kTable) {
    if (name != k.name) continue;
    const auto n = split == Split::train ? k.train : k.test;
    if (n) return n;
  }
  return std::nullopt;
}

}  // namespace promptseg
