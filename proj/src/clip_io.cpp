#include "rcnet/clip_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rcnet/binary_io.hpp"

namespace rcnet {

namespace {
constexpr std::string_view kClipMagic = "RCCLIP1";
}

std::vector<std::uint8_t> clip_bytes(const ClipSample &s) {
  const Dims5 &d = s.clip.dims();
  if (d.n != 1)
    throw ShapeError("clip file holds a single clip, got batch " + d.str());
  if (s.mask.n != 1 || s.mask.h != d.h || s.mask.w != d.w)
    throw ShapeError("mask dims do not match clip " + d.str());
  ByteWriter w;
  w.text(kClipMagic);
  w.u32(static_cast<std::uint32_t>(d.l));
  w.u32(static_cast<std::uint32_t>(d.h));
  w.u32(static_cast<std::uint32_t>(d.w));
  w.u32(static_cast<std::uint32_t>(d.c));
  w.bytes(s.clip.data(), s.clip.size() * sizeof(float));
  w.bytes(s.mask.data.data(), s.mask.data.size());
  w.str32(s.scenario);
  return w.take();
}

ClipSample clip_from_bytes(const std::vector<std::uint8_t> &bytes) {
  ByteReader r(bytes);
  r.expect_magic(kClipMagic);
  const std::size_t dims_at = r.offset();
  const std::size_t L = r.u32("clip length");
  const std::size_t H = r.u32("clip height");
  const std::size_t W = r.u32("clip width");
  const std::size_t C = r.u32("clip channels");
  if (L == 0 || H == 0 || W == 0 || C == 0)
    throw FormatError("zero clip dimension in header at offset " +
                      std::to_string(dims_at));
  ClipSample s;
  const Dims5 d{1, C, L, H, W};
  r.need(d.count() * sizeof(float), "frame data");
  s.clip = Tensor5f(d);
  r.bytes(s.clip.data(), s.clip.size() * sizeof(float), "frame data");
  s.mask = Mask2(1, H, W);
  const std::size_t mask_at = r.offset();
  r.bytes(s.mask.data.data(), s.mask.data.size(), "mask");
  for (std::size_t k = 0; k < s.mask.data.size(); ++k)
    if (s.mask.data[k] > 1)
      throw FormatError("mask byte " + std::to_string(s.mask.data[k]) +
                        " at offset " + std::to_string(mask_at + k) +
                        " is not 0 or 1");
  s.scenario = r.str32("scenario tag");
  if (!r.at_end())
    throw FormatError("trailing bytes after clip at offset " +
                      std::to_string(r.offset()));
  s.refresh_fg_ratio();
  return s;
}

void save_clip(const ClipSample &s, const std::string &path) {
  write_file_bytes(path, clip_bytes(s));
}

ClipSample load_clip(const std::string &path) {
  return clip_from_bytes(read_file_bytes(path));
}

std::vector<std::string> read_manifest(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw FormatError("cannot read manifest '" + path + "'");
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos)
      continue;
    const auto e = line.find_last_not_of(" \t\r");
    out.push_back(line.substr(b, e - b + 1));
  }
  return out;
}

void write_manifest(const std::string &path,
                    const std::vector<std::string> &entries,
                    const std::string &header) {
  std::ostringstream os;
  if (!header.empty())
    os << "# " << header << "\n";
  for (const auto &e : entries)
    os << e << "\n";
  const std::string text = os.str();
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

CorpusLoad load_corpus(const std::string &manifest_path) {
  const auto base = std::filesystem::path(manifest_path).parent_path();
  CorpusLoad out;
  for (const auto &rel : read_manifest(manifest_path)) {
    const auto p = (base / rel).string();
    try {
      out.samples.push_back(load_clip(p));
    } catch (const Error &e) {
      out.failures.push_back(p + ": " + e.what());
    }
  }
  return out;
}

void write_pgm(const std::string &path, const Mask2 &mask, std::size_t item) {
  if (item >= mask.n)
    throw ShapeError("write_pgm: mask item out of range");
  const std::string header = "P5\n" + std::to_string(mask.w) + " " +
                             std::to_string(mask.h) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  for (std::size_t i = 0; i < mask.h; ++i)
    for (std::size_t j = 0; j < mask.w; ++j)
      bytes.push_back(mask(item, i, j) ? 255 : 0);
  write_file_bytes(path, bytes);
}

} // namespace rcnet
