#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcnet/scene.hpp"

namespace rcnet {

// RCCLIP1: "RCCLIP1", u32 L, H, W, C, f32 frames in C x L x H x W order,
// H*W mask bytes (0/1), u32-length prefixed UTF-8 scenario tag.
std::vector<std::uint8_t> clip_bytes(const ClipSample &s);
/// FormatError (with byte offset) on malformed input.
ClipSample clip_from_bytes(const std::vector<std::uint8_t> &bytes);
void save_clip(const ClipSample &s, const std::string &path);
ClipSample load_clip(const std::string &path);

/// Corpus manifest: one relative clip path per line, '#' comments.
std::vector<std::string> read_manifest(const std::string &path);
void write_manifest(const std::string &path,
                    const std::vector<std::string> &entries,
                    const std::string &header = {});

/// Loads every clip listed in a manifest (paths relative to its directory).
/// Unreadable clips are skipped and counted.
struct CorpusLoad {
  std::vector<ClipSample> samples;
  std::vector<std::string> failures; // "path: reason"
};
CorpusLoad load_corpus(const std::string &manifest_path);

/// Binary portable graymap (P5), 0 -> 0 and 1 -> 255.
void write_pgm(const std::string &path, const Mask2 &mask, std::size_t item = 0);

} // namespace rcnet
