// Copyright 2026 the convoaffect authors. Apache 2.0 license.
//
// The "CAFE" binary container used for every float payload the tools
// exchange: segment embeddings, log-mel patches, and model checkpoints.
//
// Layout (all integers little-endian):
//   magic   "CAFE" (4 ASCII bytes)
//   u8      version (currently 1)
//   u8      kind    (1 = embeddings, 2 = patches, 3 = checkpoint)
//   u16     reserved, must be 0
//   kind 1: u32 count, u32 dim
//   kind 2: u32 count, u32 rows, u32 cols
//   kind 3: u32 count (tensors), u32 header_len, JSON header bytes
//   payload: float32, row-major
//
// For checkpoints the JSON header carries config/metadata plus the tensor
// names and shapes in payload order; see checkpoint.hpp.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "convoaffect/common.hpp"

namespace convoaffect {

inline constexpr char kContainerMagic[4] = {'C', 'A', 'F', 'E'};
inline constexpr std::uint8_t kContainerVersion = 1;

enum class PayloadKind : std::uint8_t {
  embeddings = 1,
  patches = 2,
  checkpoint = 3,
};

struct EmbeddingFile {
  std::uint32_t count = 0;
  std::uint32_t dim = 0;
  std::vector<float> data;  // count x dim, row-major
};

struct PatchFile {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<float> data;  // count x rows x cols, row-major
};

void write_embedding_file(const std::string& path, const EmbeddingFile& file);
EmbeddingFile read_embedding_file(const std::string& path);

void write_patch_file(const std::string& path, const PatchFile& file);
PatchFile read_patch_file(const std::string& path);

// Reads the 6-byte prefix and returns the kind, without loading the payload.
PayloadKind sniff_container_kind(const std::string& path);

// True when the file starts with the container magic (vs. e.g. RIFF audio).
bool is_container_file(const std::string& path);

namespace detail {

// Byte-buffer codec shared by the container readers/writers and the
// checkpoint layer.
struct ByteWriter {
  std::vector<std::uint8_t> bytes;
  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void f32(float v);
  void raw(const void* data, std::size_t n);
};

struct ByteReader {
  const std::uint8_t* data = nullptr;
  std::size_t size = 0;
  std::size_t pos = 0;
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  float f32();
  void raw(void* out, std::size_t n);
  void require(std::size_t n) const;
};

void write_file_bytes(const std::string& path,
                      const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_file_bytes(const std::string& path);

// Emits magic/version/kind/reserved. The reader checks magic before
// version so a wrong file type reports FormatError, not VersionError.
void write_container_prefix(ByteWriter& w, PayloadKind kind);
PayloadKind read_container_prefix(ByteReader& r);

}  // namespace detail

}  // namespace convoaffect
