// Copyright 2026 the convoaffect authors. Apache 2.0 license.

#include "convoaffect/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace convoaffect {
namespace detail {

void ByteWriter::u16(std::uint16_t v) {
  bytes.push_back(static_cast<std::uint8_t>(v & 0xff));
  bytes.push_back(static_cast<std::uint8_t>(v >> 8));
}

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

void ByteWriter::f32(float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  u32(bits);
}

void ByteWriter::raw(const void* data, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  bytes.insert(bytes.end(), p, p + n);
}

void ByteReader::require(std::size_t n) const {
  if (pos + n > size) {
    throw FormatError("container truncated: need " + std::to_string(n) +
                      " bytes at offset " + std::to_string(pos) +
                      ", file has " + std::to_string(size));
  }
}

std::uint8_t ByteReader::u8() {
  require(1);
  return data[pos++];
}

std::uint16_t ByteReader::u16() {
  require(2);
  std::uint16_t v = static_cast<std::uint16_t>(data[pos]) |
                    static_cast<std::uint16_t>(data[pos + 1]) << 8;
  pos += 2;
  return v;
}

std::uint32_t ByteReader::u32() {
  require(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(data[pos + i]) << (8 * i);
  }
  pos += 4;
  return v;
}

float ByteReader::f32() {
  std::uint32_t bits = u32();
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

void ByteReader::raw(void* out, std::size_t n) {
  require(n);
  std::memcpy(out, data + pos, n);
  pos += n;
}

void write_file_bytes(const std::string& path,
                      const std::vector<std::uint8_t>& bytes) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) {
    throw FormatError("cannot open for writing: " + path);
  }
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
  if (!os) {
    throw FormatError("short write: " + path);
  }
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  if (!is) {
    throw FormatError("cannot open: " + path);
  }
  const auto n = static_cast<std::size_t>(is.tellg());
  is.seekg(0);
  std::vector<std::uint8_t> bytes(n);
  is.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(n));
  if (!is) {
    throw FormatError("short read: " + path);
  }
  return bytes;
}

void write_container_prefix(ByteWriter& w, PayloadKind kind) {
  w.raw(kContainerMagic, 4);
  w.u8(kContainerVersion);
  w.u8(static_cast<std::uint8_t>(kind));
  w.u16(0);
}

PayloadKind read_container_prefix(ByteReader& r) {
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kContainerMagic, 4) != 0) {
    throw FormatError(std::string("bad container magic \"") +
                      std::string(magic, 4) + "\", expected \"CAFE\"");
  }
  const std::uint8_t version = r.u8();
  if (version != kContainerVersion) {
    throw VersionError("unsupported container version " +
                       std::to_string(version) + ", expected " +
                       std::to_string(kContainerVersion));
  }
  const std::uint8_t kind = r.u8();
  if (kind < 1 || kind > 3) {
    throw FormatError("unknown container kind " + std::to_string(kind));
  }
  const std::uint16_t reserved = r.u16();
  if (reserved != 0) {
    throw FormatError("nonzero reserved field in container header");
  }
  return static_cast<PayloadKind>(kind);
}

namespace {

void write_f32_block(ByteWriter& w, const std::vector<float>& data) {
  // IEEE-754 single on a little-endian host is already the wire format.
  static_assert(sizeof(float) == 4);
  if constexpr (std::endian::native == std::endian::little) {
    w.raw(data.data(), data.size() * 4);
  } else {
    for (float v : data) w.f32(v);
  }
}

void read_f32_block(ByteReader& r, std::vector<float>& out, std::size_t n) {
  out.resize(n);
  if constexpr (std::endian::native == std::endian::little) {
    r.raw(out.data(), n * 4);
  } else {
    for (std::size_t i = 0; i < n; ++i) out[i] = r.f32();
  }
}

}  // namespace
}  // namespace detail

void write_embedding_file(const std::string& path, const EmbeddingFile& file) {
  if (file.data.size() !=
      static_cast<std::size_t>(file.count) * file.dim) {
    throw DimError("embedding payload size " + std::to_string(file.data.size()) +
                   " does not match count*dim = " +
                   std::to_string(static_cast<std::size_t>(file.count) * file.dim));
  }
  detail::ByteWriter w;
  detail::write_container_prefix(w, PayloadKind::embeddings);
  w.u32(file.count);
  w.u32(file.dim);
  detail::write_f32_block(w, file.data);
  detail::write_file_bytes(path, w.bytes);
}

EmbeddingFile read_embedding_file(const std::string& path) {
  const auto bytes = detail::read_file_bytes(path);
  detail::ByteReader r{bytes.data(), bytes.size()};
  if (detail::read_container_prefix(r) != PayloadKind::embeddings) {
    throw FormatError("not an embeddings container: " + path);
  }
  EmbeddingFile file;
  file.count = r.u32();
  file.dim = r.u32();
  detail::read_f32_block(r, file.data,
                         static_cast<std::size_t>(file.count) * file.dim);
  if (r.pos != r.size) {
    throw FormatError("trailing bytes after embeddings payload: " + path);
  }
  return file;
}

void write_patch_file(const std::string& path, const PatchFile& file) {
  const std::size_t expect =
      static_cast<std::size_t>(file.count) * file.rows * file.cols;
  if (file.data.size() != expect) {
    throw DimError("patch payload size " + std::to_string(file.data.size()) +
                   " does not match count*rows*cols = " + std::to_string(expect));
  }
  detail::ByteWriter w;
  detail::write_container_prefix(w, PayloadKind::patches);
  w.u32(file.count);
  w.u32(file.rows);
  w.u32(file.cols);
  detail::write_f32_block(w, file.data);
  detail::write_file_bytes(path, w.bytes);
}

PatchFile read_patch_file(const std::string& path) {
  const auto bytes = detail::read_file_bytes(path);
  detail::ByteReader r{bytes.data(), bytes.size()};
  if (detail::read_container_prefix(r) != PayloadKind::patches) {
    throw FormatError("not a patches container: " + path);
  }
  PatchFile file;
  file.count = r.u32();
  file.rows = r.u32();
  file.cols = r.u32();
  detail::read_f32_block(
      r, file.data,
      static_cast<std::size_t>(file.count) * file.rows * file.cols);
  if (r.pos != r.size) {
    throw FormatError("trailing bytes after patches payload: " + path);
  }
  return file;
}

PayloadKind sniff_container_kind(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw FormatError("cannot open: " + path);
  }
  std::uint8_t head[8];
  is.read(reinterpret_cast<char*>(head), 8);
  if (is.gcount() < 8) {
    throw FormatError("container truncated: " + path);
  }
  detail::ByteReader r{head, 8};
  return detail::read_container_prefix(r);
}

bool is_container_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    return false;
  }
  char magic[4];
  is.read(magic, 4);
  return is.gcount() == 4 && std::memcmp(magic, kContainerMagic, 4) == 0;
}

}  // namespace convoaffect
