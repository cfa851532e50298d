// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "s3t/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace s3t {

namespace {
constexpr char kMagic[8] = {'S', '3', 'T', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint8_t kDtypeF32 = 0;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
}  // namespace

void write_checkpoint(const std::string& path, const std::string& manifest_json,
                      const std::vector<TensorEntry>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kMagic, 8);
  put_u32(out, static_cast<std::uint32_t>(manifest_json.size()));
  out.write(manifest_json.data(), static_cast<std::streamsize>(manifest_json.size()));
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    out.put(static_cast<char>(kDtypeF32));
    out.put(2);  // rank
    put_u32(out, static_cast<std::uint32_t>(t.data.rows()));
    put_u32(out, static_cast<std::uint32_t>(t.data.cols()));
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(sizeof(float) * t.data.size()));
  }
  if (!out) throw std::runtime_error("short write to checkpoint: " + path);
}

CheckpointFile read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("bad checkpoint magic: " + path);

  CheckpointFile ck;
  const std::uint32_t mlen = get_u32(in);
  ck.manifest_json.resize(mlen);
  in.read(ck.manifest_json.data(), mlen);

  const std::uint32_t count = get_u32(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t nlen = get_u32(in);
    std::string name(nlen, '\0');
    in.read(name.data(), nlen);
    const int dtype = in.get();
    const int rank = in.get();
    if (dtype != kDtypeF32 || rank != 2) {
      throw std::runtime_error("unsupported tensor encoding in checkpoint: " + name);
    }
    const std::uint32_t rows = get_u32(in);
    const std::uint32_t cols = get_u32(in);
    MatF m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(float) * m.size()));
    ck.tensors.emplace(std::move(name), std::move(m));
  }
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  return ck;
}

}  // namespace s3t
