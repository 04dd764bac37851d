#include "pmrt/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "pmrt/errors.hpp"

namespace pmrt {

namespace {

constexpr char kMagic[8] = {'P', 'M', 'R', 'T', 'C', 'K', 'P', 'T'};

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_i64(std::ostream& out, int64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint32_t read_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw CorruptCheckpoint("truncated integer field");
  return v;
}

int64_t read_i64(std::istream& in) {
  int64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw CorruptCheckpoint("truncated integer field");
  return v;
}

std::string read_string(std::istream& in) {
  uint32_t len = read_u32(in);
  if (len > (1u << 30)) throw CorruptCheckpoint("implausible string length");
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw CorruptCheckpoint("truncated string field");
  return s;
}

}  // namespace

void save_archive(const std::string& path, const Archive& archive) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(kMagic, sizeof kMagic);
  write_u32(out, kArchiveVersion);

  write_u32(out, static_cast<uint32_t>(archive.ints.size()));
  for (const auto& [key, value] : archive.ints) {
    write_string(out, key);
    write_i64(out, value);
  }
  write_u32(out, static_cast<uint32_t>(archive.strings.size()));
  for (const auto& [key, value] : archive.strings) {
    write_string(out, key);
    write_string(out, value);
  }
  write_u32(out, static_cast<uint32_t>(archive.tensors.size()));
  for (const auto& [key, tensor] : archive.tensors) {
    write_string(out, key);
    write_u32(out, static_cast<uint32_t>(tensor.ndim()));
    for (size_t d = 0; d < tensor.ndim(); ++d)
      write_i64(out, static_cast<int64_t>(tensor.dim(d)));
    out.write(reinterpret_cast<const char*>(tensor.data()),
              static_cast<std::streamsize>(tensor.size() * sizeof(double)));
  }
  if (!out) throw IoError("short write to " + path);
}

Archive load_archive(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw CorruptCheckpoint(path + ": not a checkpoint archive");
  uint32_t version = read_u32(in);
  if (version != kArchiveVersion)
    throw VersionMismatch(path + ": archive version " +
                          std::to_string(version) + ", expected " +
                          std::to_string(kArchiveVersion));

  Archive archive;
  uint32_t ints = read_u32(in);
  for (uint32_t i = 0; i < ints; ++i) {
    std::string key = read_string(in);
    archive.ints[key] = read_i64(in);
  }
  uint32_t strings = read_u32(in);
  for (uint32_t i = 0; i < strings; ++i) {
    std::string key = read_string(in);
    archive.strings[key] = read_string(in);
  }
  uint32_t tensors = read_u32(in);
  for (uint32_t i = 0; i < tensors; ++i) {
    std::string key = read_string(in);
    uint32_t ndim = read_u32(in);
    if (ndim > 4) throw CorruptCheckpoint(path + ": tensor rank " +
                                          std::to_string(ndim));
    std::vector<size_t> shape;
    size_t total = 1;
    for (uint32_t d = 0; d < ndim; ++d) {
      int64_t dim = read_i64(in);
      if (dim <= 0 || dim > (1ll << 32))
        throw CorruptCheckpoint(path + ": implausible dimension");
      shape.push_back(static_cast<size_t>(dim));
      total *= static_cast<size_t>(dim);
    }
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(total * sizeof(double)));
    if (!in) throw CorruptCheckpoint(path + ": truncated tensor data");
    archive.tensors.emplace(key, std::move(t));
  }
  return archive;
}

}  // namespace pmrt
