#include "egoexo/nn/checkpoint.hpp"

#include <array>
#include <bit>
#include <fstream>

namespace egoexo::nn {

namespace {

constexpr std::array<char, 4> kMagic{'E', 'C', 'K', 'P'};

void put_u32(std::ostream& os, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::ostream& os, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(is.get())) << (8 * i);
  if (!is) fail(ErrorKind::CheckpointIncompatible, "truncated checkpoint");
  return v;
}

std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(is.get())) << (8 * i);
  if (!is) fail(ErrorKind::CheckpointIncompatible, "truncated checkpoint");
  return v;
}

void put_string(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is, std::uint32_t limit = 1u << 26) {
  const auto n = get_u32(is);
  if (n > limit) fail(ErrorKind::CheckpointIncompatible, "implausible string length in checkpoint");
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) fail(ErrorKind::CheckpointIncompatible, "truncated checkpoint");
  return s;
}

void put_arrays(std::ostream& os, const std::vector<NamedArray>& arrays) {
  put_u32(os, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& a : arrays) {
    put_string(os, a.name);
    put_u32(os, 4);
    for (int d : a.shape) put_u32(os, static_cast<std::uint32_t>(d));
    for (float f : a.data) put_u32(os, std::bit_cast<std::uint32_t>(f));
  }
}

std::vector<NamedArray> get_arrays(std::istream& is) {
  const auto count = get_u32(is);
  std::vector<NamedArray> out;
  out.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedArray a;
    a.name = get_string(is, 4096);
    if (get_u32(is) != 4) fail(ErrorKind::CheckpointIncompatible, "array " + a.name + " is not rank 4");
    std::size_t n = 1;
    for (int& d : a.shape) {
      d = static_cast<int>(get_u32(is));
      n *= static_cast<std::size_t>(d);
    }
    if (n > (std::size_t{1} << 31)) fail(ErrorKind::CheckpointIncompatible, "array " + a.name + " too large");
    a.data.resize(n);
    for (float& f : a.data) f = std::bit_cast<float>(get_u32(is));
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace

const NamedArray* Checkpoint::find_param(const std::string& name) const {
  for (const auto& a : params) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) fail(ErrorKind::MissingFile, "cannot create " + tmp.string());
    os.write(kMagic.data(), 4);
    put_u32(os, Checkpoint::kVersion);
    put_string(os, ckpt.kind);
    put_string(os, ckpt.config_json);
    put_u64(os, static_cast<std::uint64_t>(ckpt.step));
    put_u64(os, static_cast<std::uint64_t>(ckpt.epoch));
    put_arrays(os, ckpt.params);
    put_arrays(os, ckpt.buffers);
    put_arrays(os, ckpt.optimizer);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::MissingFile, "checkpoint " + path.string());
  std::array<char, 4> magic{};
  is.read(magic.data(), 4);
  if (!is || magic != kMagic) fail(ErrorKind::CheckpointIncompatible, "not a checkpoint: " + path.string());
  const auto version = get_u32(is);
  if (version != Checkpoint::kVersion) {
    fail(ErrorKind::CheckpointIncompatible, "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  c.kind = get_string(is);
  c.config_json = get_string(is);
  c.step = static_cast<std::int64_t>(get_u64(is));
  c.epoch = static_cast<std::int64_t>(get_u64(is));
  c.params = get_arrays(is);
  c.buffers = get_arrays(is);
  c.optimizer = get_arrays(is);
  return c;
}

}  // namespace egoexo::nn
