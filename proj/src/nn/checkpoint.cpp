#include "gaitrec/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace gaitrec::nn {

namespace io {

namespace {
template <typename T>
void write_le(std::ostream& os, T v) {
  static_assert(std::is_integral_v<T>);
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  require(static_cast<bool>(is), "checkpoint: unexpected end of file");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}
}  // namespace

void write_u32(std::ostream& os, std::uint32_t v) { write_le(os, v); }
void write_u64(std::ostream& os, std::uint64_t v) { write_le(os, v); }

void write_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  write_le(os, bits);
}

void write_string(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& is) { return read_le<std::uint32_t>(is); }
std::uint64_t read_u64(std::istream& is) { return read_le<std::uint64_t>(is); }

double read_f64(std::istream& is) {
  const std::uint64_t bits = read_le<std::uint64_t>(is);
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

std::string read_string(std::istream& is) {
  const std::uint64_t n = read_u64(is);
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  require(static_cast<bool>(is), "checkpoint: unexpected end of file in string");
  return s;
}

}  // namespace io

void save_checkpoint(const std::filesystem::path& path, const std::string& model_kind,
                     const nlohmann::json& meta, const std::vector<const Tensor*>& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(os), "checkpoint: cannot open for writing: " + path.string());
  os.write(kCheckpointMagic, 4);
  io::write_u32(os, kCheckpointVersion);
  io::write_string(os, model_kind);
  io::write_string(os, meta.dump());
  io::write_u64(os, tensors.size());
  for (const Tensor* t : tensors) {
    io::write_u32(os, static_cast<std::uint32_t>(t->ndim()));
    for (std::size_t d : t->shape()) io::write_u64(os, d);
    // Bulk doubles: bit-exact little-endian payload.
    if constexpr (std::endian::native == std::endian::little) {
      os.write(reinterpret_cast<const char*>(t->data()),
               static_cast<std::streamsize>(t->size() * sizeof(double)));
    } else {
      for (double v : t->values()) io::write_f64(os, v);
    }
  }
  require(static_cast<bool>(os), "checkpoint: write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), "checkpoint: cannot open: " + path.string());
  char magic[4];
  is.read(magic, 4);
  require(static_cast<bool>(is) && std::memcmp(magic, kCheckpointMagic, 4) == 0,
          "checkpoint: bad magic in " + path.string());
  const std::uint32_t version = io::read_u32(is);
  require(version == kCheckpointVersion,
          "checkpoint: unsupported format version " + std::to_string(version));

  Checkpoint ck;
  ck.model_kind = io::read_string(is);
  const std::string meta_str = io::read_string(is);
  ck.meta = nlohmann::json::parse(meta_str);
  const std::uint64_t count = io::read_u64(is);
  ck.tensors.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t ndim = io::read_u32(is);
    Shape shape(ndim);
    for (auto& d : shape) d = io::read_u64(is);
    Tensor t(shape);
    if constexpr (std::endian::native == std::endian::little) {
      is.read(reinterpret_cast<char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
      require(static_cast<bool>(is), "checkpoint: truncated tensor payload");
    } else {
      for (double& v : t.values()) v = io::read_f64(is);
    }
    ck.tensors.push_back(std::move(t));
  }
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::string& expected_kind) {
  Checkpoint ck = load_checkpoint(path);
  require(ck.model_kind == expected_kind, "checkpoint: " + path.string() + " holds model kind '" +
                                              ck.model_kind + "', expected '" + expected_kind + "'");
  return ck;
}

}  // namespace gaitrec::nn
