#include "wavesal/wavecube.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "wavesal/errors.hpp"

namespace wavesal {

namespace {

void check_shape(std::size_t n1, std::size_t n2, std::size_t t_len, double dx,
                 double dt) {
  if (n1 < 2 || n2 < 2 || t_len < 1)
    throw DataError("cube needs n1 >= 2, n2 >= 2, t_len >= 1");
  if (!(dx > 0.0) || !std::isfinite(dx))
    throw DataError("cube spacing dx must be positive and finite");
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw DataError("cube time step dt must be positive and finite");
  constexpr auto u32 = std::numeric_limits<std::uint32_t>::max();
  if (n1 > u32 || n2 > u32 || t_len > u32)
    throw DataError("cube dimension exceeds 32-bit range");
}

template <std::size_t N>
using Bytes = std::array<unsigned char, N>;

Bytes<4> le_u32(std::uint32_t v) {
  return {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
          static_cast<unsigned char>(v >> 16),
          static_cast<unsigned char>(v >> 24)};
}

Bytes<8> le_f64(double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  Bytes<8> b{};
  for (std::size_t i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  return b;
}

std::uint32_t from_le_u32(const unsigned char* b) {
  return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) |
         (std::uint32_t{b[2]} << 16) | (std::uint32_t{b[3]} << 24);
}

double from_le_f64(const unsigned char* b) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
  return std::bit_cast<double>(v);
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <std::size_t N>
  void put(const Bytes<N>& b) {
    put(b.data(), N);
  }
  void put(const unsigned char* data, std::size_t n) {
    out_.write(reinterpret_cast<const char*>(data),
               static_cast<std::streamsize>(n));
    if (!out_) throw IoError("write failed", offset_);
    offset_ += n;
  }
  std::size_t offset() const { return offset_; }

 private:
  std::ostream& out_;
  std::size_t offset_ = 0;
};

// Reads exactly n bytes; returns how many were available.
std::size_t read_some(std::istream& in, unsigned char* data, std::size_t n) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount());
}

}  // namespace

DataCube::DataCube(std::size_t n1, std::size_t n2, std::size_t t_len,
                   double dx, double dt)
    : n1_(n1), n2_(n2), t_len_(t_len), dx_(dx), dt_(dt) {
  check_shape(n1, n2, t_len, dx, dt);
  values_.assign(n1 * n2 * t_len, 0.0);
}

DataCube::DataCube(std::size_t n1, std::size_t n2, std::size_t t_len,
                   double dx, double dt, std::vector<double> values)
    : n1_(n1), n2_(n2), t_len_(t_len), dx_(dx), dt_(dt),
      values_(std::move(values)) {
  check_shape(n1, n2, t_len, dx, dt);
  if (values_.size() != n1 * n2 * t_len)
    throw LengthMismatchError("cube payload has " +
                              std::to_string(values_.size()) +
                              " samples, shape requires " +
                              std::to_string(n1 * n2 * t_len));
}

void DataCube::validate() const {
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k]))
      throw DataError("non-finite sample at payload index " +
                      std::to_string(k));
  }
}

double DataCube::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool operator==(const DataCube& a, const DataCube& b) {
  if (a.n1_ != b.n1_ || a.n2_ != b.n2_ || a.t_len_ != b.t_len_) return false;
  if (std::bit_cast<std::uint64_t>(a.dx_) != std::bit_cast<std::uint64_t>(b.dx_) ||
      std::bit_cast<std::uint64_t>(a.dt_) != std::bit_cast<std::uint64_t>(b.dt_))
    return false;
  return std::memcmp(a.values_.data(), b.values_.data(),
                     a.values_.size() * sizeof(double)) == 0;
}

Field2D slice_at(const DataCube& cube, std::size_t t_index) {
  if (t_index >= cube.t_len())
    throw BoundsError("time index " + std::to_string(t_index) +
                      " out of range [0, " + std::to_string(cube.t_len()) +
                      ")");
  auto s = cube.slice(t_index);
  return Field2D{cube.n1(), cube.n2(), std::vector<double>(s.begin(), s.end())};
}

std::size_t write_cube(const DataCube& cube, std::ostream& out) {
  cube.validate();
  Writer w(out);
  w.put(reinterpret_cast<const unsigned char*>(kCubeMagic), 4);
  w.put(le_u32(kCubeVersion));
  w.put(le_u32(static_cast<std::uint32_t>(cube.n1())));
  w.put(le_u32(static_cast<std::uint32_t>(cube.n2())));
  w.put(le_u32(static_cast<std::uint32_t>(cube.t_len())));
  w.put(le_f64(cube.dx()));
  w.put(le_f64(cube.dt()));

  // Encode in chunks to bound the staging buffer.
  constexpr std::size_t kChunk = 1 << 15;
  std::vector<unsigned char> buf;
  buf.reserve(kChunk * 8);
  const auto vals = cube.values();
  for (std::size_t start = 0; start < vals.size(); start += kChunk) {
    const std::size_t end = std::min(vals.size(), start + kChunk);
    buf.clear();
    for (std::size_t k = start; k < end; ++k) {
      const auto b = le_f64(vals[k]);
      buf.insert(buf.end(), b.begin(), b.end());
    }
    w.put(buf.data(), buf.size());
  }
  return w.offset();
}

DataCube read_cube(std::istream& in) {
  std::array<unsigned char, kCubeHeaderBytes> hdr{};
  const std::size_t got = read_some(in, hdr.data(), 4);
  if (got < 4 || std::memcmp(hdr.data(), kCubeMagic, 4) != 0)
    throw FormatError("missing WVC1 magic");
  if (read_some(in, hdr.data() + 4, hdr.size() - 4) != hdr.size() - 4)
    throw LengthMismatchError("truncated WVC1 header");
  const std::uint32_t version = from_le_u32(hdr.data() + 4);
  if (version != kCubeVersion)
    throw FormatError("unsupported WVC1 version " + std::to_string(version));
  const std::size_t n1 = from_le_u32(hdr.data() + 8);
  const std::size_t n2 = from_le_u32(hdr.data() + 12);
  const std::size_t t_len = from_le_u32(hdr.data() + 16);
  const double dx = from_le_f64(hdr.data() + 20);
  const double dt = from_le_f64(hdr.data() + 28);
  check_shape(n1, n2, t_len, dx, dt);

  const std::size_t count = n1 * n2 * t_len;
  std::vector<double> values(count);
  constexpr std::size_t kChunk = 1 << 15;
  std::vector<unsigned char> buf(kChunk * 8);
  for (std::size_t start = 0; start < count; start += kChunk) {
    const std::size_t n = std::min(kChunk, count - start);
    const std::size_t bytes = read_some(in, buf.data(), n * 8);
    if (bytes != n * 8)
      throw LengthMismatchError(
          "WVC1 payload truncated: header declares " + std::to_string(count) +
          " samples, found " + std::to_string(start + bytes / 8));
    for (std::size_t k = 0; k < n; ++k)
      values[start + k] = from_le_f64(buf.data() + 8 * k);
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw LengthMismatchError("WVC1 payload longer than header declares");

  DataCube cube(n1, n2, t_len, dx, dt, std::move(values));
  cube.validate();
  return cube;
}

void save_cube(const DataCube& cube, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing", 0);
  write_cube(cube, out);
  out.flush();
  if (!out) throw IoError("flush failed for " + path.string(), 0);
}

DataCube load_cube(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string(), 0);
  return read_cube(in);
}

std::filesystem::path meta_path(const std::filesystem::path& cube_path) {
  return std::filesystem::path(cube_path.string() + ".meta");
}

void write_metadata(const Metadata& meta, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing", 0);
  for (const auto& [k, v] : meta) out << k << " = " << v << '\n';
  if (!out) throw IoError("write failed for " + path.string(), 0);
}

Metadata read_metadata(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string(), 0);
  Metadata meta;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    meta.emplace_back(line.substr(0, eq), line.substr(eq + 3));
  }
  return meta;
}

}  // namespace wavesal
