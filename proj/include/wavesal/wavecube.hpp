#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace wavesal {

/// Node index on the measurement grid: l along x, m along y.
struct GridPoint {
  std::size_t l = 0;
  std::size_t m = 0;
  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

/// One n1 x n2 time slice, row-major with x fastest.
struct Field2D {
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::vector<double> values;

  double at(std::size_t l, std::size_t m) const { return values[m * n1 + l]; }
};

/// Deflection history w(x, y, t) sampled on an n1 x n2 grid at t_len instants.
///
/// Payload order is time-major, then row-major within a slice (x fastest):
/// value(l, m, tau) lives at tau * n1 * n2 + m * n1 + l. Shape, dx and dt are
/// checked on construction; finiteness is checked by validate(), which the
/// reader and writer call, so a cube may be filled in place before it is
/// shared.
class DataCube {
 public:
  DataCube(std::size_t n1, std::size_t n2, std::size_t t_len, double dx,
           double dt);
  DataCube(std::size_t n1, std::size_t n2, std::size_t t_len, double dx,
           double dt, std::vector<double> values);

  std::size_t n1() const { return n1_; }
  std::size_t n2() const { return n2_; }
  std::size_t t_len() const { return t_len_; }
  std::size_t slice_size() const { return n1_ * n2_; }
  double dx() const { return dx_; }
  double dt() const { return dt_; }

  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }

  double at(std::size_t l, std::size_t m, std::size_t tau) const {
    return values_[tau * slice_size() + m * n1_ + l];
  }
  double& at(std::size_t l, std::size_t m, std::size_t tau) {
    return values_[tau * slice_size() + m * n1_ + l];
  }

  std::span<const double> slice(std::size_t tau) const {
    return std::span<const double>(values_).subspan(tau * slice_size(),
                                                    slice_size());
  }
  std::span<double> mutable_slice(std::size_t tau) {
    return std::span<double>(values_).subspan(tau * slice_size(),
                                              slice_size());
  }

  /// Throws DataError if any sample is NaN or infinite.
  void validate() const;

  double max_abs() const;

  /// Bit-exact equality (shape, spacing and every payload bit).
  friend bool operator==(const DataCube& a, const DataCube& b);

 private:
  std::size_t n1_;
  std::size_t n2_;
  std::size_t t_len_;
  double dx_;
  double dt_;
  std::vector<double> values_;
};

/// Copy of time slice t_index. Throws BoundsError when t_index >= t_len.
Field2D slice_at(const DataCube& cube, std::size_t t_index);

inline constexpr char kCubeMagic[4] = {'W', 'V', 'C', '1'};
inline constexpr std::uint32_t kCubeVersion = 1;
inline constexpr std::size_t kCubeHeaderBytes = 8 + 3 * 4 + 2 * 8;

/// Writes the WVC1 encoding and returns the number of bytes emitted.
std::size_t write_cube(const DataCube& cube, std::ostream& out);
DataCube read_cube(std::istream& in);

void save_cube(const DataCube& cube, const std::filesystem::path& path);
DataCube load_cube(const std::filesystem::path& path);

/// Ordered `key = value` pairs stored next to a cube as `<path>.meta`.
using Metadata = std::vector<std::pair<std::string, std::string>>;

std::filesystem::path meta_path(const std::filesystem::path& cube_path);
void write_metadata(const Metadata& meta, const std::filesystem::path& path);
Metadata read_metadata(const std::filesystem::path& path);

}  // namespace wavesal
