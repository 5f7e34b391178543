#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "wavesal/platesim.hpp"
#include "wavesal/wavecube.hpp"

namespace wavesal {

/// Tiling of an n1 x n2 node grid into regions_x x regions_y blocks of
/// p1 x p2 nodes. Neighbouring regions share their boundary row or column.
struct Partition {
  std::size_t n1 = 0, n2 = 0;
  std::size_t regions_x = 0, regions_y = 0;
  std::size_t p1 = 0, p2 = 0;
  bool shared_boundaries = true;

  std::size_t region_count() const { return regions_x * regions_y; }
  std::size_t region_index(std::size_t i, std::size_t j) const {
    return j * regions_x + i;
  }
  /// First node of region (i, j).
  GridPoint origin(std::size_t i, std::size_t j) const {
    return {i * (p1 - 1), j * (p2 - 1)};
  }
};

/// Region (i, j): i counts along x, j along y.
struct RegionId {
  std::size_t i = 0;
  std::size_t j = 0;
  friend auto operator<=>(const RegionId&, const RegionId&) = default;
};

Partition make_partition(std::size_t n1, std::size_t n2, std::size_t regions_x,
                         std::size_t regions_y);

struct Position {
  double x = 0.0;
  double y = 0.0;
};

/// Midpoint of the region's nodal bounding box, in meters.
Position region_centroid(const Partition& partition, std::size_t i,
                         std::size_t j, double dx);

/// Expected time at which the centre of the burst reaches a point at
/// `distance` from the source.
double arrival_time(double distance, double group_speed,
                    const ExcitationSpec& excitation);

/// Two distinct virtual sensors used for time-of-flight velocity estimation.
class ProbePair {
 public:
  ProbePair(GridPoint first, GridPoint second, double dx);

  GridPoint first() const { return first_; }
  GridPoint second() const { return second_; }
  double separation() const { return separation_; }

 private:
  GridPoint first_, second_;
  double separation_;
};

/// Probes on the bottom edge at 30% and 70% of the side.
ProbePair default_probes(std::size_t n1, double dx);

/// Magnitude of the analytic signal. The signal is zero padded to twice its
/// length first so that late energy does not wrap onto early samples.
std::vector<double> envelope(std::span<const double> signal);

/// Fractional sample index of the first envelope peak reaching half of the
/// global maximum. Returns a negative value for a silent signal.
double first_peak_index(std::span<const double> env);

double estimate_group_velocity(const DataCube& cube, const ProbePair& probes);

/// Time-shifted regional blocks. Block layout of an active region is
/// tau * p1 * p2 + m * p1 + l with (l, m) local to the region.
struct RegionalWindowSet {
  Partition partition;
  std::size_t window_len = 0;
  double dt = 0.0;
  double group_speed = 0.0;
  std::vector<std::size_t> arrival_index;  // per region, region_index order
  std::vector<char> active;
  std::vector<std::vector<double>> blocks;  // empty for inactive regions

  std::size_t active_count() const;
  std::vector<RegionId> active_regions() const;
  std::span<const double> block(std::size_t i, std::size_t j) const {
    return blocks[partition.region_index(i, j)];
  }
};

RegionalWindowSet extract_windows(const DataCube& cube,
                                  const Partition& partition,
                                  double group_speed,
                                  const ExcitationSpec& excitation,
                                  std::size_t window_len);

/// Writes one WVC1 file per active region, named region_<i>_<j>.wvc.
void dump_windows(const RegionalWindowSet& windows, double dx,
                  const std::filesystem::path& directory);

}  // namespace wavesal
