#include "wavesal/windowing.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "fft.hpp"
#include "wavesal/errors.hpp"

namespace wavesal {

namespace {

// Regions whose window carries less than this fraction of the cube peak
// (in RMS) are treated as untouched by the wave.
constexpr double kSilentRegionRatio = 1e-12;

}  // namespace

Partition make_partition(std::size_t n1, std::size_t n2, std::size_t regions_x,
                         std::size_t regions_y) {
  if (n1 < 2 || n2 < 2) throw PartitionError("grid must be at least 2 x 2");
  if (regions_x < 1 || regions_y < 1)
    throw PartitionError("region counts must be at least 1");
  if ((n1 - 1) % regions_x != 0 || (n2 - 1) % regions_y != 0) {
    throw PartitionError(
        "region counts must divide the cell counts exactly: n1 - 1 = " +
        std::to_string(n1 - 1) + " over " + std::to_string(regions_x) +
        " regions, n2 - 1 = " + std::to_string(n2 - 1) + " over " +
        std::to_string(regions_y) + " regions");
  }
  Partition p;
  p.n1 = n1;
  p.n2 = n2;
  p.regions_x = regions_x;
  p.regions_y = regions_y;
  p.p1 = (n1 - 1) / regions_x + 1;
  p.p2 = (n2 - 1) / regions_y + 1;
  return p;
}

Position region_centroid(const Partition& partition, std::size_t i,
                         std::size_t j, double dx) {
  if (i >= partition.regions_x || j >= partition.regions_y)
    throw BoundsError("region index out of range");
  const GridPoint o = partition.origin(i, j);
  const double cx = static_cast<double>(o.l) + 0.5 * static_cast<double>(partition.p1 - 1);
  const double cy = static_cast<double>(o.m) + 0.5 * static_cast<double>(partition.p2 - 1);
  return {cx * dx, cy * dx};
}

double arrival_time(double distance, double group_speed,
                    const ExcitationSpec& excitation) {
  if (!(group_speed > 0.0))
    throw VelocityEstimationError("group speed must be positive");
  return std::abs(distance) / group_speed +
         excitation.cycle_count / (2.0 * excitation.carrier_frequency);
}

ProbePair::ProbePair(GridPoint first, GridPoint second, double dx)
    : first_(first), second_(second) {
  if (first == second) throw GeometryError("probe positions must differ");
  if (!(dx > 0.0)) throw GeometryError("probe spacing must be positive");
  const double dl = static_cast<double>(second.l) - static_cast<double>(first.l);
  const double dm = static_cast<double>(second.m) - static_cast<double>(first.m);
  separation_ = std::hypot(dl, dm) * dx;
}

ProbePair default_probes(std::size_t n1, double dx) {
  const double last = static_cast<double>(n1 - 1);
  return ProbePair({static_cast<std::size_t>(std::lround(0.3 * last)), 0},
                   {static_cast<std::size_t>(std::lround(0.7 * last)), 0}, dx);
}

std::vector<double> envelope(std::span<const double> signal) {
  const std::size_t n = signal.size();
  const std::size_t padded = 2 * n;
  detail::ComplexVector spec(padded);
  std::copy(signal.begin(), signal.end(), spec.begin());
  detail::fft_1d(spec, false);
  // Keep DC and Nyquist, double positive frequencies, drop negative ones.
  for (std::size_t k = 1; k < padded; ++k) {
    if (2 * k < padded) spec[k] *= 2.0;
    else if (2 * k > padded) spec[k] = 0.0;
  }
  detail::fft_1d(spec, true);
  std::vector<double> env(n);
  const double scale = 1.0 / static_cast<double>(padded);
  for (std::size_t k = 0; k < n; ++k) env[k] = std::abs(spec[k]) * scale;
  return env;
}

double first_peak_index(std::span<const double> env) {
  if (env.empty()) return -1.0;
  const double peak = *std::max_element(env.begin(), env.end());
  if (!(peak > 0.0)) return -1.0;
  const double level = 0.5 * peak;
  for (std::size_t k = 1; k + 1 < env.size(); ++k) {
    const double y0 = env[k - 1], y1 = env[k], y2 = env[k + 1];
    if (y1 >= level && y1 >= y0 && y1 >= y2) {
      const double curvature = y0 - 2.0 * y1 + y2;
      const double shift = curvature != 0.0 ? 0.5 * (y0 - y2) / curvature : 0.0;
      return static_cast<double>(k) + shift;
    }
  }
  return static_cast<double>(std::max_element(env.begin(), env.end()) - env.begin());
}

double estimate_group_velocity(const DataCube& cube, const ProbePair& probes) {
  auto history = [&](GridPoint p) {
    if (p.l >= cube.n1() || p.m >= cube.n2())
      throw BoundsError("probe lies outside the cube");
    std::vector<double> h(cube.t_len());
    for (std::size_t t = 0; t < cube.t_len(); ++t) h[t] = cube.at(p.l, p.m, t);
    return h;
  };
  const double first = first_peak_index(envelope(history(probes.first())));
  const double second = first_peak_index(envelope(history(probes.second())));
  if (first < 0.0 || second < 0.0)
    throw NoSignalError("a velocity probe records no signal");
  const double delay = (second - first) * cube.dt();
  if (!(delay > 0.0))
    throw VelocityEstimationError(
        "second probe peaks no later than the first; cannot estimate speed");
  return probes.separation() / delay;
}

std::size_t RegionalWindowSet::active_count() const {
  return static_cast<std::size_t>(std::count(active.begin(), active.end(), 1));
}

std::vector<RegionId> RegionalWindowSet::active_regions() const {
  std::vector<RegionId> out;
  for (std::size_t j = 0; j < partition.regions_y; ++j)
    for (std::size_t i = 0; i < partition.regions_x; ++i)
      if (active[partition.region_index(i, j)]) out.push_back({i, j});
  return out;
}

RegionalWindowSet extract_windows(const DataCube& cube,
                                  const Partition& partition,
                                  double group_speed,
                                  const ExcitationSpec& excitation,
                                  std::size_t window_len) {
  if (window_len < 1) throw BoundsError("window length must be at least 1");
  if (partition.n1 != cube.n1() || partition.n2 != cube.n2())
    throw PartitionError("partition does not match the cube grid");
  if (!(group_speed > 0.0) || !std::isfinite(group_speed))
    throw VelocityEstimationError("group speed must be positive and finite");

  RegionalWindowSet set;
  set.partition = partition;
  set.window_len = window_len;
  set.dt = cube.dt();
  set.group_speed = group_speed;
  const std::size_t regions = partition.region_count();
  set.arrival_index.assign(regions, 0);
  set.active.assign(regions, 0);
  set.blocks.assign(regions, {});

  const double sx = static_cast<double>(excitation.source.l) * cube.dx();
  const double sy = static_cast<double>(excitation.source.m) * cube.dx();
  const double floor = kSilentRegionRatio * cube.max_abs();
  const std::size_t block_size = partition.p1 * partition.p2 * window_len;

  for (std::size_t j = 0; j < partition.regions_y; ++j) {
    for (std::size_t i = 0; i < partition.regions_x; ++i) {
      const std::size_t r = partition.region_index(i, j);
      const Position c = region_centroid(partition, i, j, cube.dx());
      const double t = arrival_time(std::hypot(c.x - sx, c.y - sy),
                                    group_speed, excitation);
      const auto start = static_cast<std::size_t>(std::llround(t / cube.dt()));
      set.arrival_index[r] = start;
      if (start + window_len > cube.t_len()) continue;

      const GridPoint o = partition.origin(i, j);
      std::vector<double> block(block_size);
      double sum_sq = 0.0;
      auto out = block.begin();
      for (std::size_t tau = 0; tau < window_len; ++tau) {
        for (std::size_t m = 0; m < partition.p2; ++m) {
          const auto row = cube.slice(start + tau).subspan(
              (o.m + m) * cube.n1() + o.l, partition.p1);
          for (const double v : row) sum_sq += v * v;
          out = std::copy(row.begin(), row.end(), out);
        }
      }
      const double rms = std::sqrt(sum_sq / static_cast<double>(block_size));
      if (!(rms > 0.0) || rms < floor) continue;
      set.active[r] = 1;
      set.blocks[r] = std::move(block);
    }
  }
  if (set.active_count() == 0)
    throw EmptyWindowingError(
        "no region receives a complete window before the record ends");
  return set;
}

void dump_windows(const RegionalWindowSet& windows, double dx,
                  const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  const Partition& p = windows.partition;
  for (const RegionId id : windows.active_regions()) {
    const auto block = windows.block(id.i, id.j);
    DataCube cube(p.p1, p.p2, windows.window_len, dx, windows.dt,
                  std::vector<double>(block.begin(), block.end()));
    save_cube(cube, directory / ("region_" + std::to_string(id.i) + "_" +
                                 std::to_string(id.j) + ".wvc"));
  }
}

}  // namespace wavesal
