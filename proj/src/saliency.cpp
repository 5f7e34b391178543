#include "wavesal/saliency.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>

#include "wavesal/errors.hpp"

namespace wavesal {

namespace {

constexpr double kKneeFloor = 1e-12;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_pgm(const std::filesystem::path& path, std::size_t width,
               std::size_t height, const std::vector<unsigned char>& pixels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing", 0);
  const std::string header = "P5\n" + std::to_string(width) + " " +
                             std::to_string(height) + "\n255\n";
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw IoError("failed writing " + path.string(), header.size());
}

}  // namespace

SnapshotMatrix assemble_snapshot_matrix(const RegionalWindowSet& windows,
                                        std::size_t tau,
                                        std::span<const Mask> masks) {
  if (tau >= windows.window_len)
    throw BoundsError("snapshot index outside the window");
  const Partition& p = windows.partition;
  const std::size_t nodes = p.p1 * p.p2;
  const auto regions = windows.active_regions();

  for (const Mask& mask : masks) {
    if (mask.p1 != p.p1 || mask.p2 != p.p2)
      throw ShapeError("mask shape does not match the region size");
  }
  if (masks.size() > 1 && masks.size() != regions.size())
    throw ShapeError("per-region masks must match the active region count");

  std::vector<std::vector<std::size_t>> rows;
  for (const Mask& mask : masks) rows.push_back(mask.indices());
  const std::size_t row_dim = rows.empty() ? nodes : rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != row_dim)
      throw ShapeError("per-region masks must retain equal node counts");
  }

  SnapshotMatrix out;
  out.values.resize(static_cast<Eigen::Index>(row_dim),
                    static_cast<Eigen::Index>(regions.size()));
  out.labels = regions;
  for (std::size_t c = 0; c < regions.size(); ++c) {
    const auto slice = windows.block(regions[c].i, regions[c].j).subspan(tau * nodes, nodes);
    auto col = out.values.col(static_cast<Eigen::Index>(c));
    if (rows.empty()) {
      for (std::size_t k = 0; k < nodes; ++k) col(static_cast<Eigen::Index>(k)) = slice[k];
    } else {
      const auto& keep = rows.size() == 1 ? rows.front() : rows[c];
      for (std::size_t k = 0; k < row_dim; ++k)
        col(static_cast<Eigen::Index>(k)) = slice[keep[k]];
    }
  }
  return out;
}

LowRankSplit truncated_low_rank(const Eigen::MatrixXd& m, std::size_t r) {
  const auto min_dim = static_cast<std::size_t>(std::min(m.rows(), m.cols()));
  if (r < 1 || r > min_dim)
    throw RankError("rank " + std::to_string(r) + " outside [1, " +
                    std::to_string(min_dim) + "]");
  if (!m.allFinite()) throw DataError("snapshot matrix has non-finite entries");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto k = static_cast<Eigen::Index>(r);
  LowRankSplit split;
  split.rank_used = r;
  split.singular_values = svd.singularValues();
  split.low_rank = svd.matrixU().leftCols(k) *
                   split.singular_values.head(k).asDiagonal() *
                   svd.matrixV().leftCols(k).transpose();
  split.outliers = m - split.low_rank;
  return split;
}

std::size_t knee_rank(std::span<const double> singular_values) {
  const std::size_t n = singular_values.size();
  if (n < 3) throw DegenerateSpectrumError("knee needs at least 3 singular values");
  const double first = singular_values.front();
  if (!(first > 0.0)) throw DegenerateSpectrumError("leading singular value is zero");
  std::vector<double> y(n);
  for (std::size_t k = 0; k < n; ++k)
    y[k] = std::log(std::max(singular_values[k], first * kKneeFloor));

  // Signed height above the chord; a sharp drop leaves the points before it
  // well above the line, while gentle convex decay keeps them below.
  const double x1 = static_cast<double>(n - 1);
  const double slope = (y[n - 1] - y[0]) / x1;
  const double norm = std::sqrt(1.0 + slope * slope);
  std::size_t best = 0;
  double best_height = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const double height = (y[k] - (y[0] + slope * static_cast<double>(k))) / norm;
    if (height > best_height) {
      best_height = height;
      best = k;
    }
  }
  return best + 1;
}

std::vector<double> outlier_energies(const LowRankSplit& split) {
  std::vector<double> e(static_cast<std::size_t>(split.outliers.cols()));
  for (Eigen::Index c = 0; c < split.outliers.cols(); ++c)
    e[static_cast<std::size_t>(c)] = split.outliers.col(c).squaredNorm();
  return e;
}

std::vector<std::size_t> salient_columns(std::span<const double> energies,
                                         double ratio) {
  std::vector<std::size_t> out;
  if (energies.empty()) return out;
  const double peak = *std::max_element(energies.begin(), energies.end());
  if (!(peak > 0.0)) return out;
  const double threshold = ratio * peak;
  for (std::size_t k = 0; k < energies.size(); ++k)
    if (energies[k] > threshold) out.push_back(k);
  return out;
}

SaliencyMap saliency_map(const RegionalWindowSet& windows, RankPolicy policy,
                         double ratio, std::span<const Mask> masks) {
  if (!(ratio > 0.0 && ratio <= 1.0))
    throw DataError("threshold ratio must lie in (0, 1]");
  const Partition& p = windows.partition;
  SaliencyMap map;
  map.regions_x = p.regions_x;
  map.regions_y = p.regions_y;
  map.window_len = windows.window_len;
  map.ratio = ratio;
  map.values.assign(p.region_count(), std::nullopt);

  std::vector<std::size_t> counts;
  std::vector<RegionId> labels;
  for (std::size_t tau = 0; tau < windows.window_len; ++tau) {
    const SnapshotMatrix snap = assemble_snapshot_matrix(windows, tau, masks);
    if (tau == 0) {
      labels = snap.labels;
      counts.assign(labels.size(), 0);
      if (policy.mode == RankPolicy::Mode::automatic) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(snap.values);
        const Eigen::VectorXd s = svd.singularValues();
        map.rank_used = knee_rank(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())));
      } else {
        map.rank_used = policy.rank;
      }
    }
    const LowRankSplit split = truncated_low_rank(snap.values, map.rank_used);
    if (tau == 0)
      map.leading_spectrum.assign(split.singular_values.data(),
                                  split.singular_values.data() + split.singular_values.size());
    for (const std::size_t c : salient_columns(outlier_energies(split), ratio))
      ++counts[c];
  }
  for (std::size_t c = 0; c < labels.size(); ++c) {
    map.values[p.region_index(labels[c].i, labels[c].j)] =
        static_cast<double>(counts[c]) / static_cast<double>(windows.window_len);
  }
  return map;
}

std::vector<RegionId> classify(const SaliencyMap& map, double theta) {
  if (!(theta > 0.0 && theta <= 1.0))
    throw DataError("classification threshold must lie in (0, 1]");
  std::vector<RegionId> flagged;
  for (std::size_t j = 0; j < map.regions_y; ++j)
    for (std::size_t i = 0; i < map.regions_x; ++i)
      if (const auto v = map.at(i, j); v && *v >= theta) flagged.push_back({i, j});
  return flagged;
}

void write_saliency_csv(const SaliencyMap& map, std::ostream& out) {
  for (std::size_t i = 0; i < map.regions_x; ++i) {
    for (std::size_t j = 0; j < map.regions_y; ++j) {
      if (j > 0) out << ',';
      const auto v = map.at(i, j);
      out << (v ? format_double(*v) : std::string("NA"));
    }
    out << '\n';
  }
}

void write_saliency_pgm(const SaliencyMap& map,
                        const std::filesystem::path& path) {
  std::vector<unsigned char> image, mask;
  for (std::size_t j = 0; j < map.regions_y; ++j) {
    for (std::size_t i = 0; i < map.regions_x; ++i) {
      const auto v = map.at(i, j);
      image.push_back(v ? static_cast<unsigned char>(std::lround(255.0 * *v)) : 255);
      mask.push_back(v ? 255 : 0);
    }
  }
  write_pgm(path, map.regions_x, map.regions_y, image);
  auto mask_path = path;
  mask_path += ".mask.pgm";
  write_pgm(mask_path, map.regions_x, map.regions_y, mask);
}

}  // namespace wavesal
