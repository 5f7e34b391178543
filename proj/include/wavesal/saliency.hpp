#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "wavesal/mask.hpp"
#include "wavesal/windowing.hpp"

namespace wavesal {

/// One column per active region holding its vectorized window slice.
struct SnapshotMatrix {
  Eigen::MatrixXd values;
  std::vector<RegionId> labels;
};

/// Snapshot tau of every active region. `masks` is empty (keep every node),
/// a single mask shared by all regions, or one mask per active region with
/// equal retained counts.
SnapshotMatrix assemble_snapshot_matrix(const RegionalWindowSet& windows,
                                        std::size_t tau,
                                        std::span<const Mask> masks = {});

struct LowRankSplit {
  Eigen::MatrixXd low_rank;
  Eigen::MatrixXd outliers;
  std::size_t rank_used = 0;
  Eigen::VectorXd singular_values;  // non-increasing
};

/// Best rank-r approximation in the Frobenius norm and its residual.
LowRankSplit truncated_low_rank(const Eigen::MatrixXd& m, std::size_t r);

/// 1-based index of the singular value lying furthest above the chord from
/// the first to the last value, measured on a log scale.
std::size_t knee_rank(std::span<const double> singular_values);

/// Squared norm of each residual column.
std::vector<double> outlier_energies(const LowRankSplit& split);

/// Columns whose energy strictly exceeds ratio times the largest energy.
std::vector<std::size_t> salient_columns(std::span<const double> energies,
                                         double ratio);

struct RankPolicy {
  enum class Mode { fixed, automatic };
  Mode mode = Mode::automatic;
  std::size_t rank = 0;

  static RankPolicy fixed(std::size_t r) { return {Mode::fixed, r}; }
  static RankPolicy automatic() { return {Mode::automatic, 0}; }
};

struct SaliencyMap {
  std::size_t regions_x = 0;
  std::size_t regions_y = 0;
  std::size_t window_len = 0;
  double ratio = 0.0;
  std::size_t rank_used = 0;
  std::vector<std::optional<double>> values;  // region_index order
  std::vector<double> leading_spectrum;        // singular values at tau = 0

  std::optional<double> at(std::size_t i, std::size_t j) const {
    return values[j * regions_x + i];
  }
};

/// Fraction of window snapshots in which each active region's column is
/// salient. One rank is used for every snapshot; the automatic policy picks
/// it from the first snapshot's spectrum.
SaliencyMap saliency_map(const RegionalWindowSet& windows, RankPolicy policy,
                         double ratio, std::span<const Mask> masks = {});

/// Active regions whose value reaches theta, in (j, i) scan order.
std::vector<RegionId> classify(const SaliencyMap& map, double theta);

/// regions_x rows by regions_y columns; NA marks inactive regions.
void write_saliency_csv(const SaliencyMap& map, std::ostream& out);

/// 8-bit grayscale image (x across, y down) with inactive regions at 255,
/// plus a companion <path>.mask.pgm that is 255 where the map has data.
void write_saliency_pgm(const SaliencyMap& map,
                        const std::filesystem::path& path);

}  // namespace wavesal
