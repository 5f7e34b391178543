#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "wavesal/mask.hpp"
#include "wavesal/platesim.hpp"
#include "wavesal/saliency.hpp"
#include "wavesal/windowing.hpp"

namespace wavesal {

/// Regions that contain at least one altered cell.
struct GroundTruth {
  std::vector<RegionId> regions;  // sorted, unique

  static GroundTruth from_defects(std::span<const DefectSpec> defects,
                                  const Partition& partition);
  bool contains(RegionId r) const;
};

/// Region holding the node `source`.
RegionId region_of(const Partition& partition, GridPoint source);

struct DetectionMetrics {
  std::size_t correct_discoveries = 0;
  std::size_t false_discoveries = 0;
  std::size_t regionally_discovered = 0;
  std::size_t regional_false = 0;
  std::size_t origin_false = 0;
};

/// Scores a flagged set. Neighbourhoods use Chebyshev distance; the origin
/// block is the 3 x 3 block of regions nearest `source_region`.
DetectionMetrics detection_metrics(std::span<const RegionId> flagged,
                                   const GroundTruth& truth,
                                   const Partition& partition,
                                   RegionId source_region);

/// Flagged regions outside the origin block that are at least two regions
/// away from every true anomaly.
std::size_t regional_false_outside_origin(std::span<const RegionId> flagged,
                                          const GroundTruth& truth,
                                          const Partition& partition,
                                          RegionId source_region);

struct DetectionConfig {
  RankPolicy rank = RankPolicy::automatic();
  double ratio = 0.25;
  double theta = 0.5;
};

/// Masks for one detection: a single shared mask, or one per active region
/// drawn from a generator seeded with `seed`. Double-cross masks are always
/// shared.
std::vector<Mask> make_masks(MaskKind pattern, MaskSharing sharing,
                             std::size_t p1, std::size_t p2, double ratio,
                             std::size_t stride, std::uint64_t seed,
                             std::size_t active_regions);

std::vector<RegionId> detect(const RegionalWindowSet& windows,
                             const DetectionConfig& config,
                             std::span<const Mask> masks = {});

struct SweepSettings {
  std::vector<double> ratios{0.5, 0.33, 0.2, 0.1, 0.07};
  std::size_t trials = 50;
  std::uint64_t base_seed = 1;
  MaskKind pattern = MaskKind::random;
  std::size_t stride = 1;  // double-cross only
  MaskSharing sharing = MaskSharing::shared;
  std::size_t threads = 1;
};

struct MetricSummary {
  double mean = 0.0;
  double standard_error = 0.0;
};

struct SweepRow {
  double nz = 0.0;  // requested ratio, or the achieved ratio of a fixed pattern
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  MetricSummary correct, false_discoveries, regional_correct, regional_false,
      origin_false;
};

/// Repeats detection under fresh masks. Trial k of every ratio uses seed
/// base_seed + k, so the table does not depend on the thread count. A
/// double-cross pattern is deterministic and yields a single one-trial row.
std::vector<SweepRow> monte_carlo_sweep(const RegionalWindowSet& windows,
                                        const GroundTruth& truth,
                                        RegionId source_region,
                                        const DetectionConfig& config,
                                        const SweepSettings& settings);

void write_sweep_csv(std::span<const SweepRow> rows, std::ostream& out);

/// Thread count from WAVESAL_THREADS, or `fallback` when unset or invalid.
std::size_t threads_from_environment(std::size_t fallback);

}  // namespace wavesal
