#include "wavesal/sampling.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <random>
#include <string>
#include <thread>

#include "wavesal/errors.hpp"

namespace wavesal {

namespace {

std::size_t chebyshev(RegionId a, RegionId b) {
  const auto di = a.i > b.i ? a.i - b.i : b.i - a.i;
  const auto dj = a.j > b.j ? a.j - b.j : b.j - a.j;
  return std::max(di, dj);
}

std::size_t block_start(std::size_t centre, std::size_t count) {
  if (count <= 3) return 0;
  const std::size_t lo = centre == 0 ? 0 : centre - 1;
  return std::min(lo, count - 3);
}

bool in_origin_block(RegionId r, const Partition& partition, RegionId source) {
  const std::size_t i0 = block_start(source.i, partition.regions_x);
  const std::size_t j0 = block_start(source.j, partition.regions_y);
  return r.i >= i0 && r.i < i0 + 3 && r.j >= j0 && r.j < j0 + 3;
}

bool far_from_truth(RegionId r, const GroundTruth& truth) {
  return std::all_of(truth.regions.begin(), truth.regions.end(),
                     [&](RegionId t) { return chebyshev(r, t) >= 2; });
}

MetricSummary summarize(const std::vector<double>& samples) {
  MetricSummary s;
  const auto n = static_cast<double>(samples.size());
  for (const double v : samples) s.mean += v;
  s.mean /= n;
  if (samples.size() > 1) {
    double ss = 0.0;
    for (const double v : samples) ss += (v - s.mean) * (v - s.mean);
    s.standard_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return s;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Runs body(k) for k in [0, count) on up to `threads` workers.
template <typename Body>
void parallel_for(std::size_t count, std::size_t threads, Body body) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (threads == 1) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t k; (k = next.fetch_add(1)) < count;) {
        try {
          body(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

GroundTruth GroundTruth::from_defects(std::span<const DefectSpec> defects,
                                      const Partition& partition) {
  GroundTruth truth;
  for (const auto& defect : defects) {
    for (const auto& [ci, cj] : defect_cells(defect, partition.n1, partition.n2)) {
      truth.regions.push_back({ci / (partition.p1 - 1), cj / (partition.p2 - 1)});
    }
  }
  std::sort(truth.regions.begin(), truth.regions.end());
  truth.regions.erase(std::unique(truth.regions.begin(), truth.regions.end()),
                      truth.regions.end());
  return truth;
}

bool GroundTruth::contains(RegionId r) const {
  return std::binary_search(regions.begin(), regions.end(), r);
}

RegionId region_of(const Partition& partition, GridPoint source) {
  if (source.l >= partition.n1 || source.m >= partition.n2)
    throw BoundsError("node lies outside the partitioned grid");
  return {std::min(source.l / (partition.p1 - 1), partition.regions_x - 1),
          std::min(source.m / (partition.p2 - 1), partition.regions_y - 1)};
}

DetectionMetrics detection_metrics(std::span<const RegionId> flagged,
                                   const GroundTruth& truth,
                                   const Partition& partition,
                                   RegionId source_region) {
  DetectionMetrics m;
  for (const RegionId r : flagged) {
    if (truth.contains(r)) {
      ++m.correct_discoveries;
    } else {
      ++m.false_discoveries;
      if (in_origin_block(r, partition, source_region)) ++m.origin_false;
    }
    if (far_from_truth(r, truth)) ++m.regional_false;
  }
  for (const RegionId t : truth.regions) {
    const bool found = std::any_of(flagged.begin(), flagged.end(),
                                   [&](RegionId r) { return chebyshev(r, t) <= 1; });
    if (found) ++m.regionally_discovered;
  }
  return m;
}

std::size_t regional_false_outside_origin(std::span<const RegionId> flagged,
                                          const GroundTruth& truth,
                                          const Partition& partition,
                                          RegionId source_region) {
  return static_cast<std::size_t>(std::count_if(flagged.begin(), flagged.end(), [&](RegionId r) {
    return far_from_truth(r, truth) && !in_origin_block(r, partition, source_region);
  }));
}

std::vector<Mask> make_masks(MaskKind pattern, MaskSharing sharing,
                             std::size_t p1, std::size_t p2, double ratio,
                             std::size_t stride, std::uint64_t seed,
                             std::size_t active_regions) {
  std::vector<Mask> masks;
  if (pattern == MaskKind::double_cross) {
    masks.push_back(double_cross_mask(p1, p2, stride));
  } else if (sharing == MaskSharing::shared) {
    masks.push_back(random_mask(p1, p2, ratio, seed));
  } else {
    std::mt19937_64 seeds(seed);
    for (std::size_t k = 0; k < active_regions; ++k)
      masks.push_back(random_mask(p1, p2, ratio, seeds()));
  }
  return masks;
}

std::vector<RegionId> detect(const RegionalWindowSet& windows,
                             const DetectionConfig& config,
                             std::span<const Mask> masks) {
  return classify(saliency_map(windows, config.rank, config.ratio, masks),
                  config.theta);
}

std::vector<SweepRow> monte_carlo_sweep(const RegionalWindowSet& windows,
                                        const GroundTruth& truth,
                                        RegionId source_region,
                                        const DetectionConfig& config,
                                        const SweepSettings& settings) {
  if (settings.trials < 1) throw DataError("sweep needs at least one trial");
  const Partition& p = windows.partition;
  const std::size_t active = windows.active_count();

  auto run_trial = [&](double nz, std::uint64_t seed) {
    const auto masks = make_masks(settings.pattern, settings.sharing, p.p1, p.p2,
                                  nz, settings.stride, seed, active);
    const auto flagged = detect(windows, config, masks);
    return detection_metrics(flagged, truth, p, source_region);
  };

  struct Plan {
    double nz;
    std::size_t trials;
  };
  std::vector<Plan> plans;
  if (settings.pattern == MaskKind::double_cross) {
    plans.push_back({double_cross_mask(p.p1, p.p2, settings.stride).achieved_ratio(), 1});
  } else {
    if (settings.ratios.empty()) throw DataError("sweep needs at least one ratio");
    for (const double nz : settings.ratios) plans.push_back({nz, settings.trials});
  }

  std::vector<SweepRow> rows;
  for (const Plan& plan : plans) {
    std::vector<DetectionMetrics> results(plan.trials);
    parallel_for(plan.trials, settings.threads, [&](std::size_t k) {
      results[k] = run_trial(plan.nz, settings.base_seed + k);
    });
    auto column = [&](auto field) {
      std::vector<double> v;
      for (const auto& r : results) v.push_back(static_cast<double>(r.*field));
      return summarize(v);
    };
    SweepRow row;
    row.nz = plan.nz;
    row.trials = plan.trials;
    row.seed = settings.base_seed;
    row.correct = column(&DetectionMetrics::correct_discoveries);
    row.false_discoveries = column(&DetectionMetrics::false_discoveries);
    row.regional_correct = column(&DetectionMetrics::regionally_discovered);
    row.regional_false = column(&DetectionMetrics::regional_false);
    row.origin_false = column(&DetectionMetrics::origin_false);
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(std::span<const SweepRow> rows, std::ostream& out) {
  out << "nz,correct,false,regional_correct,regional_false,origin_false,trials,seed\n";
  for (const SweepRow& r : rows) {
    out << format_double(r.nz) << ',' << format_double(r.correct.mean) << ','
        << format_double(r.false_discoveries.mean) << ','
        << format_double(r.regional_correct.mean) << ','
        << format_double(r.regional_false.mean) << ','
        << format_double(r.origin_false.mean) << ',' << r.trials << ','
        << r.seed << '\n';
  }
}

std::size_t threads_from_environment(std::size_t fallback) {
  const char* raw = std::getenv("WAVESAL_THREADS");
  if (raw == nullptr) return fallback;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (end == raw || *end != '\0' || v < 1) return fallback;
  return static_cast<std::size_t>(v);
}

}  // namespace wavesal
