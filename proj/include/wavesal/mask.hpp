#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace wavesal {

enum class MaskKind { random, double_cross };
enum class MaskSharing { shared, per_region };

/// Retained node positions inside one p1 x p2 region, row-major (x fastest).
struct Mask {
  std::size_t p1 = 0;
  std::size_t p2 = 0;
  std::vector<char> keep;
  MaskKind kind = MaskKind::random;
  std::uint64_t seed = 0;   // random masks
  std::size_t stride = 1;   // double-cross masks

  std::size_t count() const;
  double achieved_ratio() const;
  /// Positions of retained nodes in increasing order.
  std::vector<std::size_t> indices() const;
};

/// Exactly round(target_ratio * p1 * p2) positions drawn uniformly without
/// replacement from a generator seeded with `seed`.
Mask random_mask(std::size_t p1, std::size_t p2, double target_ratio,
                 std::uint64_t seed);

/// Middle row, middle column and both diagonals of a square region with odd
/// side, each thinned to every stride-th node counted from the centre.
Mask double_cross_mask(std::size_t p1, std::size_t p2, std::size_t stride);

}  // namespace wavesal
