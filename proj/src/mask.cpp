#include "wavesal/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "wavesal/errors.hpp"

namespace wavesal {

namespace {

constexpr std::size_t kMinRetained = 4;

// Uniform integer in [0, bound) by rejection. Written out rather than using
// std::uniform_int_distribution, whose output differs between standard
// library implementations.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % bound;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return draw % bound;
}

}  // namespace

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), 1));
}

double Mask::achieved_ratio() const {
  return static_cast<double>(count()) / static_cast<double>(p1 * p2);
}

std::vector<std::size_t> Mask::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < keep.size(); ++k)
    if (keep[k]) out.push_back(k);
  return out;
}

Mask random_mask(std::size_t p1, std::size_t p2, double target_ratio,
                 std::uint64_t seed) {
  if (!(target_ratio > 0.0 && target_ratio <= 1.0))
    throw MaskError("sampling ratio must lie in (0, 1]");
  const std::size_t total = p1 * p2;
  const auto wanted =
      static_cast<std::size_t>(std::llround(target_ratio * static_cast<double>(total)));
  if (wanted < kMinRetained)
    throw MaskError("sampling ratio keeps " + std::to_string(wanted) +
                    " nodes; at least 4 are required");

  // Partial Fisher-Yates shuffle: the first `wanted` slots are the sample.
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < wanted; ++k) {
    const auto pick = k + static_cast<std::size_t>(bounded(rng, total - k));
    std::swap(order[k], order[pick]);
  }
  Mask mask{p1, p2, std::vector<char>(total, 0), MaskKind::random, seed, 1};
  for (std::size_t k = 0; k < wanted; ++k) mask.keep[order[k]] = 1;
  return mask;
}

Mask double_cross_mask(std::size_t p1, std::size_t p2, std::size_t stride) {
  if (p1 != p2) throw GeometryError("double-cross masks need square regions");
  if (p1 % 2 == 0) throw GeometryError("double-cross masks need an odd region side");
  if (stride < 1) throw MaskError("stride must be at least 1");
  const auto c = static_cast<std::ptrdiff_t>(p1 / 2);
  Mask mask{p1, p2, std::vector<char>(p1 * p2, 0), MaskKind::double_cross, 0, stride};
  auto set = [&](std::ptrdiff_t l, std::ptrdiff_t m) {
    mask.keep[static_cast<std::size_t>(m) * p1 + static_cast<std::size_t>(l)] = 1;
  };
  for (std::ptrdiff_t d = -c; d <= c; ++d) {
    if (d % static_cast<std::ptrdiff_t>(stride) != 0) continue;
    set(c + d, c);
    set(c, c + d);
    set(c + d, c + d);
    set(c + d, c - d);
  }
  if (mask.count() < kMinRetained)
    throw MaskError("stride leaves fewer than 4 nodes in the double cross");
  return mask;
}

}  // namespace wavesal
