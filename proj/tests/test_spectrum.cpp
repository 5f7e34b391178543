#include <gtest/gtest.h>

#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include "support.hpp"
#include "wavesal/errors.hpp"
#include "wavesal/spectrum.hpp"

using namespace wavesal;

namespace {

Field2D field(std::size_t n1, std::size_t n2, auto f) {
  Field2D out{n1, n2, std::vector<double>(n1 * n2)};
  for (std::size_t m = 0; m < n2; ++m)
    for (std::size_t l = 0; l < n1; ++l) out.values[m * n1 + l] = f(l, m);
  return out;
}

Field2D random_field(std::size_t n1, std::size_t n2, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  return field(n1, n2, [&](std::size_t, std::size_t) { return g(rng); });
}

// Direct double sum, O(N^2).
std::vector<double> naive_dft_magnitude(const Field2D& f) {
  std::vector<double> out(f.n1 * f.n2);
  for (std::size_t ky = 0; ky < f.n2; ++ky)
    for (std::size_t kx = 0; kx < f.n1; ++kx) {
      std::complex<double> acc = 0.0;
      for (std::size_t m = 0; m < f.n2; ++m)
        for (std::size_t l = 0; l < f.n1; ++l) {
          const double phase = -2.0 * std::numbers::pi *
                               (static_cast<double>(kx * l) / static_cast<double>(f.n1) +
                                static_cast<double>(ky * m) / static_cast<double>(f.n2));
          acc += f.at(l, m) * std::polar(1.0, phase);
        }
      out[ky * f.n1 + kx] = std::abs(acc);
    }
  return out;
}

}  // namespace

TEST(Spectrum, ConstantFieldPeaksAtCentre) {
  for (const auto [n1, n2] : {std::pair{8u, 8u}, std::pair{7u, 9u}}) {
    const auto s = dft2_magnitude(field(n1, n2, [](auto, auto) { return 2.5; }));
    EXPECT_EQ(s.at(n1 / 2, n2 / 2), 1.0);
    double rest = 0.0;
    for (const double v : s.magnitude) rest += v;
    EXPECT_NEAR(rest, 1.0, 1e-12);
    EXPECT_EQ(WavenumberSpectrum::normalized_wavenumber(n1 / 2, n1), 0.0);
  }
}

TEST(Spectrum, SinusoidOccupiesTwoBins) {
  const std::size_t n = 16;
  const auto s = dft2_magnitude(field(n, n, [&](std::size_t l, std::size_t) {
    return std::cos(2.0 * std::numbers::pi * 3.0 * static_cast<double>(l) / n);
  }));
  EXPECT_NEAR(s.at(8 + 3, 8), 1.0, 1e-12);
  EXPECT_NEAR(s.at(8 - 3, 8), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(occupied_fraction(s, -20.0), 2.0 / 256.0);
  EXPECT_GE(occupied_fraction(s, -200.0), 2.0 / 256.0);
}

TEST(Spectrum, MatchesNaiveTransform) {
  for (const auto [n1, n2] : {std::pair{6u, 5u}, std::pair{9u, 9u}, std::pair{4u, 11u}}) {
    const Field2D f = random_field(n1, n2, n1 * 100 + n2);
    const auto fast = dft2_raw_magnitude(f);
    const auto slow = naive_dft_magnitude(f);
    for (std::size_t k = 0; k < fast.size(); ++k) EXPECT_NEAR(fast[k], slow[k], 1e-10);
    // Parseval.
    double time = 0.0, freq = 0.0;
    for (const double v : f.values) time += v * v;
    for (const double v : fast) freq += v * v;
    EXPECT_NEAR(freq, time * static_cast<double>(n1 * n2), 1e-9 * freq);
  }
}

TEST(Spectrum, RealInputGivesPointSymmetricMagnitude) {
  for (const std::size_t n : {8u, 9u, 16u, 17u}) {
    const auto s = dft2_magnitude(random_field(n, n, n));
    double peak = 0.0;
    for (const double v : s.magnitude) peak = std::max(peak, v);
    EXPECT_EQ(peak, 1.0);
    for (std::size_t ky = 0; ky < n; ++ky)
      for (std::size_t kx = 0; kx < n; ++kx) {
        const auto mirror = [&](std::size_t k) { return n % 2 == 0 ? (n - k) % n : n - 1 - k; };
        EXPECT_NEAR(s.at(kx, ky), s.at(mirror(kx), mirror(ky)), 1e-12);
      }
  }
}

TEST(Spectrum, ScaleInvariant) {
  const Field2D f = random_field(10, 10, 3);
  Field2D g = f;
  for (auto& v : g.values) v *= -1e-7;
  const auto a = dft2_magnitude(f), b = dft2_magnitude(g);
  for (std::size_t k = 0; k < a.magnitude.size(); ++k) EXPECT_NEAR(a.magnitude[k], b.magnitude[k], 1e-12);
}

TEST(Occupancy, ExamplesAndMonotonicity) {
  WavenumberSpectrum s{2, 2, {1.0, 0.1, 0.05, 0.2}};
  EXPECT_DOUBLE_EQ(occupied_fraction(s, -20.0), 0.5);  // 0.1 is not above the floor
  EXPECT_DOUBLE_EQ(occupied_fraction(s, -25.0), 0.75);
  EXPECT_DOUBLE_EQ(occupied_fraction(s, -30.0), 1.0);
  EXPECT_DOUBLE_EQ(occupied_fraction(s, -6.0), 0.25);
  const auto r = dft2_magnitude(random_field(32, 32, 4));
  double prev = 0.0;
  for (double floor = -1.0; floor >= -80.0; floor -= 3.0) {
    const double f = occupied_fraction(r, floor);
    EXPECT_GE(f, prev);
    EXPECT_LE(f, 1.0);
    EXPECT_GT(f, 0.0);
    prev = f;
  }
  EXPECT_THROW(occupied_fraction(s, 0.0), DataError);
}

TEST(Spectrum, RejectsZeroAndMalformedSnapshots) {
  EXPECT_THROW(dft2_magnitude(field(8, 8, [](auto, auto) { return 0.0; })), NoSignalError);
  EXPECT_THROW(dft2_raw_magnitude(Field2D{3, 3, std::vector<double>(8)}), ShapeError);
  Field2D bad = random_field(4, 4, 1);
  bad.values[5] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(dft2_raw_magnitude(bad), DataError);
}

TEST(Export, CsvAndPgm) {
  WavenumberSpectrum s{2, 2, {1.0, 0.1, 0.01, 0.0}};
  std::ostringstream csv;
  write_spectrum_csv(s, csv);
  EXPECT_EQ(csv.str(), "1,0.10000000000000001\n0.01,0\n");
  wavesal::testing::TempDir dir;
  write_spectrum_pgm(s, -40.0, dir.file("s.pgm"));
  const std::string img = wavesal::testing::read_file(dir.file("s.pgm"));
  // Top row is high ky: 0.01 (-40 dB) then 0; bottom row 1 (0 dB) then 0.1 (-20 dB).
  EXPECT_EQ(img, std::string("P5\n2 2\n255\n") + char(0) + char(0) + char(255) + char(128));
}
