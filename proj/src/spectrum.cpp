#include "wavesal/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <string>

#include "fft.hpp"
#include "wavesal/errors.hpp"

namespace wavesal {

namespace {

std::size_t shifted(std::size_t k, std::size_t n) { return (k + n / 2) % n; }

}  // namespace

double WavenumberSpectrum::normalized_wavenumber(std::size_t k, std::size_t n) {
  // K = 2 pi (k - n/2) / (n dx) and L = (n - 1) dx.
  const double offset = static_cast<double>(k) - static_cast<double>(n / 2);
  return 2.0 * std::numbers::pi * offset * static_cast<double>(n - 1) /
         static_cast<double>(n);
}

std::vector<double> dft2_raw_magnitude(const Field2D& snapshot) {
  if (snapshot.values.size() != snapshot.n1 * snapshot.n2 || snapshot.values.empty())
    throw ShapeError("snapshot size does not match its shape");
  for (const double v : snapshot.values)
    if (!std::isfinite(v)) throw DataError("snapshot has non-finite values");
  detail::ComplexVector data(snapshot.values.begin(), snapshot.values.end());
  detail::fft_2d(data, snapshot.n1, snapshot.n2);
  std::vector<double> mag(data.size());
  std::transform(data.begin(), data.end(), mag.begin(),
                 [](const std::complex<double>& z) { return std::abs(z); });
  return mag;
}

WavenumberSpectrum dft2_magnitude(const Field2D& snapshot) {
  const auto raw = dft2_raw_magnitude(snapshot);
  const double peak = *std::max_element(raw.begin(), raw.end());
  if (!(peak > 0.0)) throw NoSignalError("snapshot is identically zero");
  WavenumberSpectrum s{snapshot.n1, snapshot.n2, std::vector<double>(raw.size())};
  for (std::size_t ky = 0; ky < s.n2; ++ky) {
    for (std::size_t kx = 0; kx < s.n1; ++kx) {
      const double v = raw[ky * s.n1 + kx];
      s.magnitude[shifted(ky, s.n2) * s.n1 + shifted(kx, s.n1)] = v == peak ? 1.0 : v / peak;
    }
  }
  return s;
}

double occupied_fraction(const WavenumberSpectrum& spectrum, double floor_db) {
  if (!(floor_db < 0.0)) throw DataError("occupancy floor must be below 0 dB");
  const double level = std::pow(10.0, floor_db / 20.0);
  const auto occupied = std::count_if(spectrum.magnitude.begin(), spectrum.magnitude.end(),
                                      [&](double v) { return v > level; });
  return static_cast<double>(occupied) / static_cast<double>(spectrum.magnitude.size());
}

void write_spectrum_csv(const WavenumberSpectrum& spectrum, std::ostream& out) {
  char buf[32];
  for (std::size_t ky = 0; ky < spectrum.n2; ++ky) {
    for (std::size_t kx = 0; kx < spectrum.n1; ++kx) {
      if (kx > 0) out << ',';
      std::snprintf(buf, sizeof buf, "%.17g", spectrum.at(kx, ky));
      out << buf;
    }
    out << '\n';
  }
}

void write_spectrum_pgm(const WavenumberSpectrum& spectrum, double floor_db,
                        const std::filesystem::path& path) {
  if (!(floor_db < 0.0)) throw DataError("image floor must be below 0 dB");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing", 0);
  const std::string header = "P5\n" + std::to_string(spectrum.n1) + " " +
                             std::to_string(spectrum.n2) + "\n255\n";
  out << header;
  // Image rows run from high ky at the top to low ky at the bottom.
  for (std::size_t r = 0; r < spectrum.n2; ++r) {
    const std::size_t ky = spectrum.n2 - 1 - r;
    for (std::size_t kx = 0; kx < spectrum.n1; ++kx) {
      const double v = spectrum.at(kx, ky);
      const double db = v > 0.0 ? 20.0 * std::log10(v) : floor_db;
      const double level = std::clamp(1.0 - db / floor_db, 0.0, 1.0);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * level))));
    }
  }
  if (!out) throw IoError("failed writing " + path.string(), header.size());
}

}  // namespace wavesal
