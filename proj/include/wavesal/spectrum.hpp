#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "wavesal/wavecube.hpp"

namespace wavesal {

/// Centred 2-D DFT magnitude: bin (n1/2, n2/2) holds zero wavenumber.
struct WavenumberSpectrum {
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::vector<double> magnitude;  // row-major, x fastest

  double at(std::size_t kx, std::size_t ky) const { return magnitude[ky * n1 + kx]; }
  /// Wavevector component times the plate side for bin index k of n bins.
  static double normalized_wavenumber(std::size_t k, std::size_t n);
};

/// Unnormalized, uncentred |DFT| of a snapshot.
std::vector<double> dft2_raw_magnitude(const Field2D& snapshot);

/// Centred spectrum scaled so that its largest bin is exactly 1.
WavenumberSpectrum dft2_magnitude(const Field2D& snapshot);

/// Share of bins whose magnitude exceeds floor_db decibels below the peak.
double occupied_fraction(const WavenumberSpectrum& spectrum, double floor_db);

/// One row per ky, one column per kx.
void write_spectrum_csv(const WavenumberSpectrum& spectrum, std::ostream& out);

/// Grayscale image of 20 log10(magnitude), mapping floor_db..0 dB to 0..255.
void write_spectrum_pgm(const WavenumberSpectrum& spectrum, double floor_db,
                        const std::filesystem::path& path);

}  // namespace wavesal
