#include "wavesal/platesim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#if defined(__SSE2__)
#include <pmmintrin.h>
#include <xmmintrin.h>
#endif

#include "wavesal/errors.hpp"

namespace wavesal {

namespace {

constexpr double kNear = 4.0 / 3.0;
constexpr double kFar = -1.0 / 12.0;
constexpr double kCentre = -5.0;  // -5/2 per axis
// Absolute row sum of the Laplacian stencil, in units of 1/dx^2.
constexpr double kStencilAbsSum = 5.0 + 4.0 * kNear - 4.0 * kFar;

// Tiny values ahead of the wavefront decay towards the denormal range, where
// arithmetic is orders of magnitude slower.
class FlushDenormals {
 public:
#if defined(__SSE2__)
  FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
  ~FlushDenormals() { _mm_setcsr(saved_); }

 private:
  unsigned saved_;
#endif
};

bool in_unit_square(double x, double y) {
  return x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0;
}

std::size_t cell_of(double fraction, std::size_t cells) {
  const double c = std::floor(fraction * static_cast<double>(cells));
  return std::min(static_cast<std::size_t>(std::max(c, 0.0)), cells - 1);
}

// Mirror index about the first and last node: -1 -> 1, n -> n - 2.
std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
  if (i < 0) i = -i;
  if (i > last) i = 2 * last - i;
  return static_cast<std::size_t>(i);
}

struct NodalCoefficients {
  std::vector<double> rigidity;
  std::vector<double> density;
};

NodalCoefficients nodal_coefficients(const MaterialMap& map) {
  const std::size_t n1 = map.cells_x + 1;
  const std::size_t n2 = map.cells_y + 1;
  NodalCoefficients out{std::vector<double>(n1 * n2),
                        std::vector<double>(n1 * n2)};
  for (std::size_t m = 0; m < n2; ++m) {
    for (std::size_t l = 0; l < n1; ++l) {
      double inv_sum = 0.0, rho_sum = 0.0;
      int count = 0;
      for (std::size_t j = (m == 0 ? 0 : m - 1); j <= std::min(m, map.cells_y - 1); ++j) {
        for (std::size_t i = (l == 0 ? 0 : l - 1); i <= std::min(l, map.cells_x - 1); ++i) {
          inv_sum += 1.0 / map.rigidity[map.index(i, j)];
          rho_sum += map.areal_density[map.index(i, j)];
          ++count;
        }
      }
      out.rigidity[m * n1 + l] = count / inv_sum;
      out.density[m * n1 + l] = rho_sum / count;
    }
  }
  return out;
}

// Copies u into a (n1 + 4) x (n2 + 4) buffer with two mirrored ghost layers.
void fill_padded(std::span<const double> u, std::size_t n1, std::size_t n2,
                 std::vector<double>& pad) {
  const std::size_t w = n1 + 4;
  for (std::size_t m = 0; m < n2; ++m) {
    const double* src = u.data() + m * n1;
    double* row = pad.data() + (m + 2) * w;
    std::copy(src, src + n1, row + 2);
    row[1] = src[1];
    row[0] = src[2];
    row[n1 + 2] = src[n1 - 2];
    row[n1 + 3] = src[n1 - 3];
  }
  auto copy_row = [&](std::size_t dst, std::size_t src) {
    std::copy(pad.begin() + static_cast<std::ptrdiff_t>(src * w),
              pad.begin() + static_cast<std::ptrdiff_t>((src + 1) * w),
              pad.begin() + static_cast<std::ptrdiff_t>(dst * w));
  };
  copy_row(1, 3);
  copy_row(0, 4);
  copy_row(n2 + 2, n2);
  copy_row(n2 + 3, n2 - 1);
}

void laplacian(const std::vector<double>& pad, std::size_t n1, std::size_t n2,
               double inv_dx2, std::vector<double>& out) {
  const std::size_t w = n1 + 4;
  for (std::size_t m = 0; m < n2; ++m) {
    const double* p = pad.data() + (m + 2) * w + 2;
    double* o = out.data() + m * n1;
    for (std::size_t l = 0; l < n1; ++l, ++p) {
      const double near = (p[-1] + p[1]) + (p[-w] + p[w]);
      const double far = (p[-2] + p[2]) + (p[-2 * w] + p[2 * w]);
      o[l] = inv_dx2 * (kCentre * p[0] + kNear * near + kFar * far);
    }
  }
}

}  // namespace

void MaterialSpec::validate() const {
  if (!(youngs_modulus > 0.0) || !(density > 0.0) || !(thickness > 0.0) ||
      !(side_length > 0.0))
    throw GeometryError("material constants must be strictly positive");
  if (!(poisson_ratio > 0.0 && poisson_ratio < 0.5))
    throw GeometryError("poisson_ratio must lie in (0, 0.5)");
}

double MaterialSpec::bending_stiffness() const {
  return youngs_modulus * thickness * thickness * thickness /
         (12.0 * (1.0 - poisson_ratio * poisson_ratio));
}

void ExcitationSpec::validate() const {
  if (!(carrier_frequency > 0.0))
    throw GeometryError("carrier_frequency must be positive");
  if (!(cycle_count >= 1.0)) throw GeometryError("cycle_count must be >= 1");
  if (!std::isfinite(amplitude)) throw GeometryError("amplitude must be finite");
}

DefectSpec DefectSpec::point(double x, double y, double modulus_scale,
                             double density_scale) {
  return DefectSpec{DefectKind::point_inclusion, x, y, x, y, modulus_scale,
                    density_scale};
}

DefectSpec DefectSpec::line(double xa, double ya, double xb, double yb,
                            double modulus_scale, double density_scale) {
  return DefectSpec{DefectKind::line_segment, xa, ya, xb, yb, modulus_scale,
                    density_scale};
}

void DefectSpec::validate() const {
  if (!in_unit_square(xa, ya) ||
      (kind == DefectKind::line_segment && !in_unit_square(xb, yb)))
    throw GeometryError("defect geometry lies outside the plate");
  if (!(modulus_scale > 0.0) || !(density_scale > 0.0) ||
      !std::isfinite(modulus_scale) || !std::isfinite(density_scale))
    throw GeometryError("defect scales must be strictly positive");
}

void MaterialMap::validate() const {
  if (rigidity.size() != cells_x * cells_y ||
      areal_density.size() != cells_x * cells_y)
    throw DataError("material map size mismatch");
  for (std::size_t k = 0; k < rigidity.size(); ++k) {
    if (!(rigidity[k] > 0.0) || !std::isfinite(rigidity[k]) ||
        !(areal_density[k] > 0.0) || !std::isfinite(areal_density[k]))
      throw DataError("material map entries must be positive and finite");
  }
}

double burst_force(double t, const ExcitationSpec& excitation) {
  const double duration = excitation.burst_duration();
  if (t < 0.0 || t > duration) return 0.0;
  const double window =
      0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * t / duration));
  return excitation.amplitude * window *
         std::sin(2.0 * std::numbers::pi * excitation.carrier_frequency * t);
}

std::vector<std::pair<std::size_t, std::size_t>> defect_cells(
    const DefectSpec& defect, std::size_t n1, std::size_t n2) {
  defect.validate();
  if (n1 < 2 || n2 < 2) throw GeometryError("grid must be at least 2 x 2");
  const std::size_t cx = n1 - 1, cy = n2 - 1;
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  if (defect.kind == DefectKind::point_inclusion) {
    cells.emplace_back(cell_of(defect.xa, cx), cell_of(defect.ya, cy));
    return cells;
  }

  // Grid traversal (Amanatides-Woo) in cell units.
  const double x0 = defect.xa * static_cast<double>(cx);
  const double y0 = defect.ya * static_cast<double>(cy);
  const double x1 = defect.xb * static_cast<double>(cx);
  const double y1 = defect.yb * static_cast<double>(cy);
  auto i = static_cast<std::ptrdiff_t>(cell_of(defect.xa, cx));
  auto j = static_cast<std::ptrdiff_t>(cell_of(defect.ya, cy));
  const auto i_end = static_cast<std::ptrdiff_t>(cell_of(defect.xb, cx));
  const auto j_end = static_cast<std::ptrdiff_t>(cell_of(defect.yb, cy));
  const double dx = x1 - x0, dy = y1 - y0;
  const int step_i = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int step_j = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto next_boundary = [](std::ptrdiff_t c, int step) {
    return static_cast<double>(step > 0 ? c + 1 : c);
  };
  double t_max_x = step_i != 0 ? (next_boundary(i, step_i) - x0) / dx : inf;
  double t_max_y = step_j != 0 ? (next_boundary(j, step_j) - y0) / dy : inf;
  const double t_dx = step_i != 0 ? std::abs(1.0 / dx) : inf;
  const double t_dy = step_j != 0 ? std::abs(1.0 / dy) : inf;

  cells.emplace_back(i, j);
  const std::size_t limit = cx + cy + 2;
  while ((i != i_end || j != j_end) && cells.size() <= limit) {
    if (t_max_x < t_max_y) {
      if (t_max_x > 1.0) break;
      i += step_i;
      t_max_x += t_dx;
    } else {
      if (t_max_y > 1.0) break;
      j += step_j;
      t_max_y += t_dy;
    }
    if (i < 0 || j < 0 || i >= static_cast<std::ptrdiff_t>(cx) ||
        j >= static_cast<std::ptrdiff_t>(cy))
      break;
    cells.emplace_back(i, j);
  }
  return cells;
}

MaterialMap build_material_map(const MaterialSpec& base,
                               std::span<const DefectSpec> defects,
                               std::size_t n1, std::size_t n2) {
  base.validate();
  if (n1 < 2 || n2 < 2) throw GeometryError("grid must be at least 2 x 2");
  MaterialMap map;
  map.cells_x = n1 - 1;
  map.cells_y = n2 - 1;
  map.rigidity.assign(map.cells_x * map.cells_y, base.bending_stiffness());
  map.areal_density.assign(map.cells_x * map.cells_y, base.areal_density());
  for (const auto& defect : defects) {
    for (const auto& [i, j] : defect_cells(defect, n1, n2)) {
      map.rigidity[map.index(i, j)] *= defect.modulus_scale;
      map.areal_density[map.index(i, j)] *= defect.density_scale;
    }
  }
  return map;
}

double stable_timestep(const MaterialMap& map, double dx, double safety) {
  map.validate();
  const auto nodal = nodal_coefficients(map);
  const std::size_t n1 = map.cells_x + 1, n2 = map.cells_y + 1;
  const double inv_dx2 = 1.0 / (dx * dx);
  double bound = 0.0;
  for (std::size_t m = 0; m < n2; ++m) {
    for (std::size_t l = 0; l < n1; ++l) {
      auto d = [&](std::ptrdiff_t dl, std::ptrdiff_t dm) {
        return nodal.rigidity[reflect(static_cast<std::ptrdiff_t>(m) + dm, n2) * n1 +
                              reflect(static_cast<std::ptrdiff_t>(l) + dl, n1)];
      };
      const double weighted =
          5.0 * d(0, 0) +
          kNear * (d(-1, 0) + d(1, 0) + d(0, -1) + d(0, 1)) -
          kFar * (d(-2, 0) + d(2, 0) + d(0, -2) + d(0, 2));
      bound = std::max(bound, weighted * inv_dx2 * kStencilAbsSum * inv_dx2 /
                                  nodal.density[m * n1 + l]);
    }
  }
  return safety * 2.0 / std::sqrt(bound);
}

double analytic_phase_velocity(const MaterialSpec& material,
                               double frequency) {
  const double omega = 2.0 * std::numbers::pi * frequency;
  return std::pow(omega * omega * material.bending_stiffness() /
                      material.areal_density(),
                  0.25);
}

double analytic_group_velocity(const MaterialSpec& material,
                               double frequency) {
  return 2.0 * analytic_phase_velocity(material, frequency);
}

PlateSolver::PlateSolver(const MaterialMap& map, double dx,
                         const ExcitationSpec& excitation, double time_step)
    : n1_(map.cells_x + 1),
      n2_(map.cells_y + 1),
      dx_(dx),
      dt_(time_step),
      excitation_(excitation) {
  map.validate();
  if (n1_ < 3 || n2_ < 3) throw GeometryError("solver grid must be at least 3 x 3");
  if (excitation.source.l >= n1_ || excitation.source.m >= n2_)
    throw GeometryError("excitation source lies outside the grid");
  auto nodal = nodal_coefficients(map);
  rigidity_ = std::move(nodal.rigidity);
  density_ = std::move(nodal.density);
  const std::size_t n = n1_ * n2_;
  weight_.resize(n);
  for (std::size_t m = 0; m < n2_; ++m) {
    const double wy = (m == 0 || m == n2_ - 1) ? 0.5 : 1.0;
    for (std::size_t l = 0; l < n1_; ++l) {
      const double wx = (l == 0 || l == n1_ - 1) ? 0.5 : 1.0;
      weight_[m * n1_ + l] = wx * wy;
    }
  }
  source_index_ = excitation.source.m * n1_ + excitation.source.l;
  source_area_ = dx * dx * weight_[source_index_];
  previous_.assign(n, 0.0);
  current_.assign(n, 0.0);
  next_.assign(n, 0.0);
  moment_.assign(n, 0.0);
  accel_.assign(n, 0.0);
  work_.assign((n1_ + 4) * (n2_ + 4), 0.0);
}

void PlateSolver::step() {
  FlushDenormals guard;
  const double inv_dx2 = 1.0 / (dx_ * dx_);
  fill_padded(current_, n1_, n2_, work_);
  laplacian(work_, n1_, n2_, inv_dx2, moment_);
  for (std::size_t k = 0; k < moment_.size(); ++k) moment_[k] *= rigidity_[k];
  fill_padded(moment_, n1_, n2_, work_);
  laplacian(work_, n1_, n2_, inv_dx2, accel_);

  const double force = burst_force(time(), excitation_);
  const double dt2 = dt_ * dt_;
  double max_abs = 0.0;
  bool finite = true;
  for (std::size_t k = 0; k < next_.size(); ++k) {
    const double w = 2.0 * current_[k] - previous_[k] - dt2 * accel_[k] / density_[k];
    next_[k] = w;
    max_abs = std::max(max_abs, std::abs(w));
    finite = finite && std::isfinite(w);
  }
  next_[source_index_] += dt2 * force / (density_[source_index_] * source_area_);
  max_abs = std::max(max_abs, std::abs(next_[source_index_]));
  previous_.swap(current_);
  current_.swap(next_);
  ++steps_;
  last_max_abs_ = finite ? max_abs : std::numeric_limits<double>::infinity();
}

double PlateSolver::energy() const {
  const double inv_dx2 = 1.0 / (dx_ * dx_);
  std::vector<double> pad(work_.size());
  std::vector<double> lap_now(current_.size()), lap_prev(current_.size());
  fill_padded(current_, n1_, n2_, pad);
  laplacian(pad, n1_, n2_, inv_dx2, lap_now);
  fill_padded(previous_, n1_, n2_, pad);
  laplacian(pad, n1_, n2_, inv_dx2, lap_prev);
  const double area = dx_ * dx_;
  double kinetic = 0.0, strain = 0.0;
  for (std::size_t k = 0; k < current_.size(); ++k) {
    const double v = (current_[k] - previous_[k]) / dt_;
    kinetic += weight_[k] * density_[k] * v * v;
    strain += weight_[k] * rigidity_[k] * lap_now[k] * lap_prev[k];
  }
  return 0.5 * area * (kinetic + strain);
}

DataCube simulate(const MaterialSpec& material,
                  std::span<const DefectSpec> defects,
                  const ExcitationSpec& excitation,
                  const SimulationSettings& settings, SimulationInfo* info) {
  material.validate();
  excitation.validate();
  if (settings.n1 != settings.n2)
    throw GeometryError("the plate is square: n1 must equal n2");
  if (settings.n1 < 3) throw GeometryError("grid must be at least 3 x 3");
  if (excitation.source.l >= settings.n1 || excitation.source.m >= settings.n2)
    throw GeometryError("excitation source lies outside the grid");
  if (settings.sample_count < 1) throw DataError("sample_count must be >= 1");
  if (!(settings.sample_interval > 0.0))
    throw DataError("sample_interval must be positive");
  if (!(settings.safety > 0.0 && settings.safety <= 1.0))
    throw DataError("safety must lie in (0, 1]");

  const MaterialMap map =
      build_material_map(material, defects, settings.n1, settings.n2);
  const double dx = material.side_length / static_cast<double>(settings.n1 - 1);
  const double dt_max = stable_timestep(map, dx, settings.safety);
  const auto substeps =
      static_cast<std::size_t>(std::ceil(settings.sample_interval / dt_max));
  const double dt = settings.sample_interval / static_cast<double>(substeps);

  PlateSolver solver(map, dx, excitation, dt);
  DataCube cube(settings.n1, settings.n2, settings.sample_count, dx,
                settings.sample_interval);

  // Point-force response scale of an infinite plate at the carrier.
  const double omega = 2.0 * std::numbers::pi * excitation.carrier_frequency;
  const double response_scale =
      std::abs(excitation.amplitude) /
      (8.0 * omega *
       std::sqrt(material.bending_stiffness() * material.areal_density()));
  const double limit = 1e6 * response_scale;

  for (std::size_t k = 1; k < settings.sample_count; ++k) {
    for (std::size_t q = 0; q < substeps; ++q) {
      solver.step();
      if (!(solver.last_max_abs() <= limit))
        throw DivergenceError("simulation diverged", solver.steps_taken());
    }
    const auto w = solver.deflection();
    std::copy(w.begin(), w.end(), cube.mutable_slice(k).begin());
  }
  if (info != nullptr)
    *info = SimulationInfo{dt, substeps, solver.steps_taken()};
  return cube;
}

}  // namespace wavesal
