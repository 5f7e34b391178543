#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "wavesal/wavecube.hpp"

namespace wavesal {

/// Homogeneous isotropic square plate.
struct MaterialSpec {
  double youngs_modulus = 71e9;  // Pa
  double poisson_ratio = 0.33;
  double density = 2700.0;       // kg/m^3
  double thickness = 0.005;      // m
  double side_length = 0.25;     // m

  void validate() const;
  /// Kirchhoff flexural rigidity E h^3 / (12 (1 - nu^2)).
  double bending_stiffness() const;
  double areal_density() const { return density * thickness; }
};

/// Hann-windowed tone burst applied as an out-of-plane point force.
struct ExcitationSpec {
  double carrier_frequency = 500e3;  // Hz
  double cycle_count = 5.0;
  double amplitude = 1.0;            // N
  GridPoint source{};

  void validate() const;
  double burst_duration() const { return cycle_count / carrier_frequency; }
};

enum class DefectKind { point_inclusion, line_segment };

/// Material anomaly. Coordinates are fractions of the side length; a point
/// alters the single cell containing it, a line alters every cell its ideal
/// segment crosses.
struct DefectSpec {
  DefectKind kind = DefectKind::point_inclusion;
  double xa = 0.0, ya = 0.0;  // point, or first endpoint
  double xb = 0.0, yb = 0.0;  // second endpoint (lines only)
  double modulus_scale = 1.0;
  double density_scale = 1.0;

  static DefectSpec point(double x, double y, double modulus_scale,
                          double density_scale);
  static DefectSpec line(double xa, double ya, double xb, double yb,
                         double modulus_scale, double density_scale);
  void validate() const;
};

/// Per-cell coefficients on the (n1-1) x (n2-1) cell grid, row-major.
struct MaterialMap {
  std::size_t cells_x = 0;
  std::size_t cells_y = 0;
  std::vector<double> rigidity;       // D, N m
  std::vector<double> areal_density;  // rho h, kg/m^2

  std::size_t index(std::size_t i, std::size_t j) const { return j * cells_x + i; }
  void validate() const;
};

double burst_force(double t, const ExcitationSpec& excitation);

/// Cells (i, j) touched by one defect on an n1 x n2 node grid, without
/// duplicates, in traversal order.
std::vector<std::pair<std::size_t, std::size_t>> defect_cells(
    const DefectSpec& defect, std::size_t n1, std::size_t n2);

MaterialMap build_material_map(const MaterialSpec& base,
                               std::span<const DefectSpec> defects,
                               std::size_t n1, std::size_t n2);

/// Largest leapfrog step (times safety) for the discrete plate operator built
/// from `map`. Bounds the operator spectrum with Gershgorin discs, so it stays
/// valid across stiffness jumps between neighbouring nodes.
double stable_timestep(const MaterialMap& map, double dx, double safety);

double analytic_phase_velocity(const MaterialSpec& material, double frequency);
/// Thin-plate flexural group velocity, exactly twice the phase velocity.
double analytic_group_velocity(const MaterialSpec& material, double frequency);

struct SimulationSettings {
  std::size_t n1 = 257;
  std::size_t n2 = 257;
  std::size_t sample_count = 380;
  double sample_interval = 1e-7;  // s between stored snapshots
  double safety = 0.9;
};

struct SimulationInfo {
  double time_step = 0.0;       // internal leapfrog step
  std::size_t substeps = 0;     // internal steps per stored sample
  std::size_t total_steps = 0;
};

/// Explicit leapfrog integrator for rho_h w_tt + L(D L w) = f(t) delta_src,
/// with L the fourth-order accurate 5-point-per-axis Laplacian. Edges are
/// symmetric (zero slope, zero shear): ghost nodes mirror interior ones.
class PlateSolver {
 public:
  PlateSolver(const MaterialMap& map, double dx,
              const ExcitationSpec& excitation, double time_step);

  void step();

  std::span<const double> deflection() const { return current_; }
  std::size_t n1() const { return n1_; }
  std::size_t n2() const { return n2_; }
  double time() const { return static_cast<double>(steps_) * dt_; }
  std::size_t steps_taken() const { return steps_; }
  double time_step() const { return dt_; }
  /// Largest |w| produced by the most recent step.
  double last_max_abs() const { return last_max_abs_; }

  /// Discrete kinetic plus strain energy between the last two levels. The
  /// scheme conserves it exactly (up to rounding) once forcing has stopped.
  double energy() const;

 private:
  std::size_t n1_, n2_;
  double dx_, dt_;
  ExcitationSpec excitation_;
  std::size_t source_index_;
  double source_area_;
  std::vector<double> rigidity_;     // nodal, harmonic mean of cells
  std::vector<double> density_;      // nodal, arithmetic mean of cells
  std::vector<double> weight_;       // 1 interior, 1/2 edge, 1/4 corner
  std::vector<double> previous_, current_, next_;
  std::vector<double> work_, moment_, accel_;
  std::size_t steps_ = 0;
  double last_max_abs_ = 0.0;
};

DataCube simulate(const MaterialSpec& material,
                  std::span<const DefectSpec> defects,
                  const ExcitationSpec& excitation,
                  const SimulationSettings& settings,
                  SimulationInfo* info = nullptr);

}  // namespace wavesal
