#pragma once

// Numerical inversion of the maps v -> rho, (v, w) -> rho2 and (v, T) -> (rho, S)
// by damped Gauss-Newton with linear-response Jacobians.

#include <optional>
#include <string>

#include "hklab/thermal.hpp"

namespace hklab {

/// Forward problem family: H = K + v (+ w) on N particles (canonical or zero
/// temperature) or on sectors 0..N_max (grand canonical).
struct InversionFamily {
  LatticeSpace space;
  int num_particles = 1;  ///< N, or N_max for the grand-canonical ensemble
  Ensemble ensemble = Ensemble::canonical;
  std::optional<PairPotential> pair;
  std::optional<double> temperature;  ///< absent: ground state
};

struct InversionOptions {
  double tol = 1e-8;
  int max_iter = 500;
  /// Refuse zero-temperature iterates whose gap falls below this.
  double min_gap = 1e-6;
};

struct InversionResult {
  RVector v;
  RVector w;  ///< displacement form; empty unless pair-density inversion
  std::optional<double> temperature;
  double residual = 0.0;          ///< ||data(params) - target||_2
  double entropy_residual = 0.0;  ///< |S - S_target| for (v, T) inversion
  int iterations = 0;
  std::string gauge;
  bool converged = false;
  std::string message;
  /// Canonical (v, T) inversion with a target ln Z: the true v equals the
  /// returned v plus this constant.
  std::optional<double> constant_shift;
};

struct DensityResponse {
  RVector density;
  RMatrix jacobian;  ///< d rho(x) / d v(y)
  double gap = 0.0;  ///< zero-temperature gap (inf for T > 0)
  double entropy = 0.0;
  double log_partition = 0.0;
};

/// Density of the family at v with its linear-response Jacobian.
DensityResponse density_response(const InversionFamily& family, const RVector& v);

InversionResult invert_density(const DensityProfile& target, const InversionFamily& family,
                               const RVector& v_init, const InversionOptions& options = {});

/// Recovers v and the displacement form of w from a pair density. Gauge: mean-zero v
/// and mean-zero w over the distance bins that can be occupied.
InversionResult invert_pair_density(const PairDensity& target, const InversionFamily& family,
                                    const RVector& v_init, const RVector& w_init,
                                    const InversionOptions& options = {});

struct ThermalTarget {
  DensityProfile density;
  double entropy = 0.0;
  std::optional<double> log_partition;
};

InversionResult invert_v_and_T(const ThermalTarget& target, const InversionFamily& family,
                               std::pair<double, double> t_bracket,
                               const InversionOptions& options = {});

/// Mean-zero orthonormal basis of R^n as columns (n x (n - 1)).
RMatrix mean_zero_basis(int n);

}  // namespace hklab
