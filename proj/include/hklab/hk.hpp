#pragma once

// Duality pairings, semi-metrics and conclusion checks for the
// density-to-potential maps.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hklab/thermal.hpp"

namespace hklab {

/// Raised when a check's hypothesis does not hold, so it claims nothing.
class HypothesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ground-state data of H = K + v (+ w) on an N-particle sector.
struct GroundSystem {
  RVector v;
  double energy = 0.0;
  DensityProfile density;
  int num_particles = 0;
  double gap = 0.0;
  int degeneracy = 1;
  /// Density of every vector of the ground span (first entry = density).
  std::vector<DensityProfile> ground_densities;
};

/// Solves the sector problem; the density is that of the first ground vector.
GroundSystem solve_system(const LatticeSpace& space, int num_particles, const RVector& v,
                          const std::optional<PairPotential>& pair = std::nullopt,
                          const SolverOptions& options = {});

enum class Conclusion { potentials_equal_up_to_constant, constraint_holds, violated,
                        flagged_zero_state };

std::string to_string(Conclusion c);

struct HKReport {
  double lhs_quantity = 0.0;
  std::pair<double, double> inequality_slack{0.0, 0.0};
  Conclusion conclusion = Conclusion::violated;
  RVector details;  ///< per-configuration residuals (verify_constancy)
  double constant = 0.0;
  double max_residual = 0.0;
  int zero_count = 0;
};

/// -sum_x (v1 - v2)(rho1 - rho2) h
double hk_semimetric(const GroundSystem& a, const GroundSystem& b);
/// Smallest semi-metric value over all pairs of ground-span vectors.
double hk_semimetric_worst(const GroundSystem& a, const GroundSystem& b);

/// (sum (v1 - v2) rho2 h - (E1 - E2), sum (v2 - v1) rho1 h - (E2 - E1)); the
/// two slacks add up to hk_semimetric.
std::pair<double, double> variational_slacks(const GroundSystem& a, const GroundSystem& b);

/// Tests whether a state shared by H(v1) and H(v2) forces v1 - v2 to be the
/// constant (E1 - E2) / N, via E2 - E1 + sum_i (v1 - v2)(x_i) on every
/// configuration. States with vanishing amplitudes are flagged, not judged.
HKReport verify_constancy(const SectorBasis& basis, const CVector& psi, const RVector& v1,
                          const RVector& v2, double e1, double e2, double tol = 1e-8);

struct PairDecomposition {
  RVector v;  ///< per site, mean zero
  RVector w;  ///< per lattice distance
  double residual = 0.0;  ///< max |W - fit|
  int null_space_dim = 0;
};

/// Least-squares fit W(x, y) = (v(x) + v(y)) / (N - 1) + w(|x - y|) over x <= y.
/// The fit is blind to v -> v + c, w -> w - 2c / (N - 1); v is chosen mean zero.
PairDecomposition decompose_pair_potential(const LatticeSpace& space, const RMatrix& kernel,
                                           int num_particles);

struct SpinSystem {
  RVector v;
  MagneticField field;
  double energy = 0.0;
  DensityProfile density;
  Magnetization magnetization;
  int num_particles = 0;
};

struct ChiField {
  RVector raw;
  RVector snapped;
  RVector snap_error;
  std::vector<bool> masked;    ///< |B1 - B2| below threshold
  std::vector<bool> violated;  ///< farther than 0.25 / N from the grid
  double max_snap_error = 0.0;
  double hypothesis_pairing = 0.0;
  /// N odd and the right-hand side vanishes: the constraint forces B1 = B2.
  bool implies_equal_fields = false;

  bool consistent() const;
};

/// |B1 - B2| chi = (E1 - E2) / N + v2 - v1, solved site by site and snapped to
/// {-1 + 2k/N}. Throws HypothesisError unless sum (B1 - B2).(m1 - m2) h <= 1e-8.
ChiField spin_constraint_chi(const SpinSystem& a, const SpinSystem& b,
                             double mask_threshold = 1e-8);

struct ThermalSystem {
  RVector v;
  double temperature = 0.0;
  double entropy = 0.0;
  DensityProfile density;
  Ensemble ensemble = Ensemble::canonical;
};

ThermalSystem thermal_system(const OccupationBasis& basis, const GibbsState& gibbs,
                             const RVector& v);

/// (T1 - T2)(S1 - S2) - sum (v1 - v2)(rho1 - rho2) h
double thermal_semimetric(const ThermalSystem& a, const ThermalSystem& b);

struct NonlocalThermalSystem {
  CMatrix operator_matrix;  ///< one-body G
  double temperature = 0.0;
  double entropy = 0.0;
  OneRDM gamma;
  Ensemble ensemble = Ensemble::canonical;
};

NonlocalThermalSystem nonlocal_thermal_system(const OccupationBasis& basis,
                                              const GibbsState& gibbs, const OneBodyOperator& g);

/// (T1 - T2)(S1 - S2) - tr((G1 - G2)(gamma1 - gamma2))
double nonlocal_thermal_pairing(const NonlocalThermalSystem& a, const NonlocalThermalSystem& b);

struct UniquenessReport {
  double defect = 0.0;  ///< ||sum_i (-alpha Delta_i + G_i)|| on the sector
  double alpha = 0.0;
  double operator_size = 0.0;  ///< ||G||
  /// Constant c with alpha Delta >= (alpha/2) Delta - c on the lattice,
  /// i.e. (alpha/2) lambda_max(-Delta).
  double relative_bound_constant = 0.0;
  bool vanishes = false;     ///< defect below 1e-8
  bool conclusion = false;   ///< alpha = 0 and G = 0
  std::string explanation;
};

/// Tests the relation sum_i (-alpha Delta_i + G_i) = 0 on an N-particle sector.
UniquenessReport uniqueness_defect_onebody(const SectorBasis& basis, const OneBodyOperator& g,
                                           double alpha);

}  // namespace hklab
