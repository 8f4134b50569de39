#pragma once

// Two constructions where different external operators share their reduced
// data: a rank-one non-local perturbation above the Fermi level, and a uniform
// spin field acting on a spin eigenstate.

#include <optional>

#include "hklab/hk.hpp"

namespace hklab {

enum class CounterexampleKind { gilbert_nonlocal, capelle_vignale_spin };

struct CounterexampleCertificate {
  CounterexampleKind kind = CounterexampleKind::gilbert_nonlocal;
  /// Norm of the difference of the external operators on the N-particle sector.
  double operator_distance = 0.0;
  double reduced_data_distance = 0.0;
  std::pair<double, double> energies{0.0, 0.0};
  bool verdict = false;
};

struct GilbertOptions {
  /// Perturbation strength; defaults to 0.1 times the many-body gap.
  std::optional<double> epsilon;
  /// Deliberate misuse: perturb the highest occupied orbital instead.
  bool perturb_occupied = false;
};

struct GilbertResult {
  CounterexampleCertificate certificate;
  OneBodyOperator g1;
  OneBodyOperator g2;
  double epsilon = 0.0;
  double gap = 0.0;
  double overlap = 0.0;        ///< |<psi1|psi2>|
  double energy_shift = 0.0;   ///< E2 - E1
  double gamma_distance = 0.0; ///< max |gamma1 - gamma2|
};

/// Non-interacting H = G1 on the sector; G2 = G1 + eps |phi><phi| with phi the
/// lowest unoccupied eigenvector of G1.
GilbertResult gilbert_counterexample(int num_particles, const OneBodyOperator& g1,
                                     const GilbertOptions& options = {});

/// Raised when the requested field would reorder the low-lying levels.
class LevelCrossingError : public std::runtime_error {
 public:
  LevelCrossingError(const std::string& what, double threshold)
      : std::runtime_error(what), threshold_(threshold) {}
  double threshold() const { return threshold_; }

 private:
  double threshold_;
};

struct CapelleVignaleResult {
  CounterexampleCertificate certificate;
  ChiField chi;
  SpinSystem system1;
  SpinSystem system2;
  double b = 0.0;
  double s = 0.0;               ///< sum sigma_z eigenvalue of the shared ground state
  double gap = 0.0;             ///< gap of H1 above its ground level
  double crossing_threshold = 0.0;
  double eigen_defect = 0.0;    ///< ||S_z psi - s psi||
  double density_distance = 0.0;
  double magnetization_distance = 0.0;
  double constraint_residual = 0.0;  ///< |N b chi - (E1 - E2)|
  CVector psi1;
  CVector psi2;
};

/// H1 = K + v (+ w) with B1 = 0 and H2 = H1 + b sum_i sigma^z_i. b defaults to
/// 1e-3 times the gap of H1. Throws LevelCrossingError when |b| reaches the
/// first crossing.
CapelleVignaleResult capelle_vignale_pair(const LatticeSpace& space, int num_particles,
                                          const RVector& v,
                                          const std::optional<PairPotential>& pair,
                                          std::optional<double> b = std::nullopt);

}  // namespace hklab
