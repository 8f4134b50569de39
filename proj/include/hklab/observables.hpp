#pragma once

// Reduced quantities of many-body states. Lattice sums carry the spacing h so
// that densities approximate continuum densities:
//   sum_x rho(x) h = <N>,  sum_{x,y} rho2(x,y) h^2 = <N(N-1)/2>.

#include <vector>

#include "hklab/state.hpp"

namespace hklab {

struct DensityProfile {
  RVector values;
  double spacing = 1.0;

  /// sum_x rho(x) h
  double mass() const { return values.sum() * spacing; }
  /// sum_x v(x) rho(x) h
  double pairing(const RVector& v) const { return v.dot(values) * spacing; }
};

struct PairDensity {
  RMatrix values;
  double spacing = 1.0;
  int num_particles = 0;

  /// sum_{x,y} W(x,y) rho2(x,y) h^2
  double pairing(const RMatrix& w) const {
    return (w.array() * values.array()).sum() * spacing * spacing;
  }
  /// (2 / (N - 1)) sum_y rho2(x, y) h
  RVector marginal() const;
};

/// Per-site spin density m(x) = (2 Re xi, 2 Im xi, rho_upup - rho_dndn) with
/// xi(x) = <a+_{x up} a_{x dn}> / h.
struct Magnetization {
  std::vector<Vec3> values;
  double spacing = 1.0;

  /// sum_x B(x) . m(x) h
  double pairing(const MagneticField& field) const;
  double max_abs_difference(const Magnetization& other) const;
};

/// One-particle reduced density matrix gamma_pq = <a+_q a_p> as an operator on
/// the one-body space (eigenvalues in [0, 1]); the continuum kernel is
/// matrix / h.
struct OneRDM {
  CMatrix matrix;
  double spacing = 1.0;

  CMatrix kernel() const { return matrix / spacing; }
  /// tr(G gamma)
  double pairing(const CMatrix& g) const { return (g * matrix).trace().real(); }
  RVector occupations() const;
  /// Spin-traced diagonal of the kernel; equals the density.
  RVector site_density(const LatticeSpace& space) const;
};

struct SpeciesPairData {
  RMatrix aa;  ///< pair function within species a, prefactor C(N,2)
  RMatrix bb;  ///< pair function within species b, prefactor C(M,2)
  RMatrix ab;  ///< cross pair function, prefactor N M
  double spacing = 1.0;

  /// rho_a(x) = (1/M) sum_y rho2_ab(x, y) h
  RVector density_a(int num_b) const;
  /// rho_b(y) = (1/N) sum_x rho2_ab(x, y) h
  RVector density_b(int num_a) const;
  double max_abs_difference(const SpeciesPairData& other) const;
};

DensityProfile density(const OccupationBasis& basis, const QuantumState& state);
PairDensity pair_density(const OccupationBasis& basis, const QuantumState& state);
Magnetization magnetization(const OccupationBasis& basis, const QuantumState& state);
Magnetization magnetization_from_rdm(const OneRDM& gamma, const LatticeSpace& space);
OneRDM one_rdm(const OccupationBasis& basis, const QuantumState& state);

/// S = -sum p ln p with 0 ln 0 = 0.
double entropy(const QuantumState& state);
double entropy(const std::vector<double>& probabilities);

SpeciesPairData species_pair_functions(const TwoSpeciesBasis& basis, const QuantumState& state,
                                       const TwoSpeciesSpec& spec);

}  // namespace hklab
