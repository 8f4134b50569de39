#pragma once

#include "hklab/observables.hpp"
#include "hklab/solve.hpp"

namespace hklab {

enum class Ensemble { canonical, grand_canonical };

struct GibbsState {
  Ensemble ensemble = Ensemble::canonical;
  double temperature = 0.0;
  QuantumState state;
  /// Eigenvalue of each state component (same order as the weights).
  RVector energies;
  double log_partition = 0.0;
  double partition_function = 0.0;  ///< exp(log_partition); may be inf for huge ln Z
  double free_energy = 0.0;         ///< -T ln Z
};

/// Z^{-1} exp(-H/T) on a fixed-N sector, from the full spectrum.
GibbsState gibbs_canonical(const ManyBodyOperator& h, double temperature);

/// Same over a block-diagonal Fock Hamiltonian, sector by sector (vacuum included).
GibbsState gibbs_grand_canonical(const ManyBodyOperator& h_fock, double temperature);

/// tr(H Gamma) - T S(Gamma)
double free_energy_of(const QuantumState& state, const ManyBodyOperator& h, double temperature);

}  // namespace hklab
