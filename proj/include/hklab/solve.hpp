#pragma once

#include <cstdint>
#include <vector>

#include "hklab/hamiltonian.hpp"

namespace hklab {

struct GroundSolution {
  double energy = 0.0;
  /// Orthonormal ground vectors as columns.
  CMatrix vectors;
  int degeneracy = 0;
  /// Distance to the next distinct level; +inf when the whole space is degenerate.
  double gap = 0.0;

  CVector vector(int k = 0) const { return vectors.col(k); }
};

struct Spectrum {
  RVector values;  ///< ascending
  CMatrix vectors;
};

enum class SolverKind { automatic, dense, lanczos };

struct SolverOptions {
  double degeneracy_tol = 1e-8;  ///< relative: window = tol * max(1, |E|)
  SolverKind kind = SolverKind::automatic;
  std::uint64_t seed = 0x5eed;
  int krylov_dim = 80;
};

/// Lowest eigenvalue with its full degenerate eigenspace, and the gap above it.
/// Dense for dim <= kDenseLimit; restarted Lanczos with full reorthogonalization
/// and deflation otherwise. Throws ConvergenceError when the budget
/// (50 sqrt(dim) restarts) is exhausted.
GroundSolution ground_state(const ManyBodyOperator& h, const SolverOptions& options = {});

Spectrum full_spectrum(const ManyBodyOperator& h);
Spectrum full_spectrum(const CMatrix& h);

/// Rotates each column so its largest-magnitude entry is real positive.
void fix_phase(CMatrix& vectors);
void fix_phase(CVector& v);

struct ZeroReport {
  int zero_count = 0;
  std::vector<int> zero_indices;
  double min_abs = 0.0;
};

ZeroReport check_nonvanishing(const CVector& psi, double zero_tol = 1e-12);

}  // namespace hklab
