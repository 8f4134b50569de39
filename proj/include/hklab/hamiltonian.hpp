#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hklab/basis.hpp"

namespace hklab {

/// Sparse Hermitian matrix on a many-body basis. `blocks` lists the offsets of
/// particle-number sectors when the operator is block diagonal over them
/// (last entry = dim).
class ManyBodyOperator {
 public:
  ManyBodyOperator(SparseCMatrix matrix, std::vector<int> blocks, std::string description);

  const SparseCMatrix& sparse() const { return matrix_; }
  int dim() const { return static_cast<int>(matrix_.rows()); }
  const std::vector<int>& blocks() const { return blocks_; }
  const std::string& description() const { return description_; }

  CVector apply(const CVector& x) const { return matrix_ * x; }
  /// Densification, limited to dim <= kDenseLimit.
  CMatrix dense() const;
  CMatrix dense_block(int block) const;
  double expectation(const CVector& psi) const;

 private:
  SparseCMatrix matrix_;
  std::vector<int> blocks_;
  std::string description_;
};

/// Second quantization sum_pq t_pq a+_p a_q of a one-body operator on `basis`.
ManyBodyOperator assemble_one_body(const OccupationBasis& basis, const OneBodyOperator& op);

/// Spin-blind pair term sum_{i<j} W(x_i, x_j); diagonal in occupations.
ManyBodyOperator assemble_pair(const OccupationBasis& basis, const PairPotential& pair);

/// One-body part plus optional pair part on an N-particle sector.
ManyBodyOperator assemble_hamiltonian(const SectorBasis& basis, const OneBodyOperator& one_body,
                                      const std::optional<PairPotential>& pair);

ManyBodyOperator assemble_fock_hamiltonian(const FockBasis& fock, const OneBodyOperator& one_body,
                                           const std::optional<PairPotential>& pair);

/// Two-species Hamiltonian on TwoSpeciesBasis(space, N, M); kinetic term of
/// species b scaled by alpha.
ManyBodyOperator assemble_two_species(const TwoSpeciesSpec& spec, const LatticeSpace& space);

/// Diagonal operator sum_i sigma^z_i (requires q = 2).
ManyBodyOperator spin_z_operator(const OccupationBasis& basis);

/// Number operator n_x on each site, as diagonal values over the basis.
std::vector<RVector> site_occupations(const OccupationBasis& basis);

/// a+_mode on a Fock basis (matrix elements leaving the basis are dropped).
ManyBodyOperator creation_operator(const FockBasis& fock, int mode);

SparseCMatrix diagonal_sparse(const RVector& diag);

}  // namespace hklab
