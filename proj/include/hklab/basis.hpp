#pragma once

// Occupation-number bases. A configuration is a 64-bit mask over the one-body
// modes; |m> = a+_{p1} a+_{p2} ... a+_{pN} |0> with p1 < p2 < ... < pN.

#include <cstdint>
#include <optional>
#include <vector>

#include "hklab/lattice.hpp"

namespace hklab {

using Mask = std::uint64_t;

int popcount(Mask m);
/// Number of occupied modes with index below `mode`.
int occupied_below(Mask m, int mode);

/// Ordered list of configurations on a lattice, sorted by (particle number, mask).
class OccupationBasis {
 public:
  const LatticeSpace& space() const { return space_; }
  const std::vector<Mask>& masks() const { return masks_; }
  int dim() const { return static_cast<int>(masks_.size()); }
  Mask operator[](int i) const { return masks_[static_cast<std::size_t>(i)]; }
  /// Index of `m`, or nullopt if the configuration is not in the basis.
  std::optional<int> index_of(Mask m) const;

 protected:
  OccupationBasis(LatticeSpace space, std::vector<Mask> masks);

 private:
  LatticeSpace space_;
  std::vector<Mask> masks_;
};

/// All configurations with exactly N particles; dim = C(D, N).
class SectorBasis : public OccupationBasis {
 public:
  SectorBasis(const LatticeSpace& space, int num_particles);
  int num_particles() const { return num_particles_; }

 private:
  int num_particles_;
};

/// Direct sum of sectors n = 0..N_max (n = 0 is the vacuum).
class FockBasis : public OccupationBasis {
 public:
  FockBasis(const LatticeSpace& space, int max_particles);
  int max_particles() const { return max_particles_; }
  /// Offset of sector n inside the flat basis.
  int sector_offset(int n) const { return offsets_.at(static_cast<std::size_t>(n)); }
  int sector_dim(int n) const;

 private:
  int max_particles_;
  std::vector<int> offsets_;
};

SectorBasis build_sector_basis(const LatticeSpace& space, int num_particles);
FockBasis build_fock_basis(const LatticeSpace& space, int max_particles);

std::uint64_t binomial(int n, int k);

/// Symmetric two-site kernel W(x, y) entering sum_{i<j} W(x_i, x_j).
class PairPotential {
 public:
  /// Kernel form; must be symmetric.
  explicit PairPotential(RMatrix kernel);

  /// Displacement form w(|x - y|), one value per lattice distance
  /// (LatticeSpace::num_distances entries).
  static PairPotential from_displacement(const LatticeSpace& space, const RVector& w);
  static PairPotential zero(int num_sites);

  const RMatrix& kernel() const { return kernel_; }
  int num_sites() const { return static_cast<int>(kernel_.rows()); }
  double operator()(int x, int y) const { return kernel_(x, y); }
  bool is_zero() const { return kernel_.cwiseAbs().maxCoeff() == 0.0; }

 private:
  RMatrix kernel_;
};

/// Mixture of N particles of type a and M of type b sharing one lattice.
struct TwoSpeciesSpec {
  int num_a = 1;
  int num_b = 1;
  double alpha = 1.0;  ///< kinetic prefactor of species b
  RVector v_a;
  RVector v_b;
  RVector w_a;   ///< displacement form
  RVector w_b;   ///< displacement form
  RVector w_ab;  ///< displacement form

  /// Throws InvalidArgument when the spec is unusable on `space`.
  void validate(const LatticeSpace& space) const;
};

/// Product basis: index = index_a * dim_b + index_b.
class TwoSpeciesBasis {
 public:
  TwoSpeciesBasis(const LatticeSpace& space, int num_a, int num_b);
  const SectorBasis& a() const { return a_; }
  const SectorBasis& b() const { return b_; }
  int dim() const { return a_.dim() * b_.dim(); }
  const LatticeSpace& space() const { return a_.space(); }

 private:
  SectorBasis a_;
  SectorBasis b_;
};

}  // namespace hklab
