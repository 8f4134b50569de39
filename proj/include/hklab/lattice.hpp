#pragma once

// One-body space of a 1-D lattice with q spin components and the one-body
// operators built on it. Modes are ordered site-major: mode = site * q + spin,
// with spin 0 = up and spin 1 = down when q = 2.

#include <array>
#include <span>
#include <vector>

#include "hklab/types.hpp"

namespace hklab {

enum class Boundary { dirichlet, periodic };

class LatticeSpace {
 public:
  LatticeSpace(int num_sites, int spin_dim = 2, Boundary boundary = Boundary::dirichlet,
               double spacing = 1.0);

  int num_sites() const { return num_sites_; }
  int spin_dim() const { return spin_dim_; }
  Boundary boundary() const { return boundary_; }
  double spacing() const { return spacing_; }

  /// One-body dimension D = L * q.
  int dim() const { return num_sites_ * spin_dim_; }
  int mode(int site, int spin) const { return site * spin_dim_ + spin; }
  int site_of(int mode) const { return mode / spin_dim_; }
  int spin_of(int mode) const { return mode % spin_dim_; }

  /// Lattice distance |x - y|, wrapped for periodic boundaries.
  int distance(int x, int y) const;
  /// Number of distinct values distance() can take.
  int num_distances() const;

  bool operator==(const LatticeSpace&) const = default;

 private:
  int num_sites_;
  int spin_dim_;
  Boundary boundary_;
  double spacing_;
};

enum class OperatorKind { kinetic, local_potential, zeeman, nonlocal, composite };

/// Hermitian matrix on the one-body space.
class OneBodyOperator {
 public:
  /// Validates shape and Hermiticity (entrywise, kHermitianTol).
  OneBodyOperator(LatticeSpace space, CMatrix matrix, OperatorKind kind);

  const LatticeSpace& space() const { return space_; }
  const CMatrix& matrix() const { return matrix_; }
  OperatorKind kind() const { return kind_; }

  OneBodyOperator operator+(const OneBodyOperator& other) const;
  OneBodyOperator operator-(const OneBodyOperator& other) const;
  OneBodyOperator scaled(double factor) const;

 private:
  LatticeSpace space_;
  CMatrix matrix_;
  OperatorKind kind_;
};

using Vec3 = std::array<double, 3>;

/// Per-site Zeeman field B(x), energy units.
struct MagneticField {
  std::vector<Vec3> values;

  static MagneticField zero(int num_sites);
  static MagneticField uniform(int num_sites, const Vec3& b);
  int num_sites() const { return static_cast<int>(values.size()); }
  double magnitude(int site) const;
};

MagneticField operator-(const MagneticField& a, const MagneticField& b);

/// Pauli matrices sigma^x, sigma^y, sigma^z.
const std::array<Eigen::Matrix2cd, 3>& pauli_matrices();

/// B . sigma for a single site.
Eigen::Matrix2cd zeeman_block(const Vec3& b);

/// (2 psi(x) - psi(x-1) - psi(x+1)) / h^2 tensored with the spin identity.
OneBodyOperator kinetic_operator(const LatticeSpace& space);

OneBodyOperator local_potential_operator(const LatticeSpace& space, std::span<const double> v);
OneBodyOperator local_potential_operator(const LatticeSpace& space, const RVector& v);

/// Block diagonal over sites with B(x) . sigma blocks; requires q = 2.
OneBodyOperator zeeman_operator(const LatticeSpace& space, const MagneticField& field);

OneBodyOperator nonlocal_operator(const LatticeSpace& space, const CMatrix& kernel);

/// All 2^N values sum_i (-1)^{s_i} |B(x_i)|, in sign-pattern order (bit i of
/// the pattern index flips particle i).
std::vector<double> zeeman_spectrum_formula(const MagneticField& field,
                                            std::span<const int> occupied_sites);

/// Operator norm (largest singular value).
double operator_norm(const CMatrix& m);

}  // namespace hklab
