#include "hklab/lattice.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace hklab {

double hermiticity_defect(const CMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

double operator_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

LatticeSpace::LatticeSpace(int num_sites, int spin_dim, Boundary boundary, double spacing)
    : num_sites_(num_sites), spin_dim_(spin_dim), boundary_(boundary), spacing_(spacing) {
  if (num_sites < 2) throw InvalidArgument("LatticeSpace: need at least 2 sites");
  if (spin_dim < 1) throw InvalidArgument("LatticeSpace: spin dimension must be positive");
  if (!(spacing > 0.0) || !std::isfinite(spacing))
    throw InvalidArgument("LatticeSpace: spacing must be positive");
  if (num_sites * spin_dim > 64)
    throw InvalidArgument("LatticeSpace: at most 64 one-body modes are supported");
}

int LatticeSpace::distance(int x, int y) const {
  int d = std::abs(x - y);
  if (boundary_ == Boundary::periodic) d = std::min(d, num_sites_ - d);
  return d;
}

int LatticeSpace::num_distances() const {
  return boundary_ == Boundary::periodic ? num_sites_ / 2 + 1 : num_sites_;
}

OneBodyOperator::OneBodyOperator(LatticeSpace space, CMatrix matrix, OperatorKind kind)
    : space_(space), matrix_(std::move(matrix)), kind_(kind) {
  const int d = space_.dim();
  if (matrix_.rows() != d || matrix_.cols() != d)
    throw InvalidArgument("OneBodyOperator: matrix is " + std::to_string(matrix_.rows()) + "x" +
                          std::to_string(matrix_.cols()) + ", expected " + std::to_string(d) +
                          "x" + std::to_string(d));
  if (!matrix_.allFinite()) throw InvalidArgument("OneBodyOperator: non-finite entries");
  if (hermiticity_defect(matrix_) > kHermitianTol)
    throw InvalidArgument("OneBodyOperator: matrix is not Hermitian");
}

OneBodyOperator OneBodyOperator::operator+(const OneBodyOperator& other) const {
  if (!(space_ == other.space_)) throw InvalidArgument("OneBodyOperator: space mismatch");
  const OperatorKind kind = kind_ == other.kind_ ? kind_ : OperatorKind::composite;
  return {space_, matrix_ + other.matrix_, kind};
}

OneBodyOperator OneBodyOperator::operator-(const OneBodyOperator& other) const {
  return *this + other.scaled(-1.0);
}

OneBodyOperator OneBodyOperator::scaled(double factor) const {
  return {space_, matrix_ * factor, kind_};
}

MagneticField MagneticField::zero(int num_sites) { return uniform(num_sites, {0.0, 0.0, 0.0}); }

MagneticField MagneticField::uniform(int num_sites, const Vec3& b) {
  return MagneticField{std::vector<Vec3>(static_cast<std::size_t>(num_sites), b)};
}

double MagneticField::magnitude(int site) const {
  const Vec3& b = values.at(static_cast<std::size_t>(site));
  return std::sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2]);
}

MagneticField operator-(const MagneticField& a, const MagneticField& b) {
  if (a.values.size() != b.values.size()) throw InvalidArgument("MagneticField: size mismatch");
  MagneticField out = a;
  for (std::size_t i = 0; i < out.values.size(); ++i)
    for (int k = 0; k < 3; ++k) out.values[i][k] -= b.values[i][k];
  return out;
}

const std::array<Eigen::Matrix2cd, 3>& pauli_matrices() {
  static const std::array<Eigen::Matrix2cd, 3> sigma = [] {
    const Complex i(0.0, 1.0);
    std::array<Eigen::Matrix2cd, 3> s;
    s[0] << 0.0, 1.0, 1.0, 0.0;
    s[1] << 0.0, -i, i, 0.0;
    s[2] << 1.0, 0.0, 0.0, -1.0;
    return s;
  }();
  return sigma;
}

Eigen::Matrix2cd zeeman_block(const Vec3& b) {
  const auto& s = pauli_matrices();
  return b[0] * s[0] + b[1] * s[1] + b[2] * s[2];
}

OneBodyOperator kinetic_operator(const LatticeSpace& space) {
  const int L = space.num_sites();
  const int q = space.spin_dim();
  const double scale = 1.0 / (space.spacing() * space.spacing());
  CMatrix k = CMatrix::Zero(space.dim(), space.dim());
  for (int x = 0; x < L; ++x) {
    for (int s = 0; s < q; ++s) {
      const int p = space.mode(x, s);
      k(p, p) += 2.0 * scale;
      for (int nb : {x - 1, x + 1}) {
        if (nb < 0 || nb >= L) {
          if (space.boundary() == Boundary::dirichlet) continue;
          nb = (nb + L) % L;
        }
        k(p, space.mode(nb, s)) -= scale;
      }
    }
  }
  return {space, std::move(k), OperatorKind::kinetic};
}

OneBodyOperator local_potential_operator(const LatticeSpace& space, std::span<const double> v) {
  if (static_cast<int>(v.size()) != space.num_sites())
    throw InvalidArgument("local_potential_operator: potential has " + std::to_string(v.size()) +
                          " entries, lattice has " + std::to_string(space.num_sites()) + " sites");
  CMatrix m = CMatrix::Zero(space.dim(), space.dim());
  for (int x = 0; x < space.num_sites(); ++x)
    for (int s = 0; s < space.spin_dim(); ++s) m(space.mode(x, s), space.mode(x, s)) = v[x];
  return {space, std::move(m), OperatorKind::local_potential};
}

OneBodyOperator local_potential_operator(const LatticeSpace& space, const RVector& v) {
  return local_potential_operator(space, std::span<const double>(v.data(), v.size()));
}

OneBodyOperator zeeman_operator(const LatticeSpace& space, const MagneticField& field) {
  if (space.spin_dim() != 2) throw InvalidArgument("zeeman_operator: requires spin dimension 2");
  if (field.num_sites() != space.num_sites())
    throw InvalidArgument("zeeman_operator: field size does not match lattice");
  CMatrix m = CMatrix::Zero(space.dim(), space.dim());
  for (int x = 0; x < space.num_sites(); ++x) {
    for (double c : field.values[x])
      if (!std::isfinite(c)) throw InvalidArgument("zeeman_operator: non-finite field");
    m.block<2, 2>(space.mode(x, 0), space.mode(x, 0)) = zeeman_block(field.values[x]);
  }
  return {space, std::move(m), OperatorKind::zeeman};
}

OneBodyOperator nonlocal_operator(const LatticeSpace& space, const CMatrix& kernel) {
  return {space, kernel, OperatorKind::nonlocal};
}

std::vector<double> zeeman_spectrum_formula(const MagneticField& field,
                                            std::span<const int> occupied_sites) {
  const std::size_t n = occupied_sites.size();
  if (n == 0) throw InvalidArgument("zeeman_spectrum_formula: need at least one particle");
  if (n > 24) throw InvalidArgument("zeeman_spectrum_formula: too many particles");
  std::vector<double> mags;
  mags.reserve(n);
  for (int site : occupied_sites) mags.push_back(field.magnitude(site));
  std::vector<double> out(std::size_t{1} << n);
  for (std::size_t pattern = 0; pattern < out.size(); ++pattern) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += ((pattern >> i) & 1U) ? -mags[i] : mags[i];
    out[pattern] = sum;
  }
  return out;
}

}  // namespace hklab
