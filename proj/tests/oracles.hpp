#pragma once

// Independent reference computations used by the tests. Nothing here goes
// through the occupation-number machinery of the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "hklab/types.hpp"

namespace oracle {

using hklab::CMatrix;
using hklab::Complex;
using hklab::CVector;
using hklab::RMatrix;
using hklab::RVector;

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// sum_i B(x_i).sigma_i on (C^2)^{otimes N}, explicit Kronecker products.
inline CMatrix zeeman_many_spin(const std::vector<std::array<double, 3>>& b_at_particles) {
  const Complex I(0.0, 1.0);
  const int n = static_cast<int>(b_at_particles.size());
  CMatrix total = CMatrix::Zero(1 << n, 1 << n);
  for (int i = 0; i < n; ++i) {
    const auto& b = b_at_particles[i];
    CMatrix s(2, 2);
    s << b[2], b[0] - I * b[1], b[0] + I * b[1], -b[2];
    CMatrix term = CMatrix::Identity(1, 1);
    for (int k = 0; k < n; ++k) term = kron(term, k == i ? s : CMatrix(CMatrix::Identity(2, 2)));
    total += term;
  }
  return total;
}

/// Two fermions in first quantization. `h` is the D x D one-body matrix, `site`
/// maps a mode to its site, `w` is the site kernel. Returns the Hamiltonian on
/// the antisymmetric subspace in the basis (|pq> - |qp>)/sqrt 2, p < q, which
/// also yields the pair list.
struct TwoFermions {
  CMatrix hamiltonian;
  std::vector<std::pair<int, int>> pairs;
  CMatrix isometry;  // D^2 x dim, columns = antisymmetric basis vectors
};

inline TwoFermions two_fermions(const CMatrix& h, const std::vector<int>& site, const RMatrix& w) {
  const int d = static_cast<int>(h.rows());
  const CMatrix id = CMatrix::Identity(d, d);
  CMatrix full = kron(h, id) + kron(id, h);
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q) full(p * d + q, p * d + q) += w(site[p], site[q]);
  TwoFermions out;
  for (int p = 0; p < d; ++p)
    for (int q = p + 1; q < d; ++q) out.pairs.emplace_back(p, q);
  out.isometry = CMatrix::Zero(d * d, static_cast<int>(out.pairs.size()));
  for (std::size_t k = 0; k < out.pairs.size(); ++k) {
    const auto [p, q] = out.pairs[k];
    out.isometry(p * d + q, static_cast<int>(k)) = 1.0 / std::sqrt(2.0);
    out.isometry(q * d + p, static_cast<int>(k)) = -1.0 / std::sqrt(2.0);
  }
  out.hamiltonian = out.isometry.adjoint() * full * out.isometry;
  return out;
}

/// Full two-particle amplitude Psi(p, q) from the antisymmetric coefficients.
inline CMatrix amplitude(const TwoFermions& tf, const CVector& c) {
  const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(tf.isometry.rows()))));
  const CVector flat = tf.isometry * c;
  CMatrix psi(d, d);
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q) psi(p, q) = flat(p * d + q);
  return psi;
}

/// rho(x) = N sum_{s, r} |Psi(xs, r)|^2 / h for N = 2.
inline RVector density(const CMatrix& psi, const std::vector<int>& site, int sites, double h) {
  RVector rho = RVector::Zero(sites);
  for (int p = 0; p < psi.rows(); ++p)
    for (int q = 0; q < psi.cols(); ++q) rho(site[p]) += 2.0 * std::norm(psi(p, q));
  return rho / h;
}

/// rho2(x, y) = C(2,2) sum_{s,t} |Psi(xs, yt)|^2 / h^2.
inline RMatrix pair_density(const CMatrix& psi, const std::vector<int>& site, int sites, double h) {
  RMatrix r = RMatrix::Zero(sites, sites);
  for (int p = 0; p < psi.rows(); ++p)
    for (int q = 0; q < psi.cols(); ++q) r(site[p], site[q]) += std::norm(psi(p, q));
  return r / (h * h);
}

/// gamma_pq = N sum_r Psi(p, r) conj(Psi(q, r)).
inline CMatrix one_rdm(const CMatrix& psi) { return 2.0 * psi * psi.adjoint(); }

inline RVector sorted_eigenvalues(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues();
}

inline RVector random_vector(int n, std::mt19937_64& rng, double amp = 1.0) {
  std::uniform_real_distribution<double> u(-amp, amp);
  RVector x(n);
  for (int i = 0; i < n; ++i) x(i) = u(rng);
  return x;
}

inline CMatrix random_hermitian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMatrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = Complex(g(rng), g(rng));
  return 0.5 * (a + a.adjoint());
}

inline CVector random_state(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CVector v(n);
  for (int i = 0; i < n; ++i) v(i) = Complex(g(rng), g(rng));
  return v.normalized();
}

/// tr exp(-H/T) by direct eigenvalue summation, shifted by e0: returns ln Z.
inline double log_trace_exp(const std::vector<RVector>& spectra, double t) {
  double e0 = 1e300;
  for (const RVector& s : spectra)
    if (s.size()) e0 = std::min(e0, s.minCoeff());
  double z = 0.0;
  for (const RVector& s : spectra)
    for (int k = 0; k < s.size(); ++k) z += std::exp(-(s(k) - e0) / t);
  return -e0 / t + std::log(z);
}

}  // namespace oracle
