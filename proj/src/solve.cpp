#include "hklab/solve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace hklab {

namespace {

double window(double energy, double tol) { return tol * std::max(1.0, std::abs(energy)); }

GroundSolution ground_from_spectrum(const RVector& values, const CMatrix& vectors, double tol) {
  GroundSolution g;
  g.energy = values(0);
  int k = 1;
  while (k < values.size() && values(k) - values(0) <= window(values(0), tol)) ++k;
  g.degeneracy = k;
  g.vectors = vectors.leftCols(k);
  g.gap = k < values.size() ? values(k) - values(0) : std::numeric_limits<double>::infinity();
  fix_phase(g.vectors);
  return g;
}

CVector random_vector(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  CVector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = Complex(normal(rng), normal(rng));
  return v;
}

void project_out(CVector& v, const CMatrix& basis, int count) {
  // Two passes of classical Gram-Schmidt.
  for (int pass = 0; pass < 2; ++pass)
    for (int k = 0; k < count; ++k) v -= basis.col(k) * basis.col(k).dot(v);
}

struct RitzPair {
  double value;
  CVector vector;
};

class LanczosSolver {
 public:
  LanczosSolver(const ManyBodyOperator& h, const SolverOptions& options)
      : h_(h), options_(options), rng_(options.seed),
        budget_(static_cast<int>(std::ceil(50.0 * std::sqrt(static_cast<double>(h.dim()))))) {}

  // Lowest eigenpair of h restricted to the orthogonal complement of the
  // first `deflated` columns of `found`.
  RitzPair lowest(const CMatrix& found, int deflated) {
    const int dim = h_.dim();
    const int available = dim - deflated;
    const int m_max = std::max(1, std::min(options_.krylov_dim, available));
    CVector start = random_vector(dim, rng_);
    project_out(start, found, deflated);
    start.normalize();

    while (true) {
      if (restarts_++ >= budget_)
        throw ConvergenceError("ground_state: Lanczos did not converge within " +
                               std::to_string(budget_) + " restarts (dim " + std::to_string(dim) +
                               ")");
      CMatrix v(dim, m_max);
      RVector alpha = RVector::Zero(m_max);
      RVector beta = RVector::Zero(m_max);
      v.col(0) = start;
      int m = 0;
      for (int j = 0; j < m_max; ++j) {
        CVector w = h_.apply(v.col(j));
        alpha(j) = v.col(j).dot(w).real();
        // Deflated and Krylov directions together in each pass; otherwise the
        // Krylov recurrence regrows the deflated components.
        for (int pass = 0; pass < 2; ++pass) {
          for (int k = 0; k < deflated; ++k) w -= found.col(k) * found.col(k).dot(w);
          for (int k = 0; k <= j; ++k) w -= v.col(k) * v.col(k).dot(w);
        }
        m = j + 1;
        if (j + 1 == m_max) break;
        const double b = w.norm();
        if (b < 1e-13) break;  // invariant subspace
        beta(j) = b;
        v.col(j + 1) = w / b;
      }
      RMatrix t = RMatrix::Zero(m, m);
      for (int j = 0; j < m; ++j) {
        t(j, j) = alpha(j);
        if (j + 1 < m) t(j, j + 1) = t(j + 1, j) = beta(j);
      }
      Eigen::SelfAdjointEigenSolver<RMatrix> eig(t);
      CVector x = v.leftCols(m) * eig.eigenvectors().col(0).cast<Complex>();
      project_out(x, found, deflated);
      x.normalize();
      const CVector hx = h_.apply(x);
      const double rayleigh = x.dot(hx).real();
      const double residual = (hx - rayleigh * x).norm();
      if (residual <= 1e-11 * std::max(1.0, std::abs(rayleigh))) return {rayleigh, x};
      start = x;
    }
  }

 private:
  const ManyBodyOperator& h_;
  SolverOptions options_;
  std::mt19937_64 rng_;
  int budget_;
  int restarts_ = 0;
};

GroundSolution lanczos_ground(const ManyBodyOperator& h, const SolverOptions& options) {
  LanczosSolver solver(h, options);
  const int dim = h.dim();
  CMatrix found(dim, std::min(dim, 16));
  std::vector<double> energies;
  RitzPair first = solver.lowest(found, 0);
  found.col(0) = first.vector;
  energies.push_back(first.value);
  double gap = std::numeric_limits<double>::infinity();
  while (static_cast<int>(energies.size()) < dim) {
    const int n = static_cast<int>(energies.size());
    if (n == found.cols()) found.conservativeResize(Eigen::NoChange, std::min(dim, 2 * n));
    RitzPair next = solver.lowest(found, n);
    const double e0 = *std::min_element(energies.begin(), energies.end());
    if (next.value - e0 > window(e0, options.degeneracy_tol)) {
      gap = next.value - e0;
      break;
    }
    found.col(n) = next.vector;
    energies.push_back(next.value);
  }
  GroundSolution g;
  g.degeneracy = static_cast<int>(energies.size());
  g.energy = *std::min_element(energies.begin(), energies.end());
  g.vectors = found.leftCols(g.degeneracy);
  g.gap = gap;
  fix_phase(g.vectors);
  return g;
}

}  // namespace

void fix_phase(CVector& v) {
  if (v.size() == 0) return;
  Eigen::Index k;
  v.cwiseAbs().maxCoeff(&k);
  const double a = std::abs(v(k));
  if (a == 0.0) return;
  v *= std::conj(v(k)) / a;
  v(k) = Complex(std::abs(v(k)), 0.0);
}

void fix_phase(CMatrix& vectors) {
  for (int c = 0; c < vectors.cols(); ++c) {
    CVector col = vectors.col(c);
    fix_phase(col);
    vectors.col(c) = col;
  }
}

GroundSolution ground_state(const ManyBodyOperator& h, const SolverOptions& options) {
  if (h.dim() == 0) throw InvalidArgument("ground_state: empty operator");
  const bool dense = options.kind == SolverKind::dense ||
                     (options.kind == SolverKind::automatic && h.dim() <= kDenseLimit);
  if (dense) {
    const Spectrum s = full_spectrum(h);
    return ground_from_spectrum(s.values, s.vectors, options.degeneracy_tol);
  }
  return lanczos_ground(h, options);
}

Spectrum full_spectrum(const CMatrix& h) {
  if (h.rows() > kDenseLimit)
    throw InvalidArgument("full_spectrum: dimension " + std::to_string(h.rows()) +
                          " exceeds dense limit " + std::to_string(kDenseLimit));
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(h);
  if (eig.info() != Eigen::Success) throw ConvergenceError("full_spectrum: eigensolver failed");
  Spectrum s{eig.eigenvalues(), eig.eigenvectors()};
  fix_phase(s.vectors);
  return s;
}

Spectrum full_spectrum(const ManyBodyOperator& h) {
  if (h.dim() > kDenseLimit)
    throw InvalidArgument("full_spectrum: dimension " + std::to_string(h.dim()) +
                          " exceeds dense limit " + std::to_string(kDenseLimit));
  return full_spectrum(h.dense());
}

ZeroReport check_nonvanishing(const CVector& psi, double zero_tol) {
  ZeroReport r;
  r.min_abs = psi.size() ? psi.cwiseAbs().minCoeff() : 0.0;
  for (int i = 0; i < psi.size(); ++i)
    if (std::abs(psi(i)) <= zero_tol) r.zero_indices.push_back(i);
  r.zero_count = static_cast<int>(r.zero_indices.size());
  return r;
}

}  // namespace hklab
