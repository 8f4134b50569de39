#include "hklab/counterexamples.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace hklab {

namespace {

double many_body_norm(const SectorBasis& basis, const OneBodyOperator& diff) {
  if (basis.dim() > kDenseLimit) return operator_norm(diff.matrix());
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(assemble_one_body(basis, diff).dense(),
                                             Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

GilbertResult gilbert_counterexample(int num_particles, const OneBodyOperator& g1,
                                     const GilbertOptions& options) {
  const LatticeSpace& space = g1.space();
  if (num_particles < 1 || num_particles >= space.dim())
    throw InvalidArgument("gilbert_counterexample: needs 1 <= N < D so an unoccupied orbital "
                          "exists");
  const SectorBasis basis(space, num_particles);
  SolverOptions solver;
  solver.kind = SolverKind::dense;
  const GroundSolution gs1 = ground_state(assemble_one_body(basis, g1), solver);
  if (gs1.degeneracy != 1 || !(gs1.gap > 1e-6))
    throw InvalidArgument("gilbert_counterexample: ground state of G1 is degenerate (gap " +
                          std::to_string(gs1.gap) + ")");
  const double eps = options.epsilon.value_or(0.1 * gs1.gap);
  if (!(eps > 0.0)) throw InvalidArgument("gilbert_counterexample: epsilon must be positive");

  Eigen::SelfAdjointEigenSolver<CMatrix> orbitals(g1.matrix());
  const int k = options.perturb_occupied ? num_particles - 1 : num_particles;
  const CVector phi = orbitals.eigenvectors().col(k);
  const OneBodyOperator bump(space, eps * phi * phi.adjoint(), OperatorKind::nonlocal);
  const OneBodyOperator g2 = g1 + bump;

  const GroundSolution gs2 = ground_state(assemble_one_body(basis, g2), solver);
  const CVector psi1 = gs1.vector();
  CVector psi2 = gs2.vector();
  if (gs2.degeneracy > 1) {
    psi2 = gs2.vectors * (gs2.vectors.adjoint() * psi1);
    if (psi2.norm() > 1e-12) psi2.normalize(); else psi2 = gs2.vector();
  }
  const OneRDM gamma1 = one_rdm(basis, QuantumState::pure(psi1));
  const OneRDM gamma2 = one_rdm(basis, QuantumState::pure(psi2));

  GilbertResult r{{}, g1, g2, eps, gs1.gap};
  r.overlap = std::abs(psi1.dot(psi2));
  r.energy_shift = gs2.energy - gs1.energy;
  r.gamma_distance = (gamma1.matrix - gamma2.matrix).cwiseAbs().maxCoeff();
  auto& c = r.certificate;
  c.kind = CounterexampleKind::gilbert_nonlocal;
  c.operator_distance = many_body_norm(basis, bump);
  c.reduced_data_distance = r.gamma_distance;
  c.energies = {gs1.energy, gs2.energy};
  c.verdict = c.operator_distance > 1e-3 && c.reduced_data_distance <= 1e-9 &&
              std::abs(r.energy_shift) <= 1e-10 && r.overlap >= 1.0 - 1e-12;
  return r;
}

CapelleVignaleResult capelle_vignale_pair(const LatticeSpace& space, int num_particles,
                                          const RVector& v,
                                          const std::optional<PairPotential>& pair,
                                          std::optional<double> b_opt) {
  if (space.spin_dim() != 2) throw InvalidArgument("capelle_vignale_pair: requires q = 2");
  const int L = space.num_sites();
  const SectorBasis basis(space, num_particles);
  if (basis.dim() > kDenseLimit)
    throw InvalidArgument("capelle_vignale_pair: sector exceeds dense limit");
  const OneBodyOperator one = kinetic_operator(space) + local_potential_operator(space, v);
  const ManyBodyOperator h1 = assemble_hamiltonian(basis, one, pair);
  const ManyBodyOperator sz = spin_z_operator(basis);
  RVector sz_diag(basis.dim());
  for (int i = 0; i < basis.dim(); ++i) sz_diag(i) = sz.sparse().coeff(i, i).real();

  SolverOptions solver;
  solver.kind = SolverKind::dense;
  const GroundSolution g1 = ground_state(h1, solver);
  const double gap = g1.gap;
  const double b = b_opt.value_or(std::isfinite(gap) ? 1e-3 * gap : 1e-3);
  const double dir = b < 0.0 ? -1.0 : 1.0;

  // Spin eigenbasis of the ground space; keep the s the field favours.
  const CMatrix m = g1.vectors.adjoint() * sz.sparse() * g1.vectors;
  Eigen::SelfAdjointEigenSolver<CMatrix> spin(m);
  const int pick = dir > 0 ? 0 : g1.degeneracy - 1;
  CVector psi1 = g1.vectors * spin.eigenvectors().col(pick);
  psi1.normalize();
  fix_phase(psi1);
  const double s = std::round(spin.eigenvalues()(pick));

  CapelleVignaleResult r;
  r.b = b;
  r.s = s;
  r.gap = gap;
  r.eigen_defect = (sz.apply(psi1) - s * psi1).norm();
  if (r.eigen_defect > 1e-8)
    throw InvalidArgument("capelle_vignale_pair: ground state is not a sum sigma_z eigenvector");

  // Levels of H1 resolved by s; H1 commutes with sum sigma_z.
  std::map<int, std::vector<int>> sectors;
  for (int i = 0; i < basis.dim(); ++i)
    sectors[static_cast<int>(std::lround(sz_diag(i)))].push_back(i);
  const CMatrix h1_dense = h1.dense();
  double threshold = std::numeric_limits<double>::infinity();
  for (const auto& [sk, idx] : sectors) {
    if ((sk - s) * dir >= 0.0) continue;
    const int n = static_cast<int>(idx.size());
    CMatrix block(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) block(i, j) = h1_dense(idx[i], idx[j]);
    Eigen::SelfAdjointEigenSolver<CMatrix> e(block, Eigen::EigenvaluesOnly);
    threshold = std::min(threshold, (e.eigenvalues()(0) - g1.energy) / std::abs(s - sk));
  }
  r.crossing_threshold = threshold;
  if (std::abs(b) >= threshold)
    throw LevelCrossingError("capelle_vignale_pair: |b| = " + std::to_string(std::abs(b)) +
                                 " reaches the level crossing at " + std::to_string(threshold),
                             threshold);

  const ManyBodyOperator h2(h1.sparse() + b * sz.sparse(), h1.blocks(), "H1 + b sum sigma_z");
  const GroundSolution g2 = ground_state(h2, solver);
  CVector psi2 = g2.vector();
  if (g2.degeneracy > 1) {
    psi2 = g2.vectors * (g2.vectors.adjoint() * psi1);
    if (psi2.norm() > 1e-12) psi2.normalize(); else psi2 = g2.vector();
  }
  r.psi1 = psi1;
  r.psi2 = psi2;

  const auto make = [&](const CVector& psi, const MagneticField& field, double energy) {
    const QuantumState st = QuantumState::pure(psi);
    return SpinSystem{v, field, energy, density(basis, st), magnetization(basis, st),
                      num_particles};
  };
  r.system1 = make(psi1, MagneticField::zero(L), g1.energy);
  r.system2 = make(psi2, MagneticField::uniform(L, {0.0, 0.0, b}), g2.energy);
  r.density_distance =
      (r.system1.density.values - r.system2.density.values).cwiseAbs().maxCoeff();
  r.magnetization_distance = r.system1.magnetization.max_abs_difference(r.system2.magnetization);
  r.chi = spin_constraint_chi(r.system1, r.system2);

  double residual = 0.0;
  for (int x = 0; x < L; ++x)
    if (!r.chi.masked[x])
      residual = std::max(residual, std::abs(num_particles * std::abs(b) * r.chi.snapped(x) -
                                             (g1.energy - g2.energy)));
  r.constraint_residual = residual;

  auto& c = r.certificate;
  c.kind = CounterexampleKind::capelle_vignale_spin;
  c.operator_distance = std::abs(b) * sz_diag.cwiseAbs().maxCoeff();
  c.reduced_data_distance = std::max(r.density_distance, r.magnetization_distance);
  c.energies = {g1.energy, g2.energy};
  const double shift_err = std::abs(g2.energy - g1.energy - b * s);
  c.verdict = c.operator_distance > 1e-3 && c.reduced_data_distance <= 1e-9 &&
              shift_err <= 1e-9 * std::max(1.0, std::abs(g1.energy)) && r.chi.consistent();
  return r;
}

}  // namespace hklab
