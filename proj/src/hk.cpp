#include "hklab/hk.hpp"

#include <bit>
#include <cmath>
#include <limits>

namespace hklab {

namespace {

void require_family(const GroundSystem& a, const GroundSystem& b) {
  if (a.num_particles != b.num_particles || a.v.size() != b.v.size() ||
      a.density.values.size() != b.density.values.size() ||
      a.density.spacing != b.density.spacing)
    throw InvalidArgument("hk: systems belong to different families");
}

double semimetric(const RVector& v1, const RVector& v2, const DensityProfile& r1,
                  const DensityProfile& r2) {
  return -(v1 - v2).dot(r1.values - r2.values) * r1.spacing;
}

}  // namespace

std::string to_string(Conclusion c) {
  switch (c) {
    case Conclusion::potentials_equal_up_to_constant: return "potentials_equal_up_to_constant";
    case Conclusion::constraint_holds: return "constraint_holds";
    case Conclusion::violated: return "violated";
    case Conclusion::flagged_zero_state: return "flagged_zero_state";
  }
  return "unknown";
}

GroundSystem solve_system(const LatticeSpace& space, int num_particles, const RVector& v,
                          const std::optional<PairPotential>& pair,
                          const SolverOptions& options) {
  const SectorBasis basis(space, num_particles);
  const OneBodyOperator one = kinetic_operator(space) + local_potential_operator(space, v);
  const GroundSolution g = ground_state(assemble_hamiltonian(basis, one, pair), options);
  GroundSystem s;
  s.v = v;
  s.energy = g.energy;
  s.num_particles = num_particles;
  s.gap = g.gap;
  s.degeneracy = g.degeneracy;
  for (int k = 0; k < g.degeneracy; ++k)
    s.ground_densities.push_back(density(basis, QuantumState::pure(g.vector(k))));
  s.density = s.ground_densities.front();
  return s;
}

double hk_semimetric(const GroundSystem& a, const GroundSystem& b) {
  require_family(a, b);
  return semimetric(a.v, b.v, a.density, b.density);
}

double hk_semimetric_worst(const GroundSystem& a, const GroundSystem& b) {
  require_family(a, b);
  const auto& da = a.ground_densities.empty() ? std::vector{a.density} : a.ground_densities;
  const auto& db = b.ground_densities.empty() ? std::vector{b.density} : b.ground_densities;
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& ra : da)
    for (const auto& rb : db) worst = std::min(worst, semimetric(a.v, b.v, ra, rb));
  return worst;
}

std::pair<double, double> variational_slacks(const GroundSystem& a, const GroundSystem& b) {
  require_family(a, b);
  const double h = a.density.spacing;
  const RVector dv = a.v - b.v;
  return {dv.dot(b.density.values) * h - (a.energy - b.energy),
          -dv.dot(a.density.values) * h - (b.energy - a.energy)};
}

HKReport verify_constancy(const SectorBasis& basis, const CVector& psi, const RVector& v1,
                          const RVector& v2, double e1, double e2, double tol) {
  const LatticeSpace& space = basis.space();
  if (psi.size() != basis.dim()) throw InvalidArgument("verify_constancy: state size mismatch");
  if (v1.size() != space.num_sites() || v2.size() != space.num_sites())
    throw InvalidArgument("verify_constancy: potential size mismatch");
  HKReport r;
  const int n = basis.num_particles();
  r.constant = (e1 - e2) / n;
  const ZeroReport zeros = check_nonvanishing(psi);
  r.zero_count = zeros.zero_count;
  const RVector dv = v1 - v2;
  r.details.resize(basis.dim());
  for (int i = 0; i < basis.dim(); ++i) {
    double s = e2 - e1;
    for (Mask m = basis[i]; m != 0; m &= m - 1) s += dv(space.site_of(std::countr_zero(m)));
    r.details(i) = s;
  }
  r.max_residual = r.details.cwiseAbs().maxCoeff();
  r.lhs_quantity = r.max_residual;
  if (zeros.zero_count > 0)
    r.conclusion = Conclusion::flagged_zero_state;
  else if (r.max_residual <= tol)
    r.conclusion = Conclusion::potentials_equal_up_to_constant;
  else
    r.conclusion = Conclusion::violated;
  return r;
}

PairDecomposition decompose_pair_potential(const LatticeSpace& space, const RMatrix& kernel,
                                           int num_particles) {
  const int L = space.num_sites();
  if (num_particles < 2) throw InvalidArgument("decompose_pair_potential: needs N >= 2");
  if (kernel.rows() != L || kernel.cols() != L)
    throw InvalidArgument("decompose_pair_potential: kernel must be L x L");
  if ((kernel - kernel.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw InvalidArgument("decompose_pair_potential: kernel is not symmetric");
  const int nd = space.num_distances();
  const int rows = L * (L + 1) / 2;
  const double c = 1.0 / (num_particles - 1);
  RMatrix a = RMatrix::Zero(rows, L + nd);
  RVector rhs(rows);
  int r = 0;
  for (int x = 0; x < L; ++x)
    for (int y = x; y < L; ++y, ++r) {
      a(r, x) += c;
      a(r, y) += c;
      a(r, L + space.distance(x, y)) = 1.0;
      rhs(r) = kernel(x, y);
    }
  Eigen::JacobiSVD<RMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  const RVector sol = svd.solve(rhs);
  PairDecomposition out;
  out.null_space_dim = static_cast<int>(a.cols()) - static_cast<int>(svd.rank());
  out.v = sol.head(L);
  out.w = sol.tail(nd);
  const double mean = out.v.mean();
  out.v.array() -= mean;
  out.w.array() += 2.0 * mean * c;
  out.residual = (a * sol - rhs).cwiseAbs().maxCoeff();
  return out;
}

bool ChiField::consistent() const {
  for (std::size_t x = 0; x < violated.size(); ++x)
    if (violated[x]) return false;
  if (implies_equal_fields)
    for (bool m : masked)
      if (!m) return false;
  return true;
}

ChiField spin_constraint_chi(const SpinSystem& a, const SpinSystem& b, double mask_threshold) {
  if (a.num_particles != b.num_particles || a.v.size() != b.v.size() ||
      a.field.num_sites() != b.field.num_sites() ||
      a.field.num_sites() != static_cast<int>(a.v.size()))
    throw InvalidArgument("spin_constraint_chi: systems belong to different families");
  const int n = a.num_particles;
  const int L = static_cast<int>(a.v.size());
  const MagneticField db = a.field - b.field;
  double pairing = 0.0;
  for (int x = 0; x < L; ++x)
    for (int k = 0; k < 3; ++k)
      pairing += db.values[x][k] *
                 (a.magnetization.values[x][k] - b.magnetization.values[x][k]);
  pairing *= a.magnetization.spacing;
  if (std::abs(pairing) > 1e-8)
    throw HypothesisError("spin_constraint_chi: (B1 - B2).(m1 - m2) pairing is " +
                          std::to_string(pairing) + ", constraint claims nothing");
  ChiField chi;
  chi.hypothesis_pairing = pairing;
  chi.raw = RVector::Zero(L);
  chi.snapped = RVector::Zero(L);
  chi.snap_error = RVector::Zero(L);
  chi.masked.assign(L, false);
  chi.violated.assign(L, false);
  double max_rhs = 0.0;
  for (int x = 0; x < L; ++x) {
    const double rhs = (a.energy - b.energy) / n + b.v(x) - a.v(x);
    max_rhs = std::max(max_rhs, std::abs(rhs));
    const double mag = db.magnitude(x);
    if (mag <= mask_threshold) {
      chi.masked[x] = true;
      chi.violated[x] = std::abs(rhs) > 1e-7;
      continue;
    }
    const double raw = rhs / mag;
    const double k = std::clamp(std::round((raw + 1.0) * n / 2.0), 0.0, static_cast<double>(n));
    chi.raw(x) = raw;
    chi.snapped(x) = -1.0 + 2.0 * k / n;
    chi.snap_error(x) = std::abs(raw - chi.snapped(x));
    chi.violated[x] = chi.snap_error(x) > 0.25 / n;
    chi.max_snap_error = std::max(chi.max_snap_error, chi.snap_error(x));
  }
  chi.implies_equal_fields = (n % 2 == 1) && max_rhs <= 1e-8;
  return chi;
}

ThermalSystem thermal_system(const OccupationBasis& basis, const GibbsState& gibbs,
                             const RVector& v) {
  return {v, gibbs.temperature, entropy(gibbs.state), density(basis, gibbs.state),
          gibbs.ensemble};
}

double thermal_semimetric(const ThermalSystem& a, const ThermalSystem& b) {
  if (a.ensemble != b.ensemble) throw InvalidArgument("thermal_semimetric: ensemble mismatch");
  if (a.v.size() != b.v.size() || a.density.values.size() != b.density.values.size())
    throw InvalidArgument("thermal_semimetric: family mismatch");
  if (!(a.temperature > 0.0) || !(b.temperature > 0.0))
    throw InvalidArgument("thermal_semimetric: temperatures must be positive");
  return (a.temperature - b.temperature) * (a.entropy - b.entropy) +
         semimetric(a.v, b.v, a.density, b.density);
}

NonlocalThermalSystem nonlocal_thermal_system(const OccupationBasis& basis,
                                              const GibbsState& gibbs, const OneBodyOperator& g) {
  return {g.matrix(), gibbs.temperature, entropy(gibbs.state), one_rdm(basis, gibbs.state),
          gibbs.ensemble};
}

double nonlocal_thermal_pairing(const NonlocalThermalSystem& a, const NonlocalThermalSystem& b) {
  if (a.ensemble != b.ensemble)
    throw InvalidArgument("nonlocal_thermal_pairing: ensemble mismatch");
  if (a.operator_matrix.rows() != b.operator_matrix.rows() ||
      a.gamma.matrix.rows() != a.operator_matrix.rows() ||
      b.gamma.matrix.rows() != b.operator_matrix.rows())
    throw InvalidArgument("nonlocal_thermal_pairing: dimension mismatch");
  if (!(a.temperature > 0.0) || !(b.temperature > 0.0))
    throw InvalidArgument("nonlocal_thermal_pairing: temperatures must be positive");
  const CMatrix dg = a.operator_matrix - b.operator_matrix;
  const CMatrix dgamma = a.gamma.matrix - b.gamma.matrix;
  return (a.temperature - b.temperature) * (a.entropy - b.entropy) - (dg * dgamma).trace().real();
}

UniquenessReport uniqueness_defect_onebody(const SectorBasis& basis, const OneBodyOperator& g,
                                           double alpha) {
  const LatticeSpace& space = basis.space();
  const OneBodyOperator kin = kinetic_operator(space);
  const OneBodyOperator combined = kin.scaled(alpha) + g;
  const CMatrix many = assemble_one_body(basis, combined).dense();
  UniquenessReport r;
  r.alpha = alpha;
  r.defect = operator_norm(many);
  r.operator_size = operator_norm(g.matrix());
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(kin.matrix(), Eigen::EigenvaluesOnly);
  r.relative_bound_constant = 0.5 * std::abs(alpha) * eig.eigenvalues().maxCoeff();
  r.vanishes = r.defect <= 1e-8;
  r.conclusion = alpha == 0.0 && r.operator_size <= 1e-8;
  if (!r.vanishes) {
    r.explanation = "relation fails on the sector: defect " + std::to_string(r.defect);
  } else if (r.conclusion) {
    r.explanation = "relation holds only trivially: alpha = 0 and G = 0";
  } else if (alpha != 0.0) {
    r.explanation =
        "relation cancels on the sector with alpha != 0: the lattice Laplacian is bounded, so "
        "G = alpha Delta satisfies G >= (alpha/2) Delta - c with finite c = " +
        std::to_string(r.relative_bound_constant) +
        "; the continuum argument forcing alpha = 0 needs an unbounded Delta, conclusion rejected";
  } else {
    r.explanation = "sum_i G_i vanishes on this sector although G != 0 (sector too small to "
                    "separate one-body operators), conclusion rejected";
  }
  return r;
}

}  // namespace hklab
