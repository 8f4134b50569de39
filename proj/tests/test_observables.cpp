#include <doctest.h>

#include <random>

#include "hklab/observables.hpp"
#include "hklab/solve.hpp"
#include "oracles.hpp"

using namespace hklab;

namespace {

std::vector<int> site_map(const LatticeSpace& s) {
  std::vector<int> m(s.dim());
  for (int p = 0; p < s.dim(); ++p) m[p] = s.site_of(p);
  return m;
}

/// Library coefficients of a two-particle state given by pair coefficients.
CVector to_library(const SectorBasis& basis, const oracle::TwoFermions& tf, const CVector& c) {
  CVector out = CVector::Zero(basis.dim());
  for (std::size_t k = 0; k < tf.pairs.size(); ++k) {
    const auto [p, q] = tf.pairs[k];
    out(*basis.index_of((Mask{1} << p) | (Mask{1} << q))) = c(static_cast<int>(k));
  }
  return out;
}

/// a+_phi a+_chi |0> for orbitals on the one-body space.
CVector slater(const SectorBasis& basis, const CVector& phi, const CVector& chi) {
  CVector out(basis.dim());
  for (int i = 0; i < basis.dim(); ++i) {
    const Mask m = basis[i];
    const int p = std::countr_zero(m);
    const int q = 63 - std::countl_zero(m);
    out(i) = phi(p) * chi(q) - phi(q) * chi(p);
  }
  return out;
}

}  // namespace

TEST_CASE("localized particle") {
  const LatticeSpace s(5, 2, Boundary::dirichlet, 0.5);
  const SectorBasis b = build_sector_basis(s, 1);
  CVector psi = CVector::Zero(b.dim());
  psi(*b.index_of(Mask{1} << s.mode(3, 1))) = 1.0;
  const DensityProfile rho = density(b, QuantumState::pure(psi));
  RVector expect = RVector::Zero(5);
  expect(3) = 2.0;
  CHECK((rho.values - expect).cwiseAbs().maxCoeff() == 0.0);
  CHECK(rho.mass() == 1.0);
  CHECK_THROWS_AS(pair_density(b, QuantumState::pure(psi)), InvalidArgument);
}

TEST_CASE("slater determinant: density and 1RDM") {
  std::mt19937_64 rng(1);
  const LatticeSpace s(4, 2, Boundary::periodic, 0.8);
  const SectorBasis b = build_sector_basis(s, 2);
  CMatrix orb = oracle::random_hermitian(8, rng);
  Eigen::HouseholderQR<CMatrix> qr(orb);
  const CMatrix qm = qr.householderQ();
  const CVector phi = qm.col(0), chi = qm.col(1);
  const QuantumState st = QuantumState::pure(slater(b, phi, chi));
  RVector expect = RVector::Zero(4);
  for (int p = 0; p < 8; ++p) expect(s.site_of(p)) += std::norm(phi(p)) + std::norm(chi(p));
  CHECK((density(b, st).values - expect / 0.8).cwiseAbs().maxCoeff() <= 1e-12);
  const CMatrix proj = phi * phi.adjoint() + chi * chi.adjoint();
  const OneRDM g = one_rdm(b, st);
  CHECK((g.matrix - proj).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((g.site_density(s) - density(b, st).values).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("random two-particle states match first-quantized marginals") {
  std::mt19937_64 rng(2);
  const double h = 0.7;
  const LatticeSpace s(4, 2, Boundary::dirichlet, h);
  const SectorBasis b = build_sector_basis(s, 2);
  const auto tf = oracle::two_fermions(CMatrix::Zero(8, 8), site_map(s), RMatrix::Zero(4, 4));
  const Complex I(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const CVector c = oracle::random_state(static_cast<int>(tf.pairs.size()), rng);
    const CMatrix psi = oracle::amplitude(tf, c);
    const QuantumState st = QuantumState::pure(to_library(b, tf, c));
    CHECK((density(b, st).values - oracle::density(psi, site_map(s), 4, h)).cwiseAbs().maxCoeff() <= 1e-12);
    const PairDensity r2 = pair_density(b, st);
    CHECK((r2.values - oracle::pair_density(psi, site_map(s), 4, h)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((r2.values - r2.values.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((r2.marginal() - density(b, st).values).cwiseAbs().maxCoeff() <= 1e-10);
    const OneRDM g = one_rdm(b, st);
    CHECK((g.matrix - oracle::one_rdm(psi)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(std::abs(g.matrix.trace().real() - 2.0) <= 1e-10);
    const RVector occ = g.occupations();
    CHECK(occ.minCoeff() >= -1e-10);
    CHECK(occ.maxCoeff() <= 1.0 + 1e-10);
    // Spin-resolved marginal: m_k(x) = N sum conj Psi(x s, r) sigma^k_st Psi(x t, r) / h.
    const Magnetization m = magnetization(b, st);
    const auto& pauli = pauli_matrices();
    for (int x = 0; x < 4; ++x)
      for (int k = 0; k < 3; ++k) {
        Complex acc = 0.0;
        for (int r = 0; r < 8; ++r)
          for (int si = 0; si < 2; ++si)
            for (int ti = 0; ti < 2; ++ti)
              acc += std::conj(psi(s.mode(x, si), r)) * pauli[k](si, ti) * psi(s.mode(x, ti), r);
        CHECK(std::abs(m.values[x][k] - 2.0 * acc.real() / h) <= 1e-12);
      }
    const RVector rho = density(b, st).values;
    for (int x = 0; x < 4; ++x) {
      const auto& mv = m.values[x];
      CHECK(std::sqrt(mv[0] * mv[0] + mv[1] * mv[1] + mv[2] * mv[2]) <= rho(x) + 1e-10);
    }
    (void)I;
  }
}

TEST_CASE("pair density special states") {
  std::mt19937_64 rng(3);
  const LatticeSpace s1(5, 1);
  const SectorBasis b1 = build_sector_basis(s1, 2);
  const PairDensity same = pair_density(b1, QuantumState::pure(oracle::random_state(b1.dim(), rng)));
  CHECK(same.values.diagonal().cwiseAbs().maxCoeff() == 0.0);

  const LatticeSpace s(4, 2);
  const SectorBasis b = build_sector_basis(s, 2);
  CVector phi = CVector::Zero(8), chi = CVector::Zero(8);
  const CVector fs = oracle::random_state(4, rng), cs = oracle::random_state(4, rng);
  for (int x = 0; x < 4; ++x) {
    phi(s.mode(x, 0)) = fs(x);
    chi(s.mode(x, 1)) = cs(x);
  }
  const PairDensity r2 = pair_density(b, QuantumState::pure(slater(b, phi, chi)));
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 4; ++y) {
      const double expect = 0.5 * (std::norm(fs(x)) * std::norm(cs(y)) + std::norm(cs(x)) * std::norm(fs(y)));
      CHECK(std::abs(r2.values(x, y) - expect) <= 1e-12);
    }
}

TEST_CASE("magnetization of spin eigenstates") {
  const LatticeSpace s(3, 2);
  const SectorBasis b = build_sector_basis(s, 2);
  std::mt19937_64 rng(4);
  const CVector f = oracle::random_state(3, rng), g0 = oracle::random_state(3, rng);
  Eigen::HouseholderQR<CMatrix> qr((CMatrix(3, 2) << f, g0).finished());
  const CMatrix q = qr.householderQ();
  for (int pattern = 0; pattern < 2; ++pattern) {
    CVector phi = CVector::Zero(6), chi = CVector::Zero(6);
    for (int x = 0; x < 3; ++x) {
      const double a = 1.0, c = pattern ? 1.0 / std::sqrt(2.0) : 0.0;
      const double up = pattern ? c : a;
      const double dn = pattern ? c : 0.0;
      phi(s.mode(x, 0)) = q(x, 0) * up;
      phi(s.mode(x, 1)) = q(x, 0) * dn;
      chi(s.mode(x, 0)) = q(x, 1) * up;
      chi(s.mode(x, 1)) = q(x, 1) * dn;
    }
    const QuantumState st = QuantumState::pure(slater(b, phi, chi));
    const Magnetization m = magnetization(b, st);
    const RVector rho = density(b, st).values;
    for (int x = 0; x < 3; ++x) {
      const Vec3 expect = pattern ? Vec3{rho(x), 0.0, 0.0} : Vec3{0.0, 0.0, rho(x)};
      for (int k = 0; k < 3; ++k) CHECK(std::abs(m.values[x][k] - expect[k]) <= 1e-12);
    }
  }
  CHECK_THROWS_AS(magnetization(build_sector_basis(LatticeSpace(3, 1), 1),
                                QuantumState::pure(CVector::Unit(3, 0))),
                  InvalidArgument);
}

TEST_CASE("coupling identities on ground states") {
  std::mt19937_64 rng(5);
  const double h = 0.6;
  const LatticeSpace s(5, 2, Boundary::periodic, h);
  const SectorBasis b = build_sector_basis(s, 2);
  const ManyBodyOperator hm = assemble_hamiltonian(
      b, kinetic_operator(s) + local_potential_operator(s, oracle::random_vector(5, rng)) +
             zeeman_operator(s, MagneticField::uniform(5, {0.2, -0.1, 0.3})),
      PairPotential::from_displacement(s, oracle::random_vector(s.num_distances(), rng)));
  const QuantumState st = QuantumState::pure(ground_state(hm).vector());
  const DensityProfile rho = density(b, st);
  const PairDensity r2 = pair_density(b, st);
  const OneRDM gamma = one_rdm(b, st);
  const Magnetization m = magnetization(b, st);
  for (int k = 0; k < 20; ++k) {
    const RVector v = oracle::random_vector(5, rng);
    CHECK(std::abs(st.expectation(assemble_one_body(b, local_potential_operator(s, v))) - rho.pairing(v)) <= 1e-10);
    RMatrix w = RMatrix::Zero(5, 5);
    for (int x = 0; x < 5; ++x)
      for (int y = x; y < 5; ++y) w(x, y) = w(y, x) = oracle::random_vector(1, rng)(0);
    CHECK(std::abs(st.expectation(assemble_pair(b, PairPotential(w))) - r2.pairing(w)) <= 1e-10);
    MagneticField f = MagneticField::zero(5);
    for (auto& bx : f.values)
      for (double& c : bx) c = oracle::random_vector(1, rng)(0);
    CHECK(std::abs(st.expectation(assemble_one_body(b, zeeman_operator(s, f))) - m.pairing(f)) <= 1e-10);
    const CMatrix g = oracle::random_hermitian(10, rng);
    CHECK(std::abs(st.expectation(assemble_one_body(b, nonlocal_operator(s, g))) - gamma.pairing(g)) <= 1e-10);
  }
}

TEST_CASE("non-interacting 1RDM is a projector, interacting is not") {
  std::mt19937_64 rng(6);
  const LatticeSpace s(6, 1);
  const SectorBasis b = build_sector_basis(s, 2);
  const OneBodyOperator one = kinetic_operator(s) + local_potential_operator(s, oracle::random_vector(6, rng));
  const auto occupations = [&](const std::optional<PairPotential>& pair) {
    return one_rdm(b, QuantumState::pure(ground_state(assemble_hamiltonian(b, one, pair)).vector())).occupations();
  };
  const RVector free = occupations(std::nullopt);
  int high = 0, low = 0;
  for (double o : free) {
    high += o > 1.0 - 1e-8;
    low += o < 1e-8;
  }
  CHECK(high == 2);
  CHECK(low == 4);
  RVector w(s.num_distances());
  w << 3.0, 2.0, 1.0, 0.5, 0.25, 0.1;
  const RVector inter = occupations(PairPotential::from_displacement(s, w));
  bool fractional = false;
  for (double o : inter) fractional |= (o > 1e-6 && o < 1.0 - 1e-6);
  CHECK(fractional);
  CHECK(inter.minCoeff() > 0.0);
  CHECK(inter.maxCoeff() < 1.0);
}

TEST_CASE("entropy") {
  CHECK(entropy(QuantumState::pure(CVector::Unit(4, 2))) == 0.0);
  for (int k : {1, 2, 5}) {
    const QuantumState mixed = QuantumState::mixed(std::vector<double>(k, 1.0 / k), CMatrix::Identity(k, k));
    CHECK(std::abs(entropy(mixed) - std::log(k)) <= 1e-14);
  }
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(6);
  double sum = 0.0;
  for (double& x : p) sum += (x = u(rng));
  for (double& x : p) x /= sum;
  Eigen::HouseholderQR<CMatrix> qr(oracle::random_hermitian(6, rng));
  const CMatrix vecs = qr.householderQ();
  const QuantumState st = QuantumState::mixed(p, vecs);
  const RVector ev = oracle::sorted_eigenvalues(st.density_matrix());
  double ref = 0.0;
  for (double x : ev)
    if (x > 1e-300) ref -= x * std::log(x);
  CHECK(std::abs(entropy(st) - ref) <= 1e-12);
  CHECK_THROWS_AS(entropy(std::vector<double>{0.5, 0.6}), InvalidArgument);
  CHECK_THROWS_AS(entropy(std::vector<double>{1.1, -0.1}), InvalidArgument);
}

TEST_CASE("mixed-state observables are convex combinations") {
  std::mt19937_64 rng(8);
  const LatticeSpace s(3, 2);
  const SectorBasis b = build_sector_basis(s, 2);
  Eigen::HouseholderQR<CMatrix> qr(oracle::random_hermitian(b.dim(), rng));
  const CMatrix q = qr.householderQ();
  const std::vector<double> p = {0.5, 0.3, 0.2};
  const QuantumState mixed = QuantumState::mixed(p, q.leftCols(3));
  RVector rho = RVector::Zero(3);
  RMatrix r2 = RMatrix::Zero(3, 3);
  CMatrix g = CMatrix::Zero(6, 6);
  for (int k = 0; k < 3; ++k) {
    const QuantumState pk = QuantumState::pure(q.col(k));
    rho += p[k] * density(b, pk).values;
    r2 += p[k] * pair_density(b, pk).values;
    g += p[k] * one_rdm(b, pk).matrix;
  }
  CHECK((density(b, mixed).values - rho).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((pair_density(b, mixed).values - r2).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((one_rdm(b, mixed).matrix - g).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("two-species pair functions") {
  std::mt19937_64 rng(9);
  const double h = 0.9;
  const LatticeSpace s(4, 1, Boundary::dirichlet, h);
  TwoSpeciesSpec one;
  const TwoSpeciesBasis b11(s, 1, 1);
  const CVector c = oracle::random_state(16, rng);
  const SpeciesPairData d = species_pair_functions(b11, QuantumState::pure(c), one);
  CHECK(d.aa.cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.bb.cwiseAbs().maxCoeff() == 0.0);
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 4; ++y) CHECK(std::abs(d.ab(x, y) - std::norm(c(x * 4 + y)) / (h * h)) <= 1e-12);

  const CVector fa = oracle::random_state(4, rng), fb = oracle::random_state(4, rng);
  CVector prod(16);
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 4; ++y) prod(x * 4 + y) = fa(x) * fb(y);
  const SpeciesPairData pd = species_pair_functions(b11, QuantumState::pure(prod), one);
  const RMatrix outer = (fa.cwiseAbs2() * fb.cwiseAbs2().transpose()) / (h * h);
  CHECK((pd.ab - outer).cwiseAbs().maxCoeff() <= 1e-12);

  // Two of each species: mass checks and energy identities.
  const LatticeSpace s5(5, 1, Boundary::periodic, h);
  TwoSpeciesSpec spec;
  spec.num_a = 2;
  spec.num_b = 2;
  spec.alpha = 0.8;
  spec.v_a = oracle::random_vector(5, rng);
  spec.v_b = oracle::random_vector(5, rng);
  spec.w_a = oracle::random_vector(s5.num_distances(), rng);
  spec.w_b = oracle::random_vector(s5.num_distances(), rng);
  spec.w_ab = oracle::random_vector(s5.num_distances(), rng);
  const TwoSpeciesBasis b22(s5, 2, 2);
  const ManyBodyOperator hm = assemble_two_species(spec, s5);
  const QuantumState st = QuantumState::pure(ground_state(hm).vector());
  const SpeciesPairData sp = species_pair_functions(b22, st, spec);
  CHECK(std::abs(sp.aa.sum() * h * h - 1.0) <= 1e-9);
  CHECK(std::abs(sp.bb.sum() * h * h - 1.0) <= 1e-9);
  CHECK(std::abs(sp.ab.sum() * h * h - 4.0) <= 1e-9);
  CHECK((sp.aa - sp.aa.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(sp.ab.minCoeff() >= 0.0);
  // Interaction energies from the pair functions against operator differences.
  const auto energy_of = [&](TwoSpeciesSpec t) { return st.expectation(assemble_two_species(t, s5)); };
  TwoSpeciesSpec bare = spec;
  bare.w_a.setZero();
  bare.w_b.setZero();
  bare.w_ab.setZero();
  const double e_bare = energy_of(bare);
  const auto kernel = [&](const RVector& w) { return PairPotential::from_displacement(s5, w).kernel(); };
  TwoSpeciesSpec only = bare;
  only.w_a = spec.w_a;
  CHECK(std::abs(energy_of(only) - e_bare - (kernel(spec.w_a).array() * sp.aa.array()).sum() * h * h) <= 1e-9);
  only = bare;
  only.w_b = spec.w_b;
  CHECK(std::abs(energy_of(only) - e_bare - (kernel(spec.w_b).array() * sp.bb.array()).sum() * h * h) <= 1e-9);
  only = bare;
  only.w_ab = spec.w_ab;
  CHECK(std::abs(energy_of(only) - e_bare - (kernel(spec.w_ab).array() * sp.ab.array()).sum() * h * h) <= 1e-9);
  // Potential energies via the cross marginals.
  TwoSpeciesSpec no_v = bare;
  no_v.v_a.setZero();
  no_v.v_b.setZero();
  const double e_pot = e_bare - energy_of(no_v);
  const double via_marginals = (spec.v_a.dot(sp.density_a(2)) + spec.v_b.dot(sp.density_b(2))) * h;
  CHECK(std::abs(e_pot - via_marginals) <= 1e-9);
  TwoSpeciesSpec wrong = spec;
  wrong.num_a = 1;
  CHECK_THROWS_AS(species_pair_functions(b22, st, wrong), InvalidArgument);
}
