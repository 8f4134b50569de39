#include <doctest.h>

#include <random>

#include "hklab/thermal.hpp"
#include "oracles.hpp"

using namespace hklab;

namespace {

ManyBodyOperator from_dense(const CMatrix& m) {
  SparseCMatrix s = m.sparseView();
  return ManyBodyOperator(s, {0, static_cast<int>(m.rows())}, "test");
}

ManyBodyOperator sector_hamiltonian(const LatticeSpace& s, int n, std::mt19937_64& rng) {
  return assemble_hamiltonian(
      build_sector_basis(s, n), kinetic_operator(s) + local_potential_operator(s, oracle::random_vector(s.num_sites(), rng)),
      PairPotential::from_displacement(s, oracle::random_vector(s.num_distances(), rng)));
}

QuantumState random_mixed(int dim, int rank, std::mt19937_64& rng) {
  Eigen::HouseholderQR<CMatrix> qr(oracle::random_hermitian(dim, rng));
  const CMatrix q = qr.householderQ();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(rank);
  double sum = 0.0;
  for (double& x : p) sum += (x = u(rng));
  for (double& x : p) x /= sum;
  return QuantumState::mixed(p, q.leftCols(rank));
}

}  // namespace

TEST_CASE("temperature limits") {
  std::mt19937_64 rng(1);
  const ManyBodyOperator h = sector_hamiltonian(LatticeSpace(4, 2), 2, rng);
  const GibbsState hot = gibbs_canonical(h, 1e9);
  for (double p : hot.state.weights()) CHECK(std::abs(p - 1.0 / h.dim()) <= 1e-6);
  const Spectrum sp = full_spectrum(h);
  const double gap = sp.values(1) - sp.values(0);
  REQUIRE(gap > 1e-6);
  const GibbsState cold = gibbs_canonical(h, 1e-3 * gap);
  CHECK(*std::max_element(cold.state.weights().begin(), cold.state.weights().end()) >= 1.0 - 1e-6);
  CHECK_THROWS_AS(gibbs_canonical(h, 0.0), InvalidArgument);
  CHECK_THROWS_AS(gibbs_canonical(h, -1.0), InvalidArgument);
}

TEST_CASE("two-level closed form") {
  const double t = 0.37;
  CMatrix m = CMatrix::Zero(2, 2);
  m(1, 1) = std::log(2.0) * t;
  const GibbsState g = gibbs_canonical(from_dense(m), t);
  CHECK(std::abs(g.state.weights()[0] - 2.0 / 3.0) <= 1e-14);
  CHECK(std::abs(g.state.weights()[1] - 1.0 / 3.0) <= 1e-14);
  CHECK(std::abs(g.partition_function - 1.5) <= 1e-14);
}

TEST_CASE("free energy identities") {
  std::mt19937_64 rng(2);
  const ManyBodyOperator h = sector_hamiltonian(LatticeSpace(3, 2, Boundary::periodic), 2, rng);
  for (double t : {0.1, 0.7, 3.0}) {
    const GibbsState g = gibbs_canonical(h, t);
    double sum = 0.0;
    for (double p : g.state.weights()) sum += p;
    CHECK(std::abs(sum - 1.0) <= 1e-10);
    CHECK(std::abs(g.free_energy + t * g.log_partition) <= 1e-9);
    CHECK(std::abs(free_energy_of(g.state, h, t) - g.free_energy) <= 1e-9);
    const GroundSolution gs = ground_state(h);
    CHECK(std::abs(free_energy_of(QuantumState::pure(gs.vector()), h, t) - gs.energy) <= 1e-12);
  }
  CHECK_THROWS_AS(free_energy_of(QuantumState::pure(CVector::Unit(3, 0)), h, 1.0), InvalidArgument);
}

TEST_CASE("gibbs variational principle and uniqueness at the minimum") {
  std::mt19937_64 rng(3);
  const ManyBodyOperator h = sector_hamiltonian(LatticeSpace(3, 2), 2, rng);
  const double t = 0.8;
  const GibbsState g = gibbs_canonical(h, t);
  for (int k = 0; k < 100; ++k) {
    const QuantumState st = random_mixed(h.dim(), 1 + k % h.dim(), rng);
    CHECK(free_energy_of(st, h, t) >= g.free_energy - 1e-9);
  }
  // Near-minimizers: Boltzmann weights perturbed in a fixed eigenbasis.
  std::normal_distribution<double> n01;
  for (int k = 0; k < 20; ++k) {
    std::vector<double> p = g.state.weights();
    const double scale = std::pow(10.0, -3.0 - k % 4);
    double sum = 0.0;
    for (double& x : p) sum += (x *= std::exp(scale * n01(rng)));
    for (double& x : p) x /= sum;
    const QuantumState near = QuantumState::mixed(p, g.state.vectors());
    const double f = free_energy_of(near, h, t);
    CHECK(f >= g.free_energy - 1e-12);
    if (f <= g.free_energy + 1e-12) CHECK(trace_distance(near, g.state) <= 1e-4);
  }
}

TEST_CASE("entropy grows with temperature") {
  std::mt19937_64 rng(4);
  const ManyBodyOperator h = sector_hamiltonian(LatticeSpace(4, 2), 2, rng);
  double last = 0.0;
  for (double t = 0.05; t < 20.0; t *= 1.3) {
    const double s = entropy(gibbs_canonical(h, t).state);
    CHECK(s >= last - 1e-12);
    last = s;
  }
  CHECK(last <= std::log(h.dim()) + 1e-12);
}

TEST_CASE("grand canonical: vacuum, free modes and per-sector oracle") {
  const LatticeSpace s(2, 1);
  const OneBodyOperator none = local_potential_operator(s, RVector::Zero(2));
  const GibbsState vac = gibbs_grand_canonical(assemble_fock_hamiltonian(build_fock_basis(s, 0), none, std::nullopt), 0.5);
  CHECK(vac.partition_function == 1.0);
  CHECK(entropy(vac.state) == 0.0);

  const double e1 = 0.3, e2 = 1.1, t = 0.6;
  CMatrix diag = CMatrix::Zero(2, 2);
  diag(0, 0) = e1;
  diag(1, 1) = e2;
  const FockBasis f1 = build_fock_basis(s, 1);
  const GibbsState g1 = gibbs_grand_canonical(assemble_fock_hamiltonian(f1, nonlocal_operator(s, diag), std::nullopt), t);
  const double x1 = std::exp(-e1 / t), x2 = std::exp(-e2 / t);
  CHECK(std::abs(g1.partition_function - (1 + x1 + x2)) <= 1e-14);
  const RVector rho = density(f1, g1.state).values;
  CHECK(std::abs(rho(0) - x1 / (1 + x1 + x2)) <= 1e-14);
  CHECK(std::abs(rho.sum() - (x1 + x2) / (1 + x1 + x2)) <= 1e-14);
  const FockBasis f2 = build_fock_basis(s, 2);
  const GibbsState g2 = gibbs_grand_canonical(assemble_fock_hamiltonian(f2, nonlocal_operator(s, diag), std::nullopt), t);
  CHECK(std::abs(g2.partition_function - (1 + x1) * (1 + x2)) <= 1e-14);

  std::mt19937_64 rng(5);
  const LatticeSpace s3(3, 2);
  const OneBodyOperator one = kinetic_operator(s3) + local_potential_operator(s3, oracle::random_vector(3, rng));
  const RMatrix kernel = PairPotential::from_displacement(s3, oracle::random_vector(3, rng)).kernel();
  const GibbsState g = gibbs_grand_canonical(
      assemble_fock_hamiltonian(build_fock_basis(s3, 2), one, PairPotential(kernel)), 0.9);
  std::vector<int> site(6);
  for (int p = 0; p < 6; ++p) site[p] = s3.site_of(p);
  const std::vector<RVector> spectra = {RVector::Zero(1), oracle::sorted_eigenvalues(one.matrix()),
                                        oracle::sorted_eigenvalues(oracle::two_fermions(one.matrix(), site, kernel).hamiltonian)};
  CHECK(std::abs(g.log_partition - oracle::log_trace_exp(spectra, 0.9)) <= 1e-10);
  CHECK(std::abs(g.free_energy + 0.9 * g.log_partition) <= 1e-9);
  CHECK_THROWS_AS(gibbs_grand_canonical(assemble_fock_hamiltonian(build_fock_basis(s3, 2), one, std::nullopt), 0.0),
                  InvalidArgument);
}

TEST_CASE("grand-canonical observables converge in the Fock truncation") {
  std::mt19937_64 rng(6);
  const LatticeSpace s(4, 2);
  const RVector v = (oracle::random_vector(4, rng, 0.5).array() + 4.0).matrix();
  const OneBodyOperator one = kinetic_operator(s) + local_potential_operator(s, v);
  const PairPotential pair = PairPotential::from_displacement(s, oracle::random_vector(4, rng, 0.5));
  for (double t : {0.2, 0.5, 1.0}) {
    const auto observe = [&](int n_max) {
      const FockBasis f = build_fock_basis(s, n_max);
      const GibbsState g = gibbs_grand_canonical(assemble_fock_hamiltonian(f, one, pair), t);
      return std::make_pair(density(f, g.state).values, entropy(g.state));
    };
    const auto [r4, s4] = observe(4);
    const auto [r5, s5] = observe(5);
    CHECK((r4 - r5).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(std::abs(s4 - s5) < 1e-8);
  }
}
