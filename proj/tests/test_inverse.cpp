#include <doctest.h>

#include <random>

#include "hklab/inverse.hpp"
#include "oracles.hpp"

using namespace hklab;

namespace {

RVector mean_zero(RVector v) {
  v.array() -= v.mean();
  return v;
}

InversionFamily family(int L, int n, std::optional<PairPotential> pair = std::nullopt,
                       std::optional<double> t = std::nullopt, Ensemble e = Ensemble::canonical) {
  return {LatticeSpace(L, 2), n, e, std::move(pair), t};
}

double sup(const RVector& a, const RVector& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// Forward data computed without the inversion module.
struct Forward {
  DensityProfile rho;
  PairDensity rho2;
  double entropy = 0.0;
  double log_partition = 0.0;
};

Forward forward(const InversionFamily& f, const RVector& v) {
  const OneBodyOperator one = kinetic_operator(f.space) + local_potential_operator(f.space, v);
  Forward out;
  if (f.ensemble == Ensemble::grand_canonical) {
    const FockBasis b(f.space, f.num_particles);
    const GibbsState g = gibbs_grand_canonical(assemble_fock_hamiltonian(b, one, f.pair), *f.temperature);
    out.rho = density(b, g.state);
    out.entropy = entropy(g.state);
    out.log_partition = g.log_partition;
    return out;
  }
  const SectorBasis b(f.space, f.num_particles);
  const ManyBodyOperator h = assemble_hamiltonian(b, one, f.pair);
  if (f.temperature) {
    const GibbsState g = gibbs_canonical(h, *f.temperature);
    out.rho = density(b, g.state);
    if (f.num_particles >= 2) out.rho2 = pair_density(b, g.state);
    out.entropy = entropy(g.state);
    out.log_partition = g.log_partition;
  } else {
    const QuantumState st = QuantumState::pure(ground_state(h).vector());
    out.rho = density(b, st);
    if (f.num_particles >= 2) out.rho2 = pair_density(b, st);
  }
  return out;
}

}  // namespace

TEST_CASE("mean-zero basis") {
  const RMatrix q = mean_zero_basis(5);
  CHECK(q.rows() == 5);
  CHECK(q.cols() == 4);
  CHECK((q.transpose() * q - RMatrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(q.colwise().sum().cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("linear-response jacobian matches central differences") {
  std::mt19937_64 rng(1);
  const RVector w = oracle::random_vector(6, rng, 0.5);
  const std::vector<InversionFamily> families = {
      family(6, 2),
      family(6, 2, PairPotential::from_displacement(LatticeSpace(6, 2), w), 0.5),
      family(5, 2, std::nullopt, 0.8, Ensemble::grand_canonical),
  };
  for (const auto& f : families) {
    const RVector v = oracle::random_vector(f.space.num_sites(), rng);
    const DensityResponse r = density_response(f, v);
    const int L = f.space.num_sites();
    RMatrix fd(L, L);
    for (int y = 0; y < L; ++y) {
      RVector vp = v, vm = v;
      vp(y) += 1e-5;
      vm(y) -= 1e-5;
      fd.col(y) = (forward(f, vp).rho.values - forward(f, vm).rho.values) / 2e-5;
    }
    CHECK((r.jacobian - fd).cwiseAbs().maxCoeff() <= 1e-4 * fd.cwiseAbs().maxCoeff());
    CHECK(sup(r.density, forward(f, v).rho.values) <= 1e-12);
  }
}

TEST_CASE("density inversion") {
  std::mt19937_64 rng(2);
  const InversionFamily free = family(8, 2);
  const InversionResult zero = invert_density(forward(free, RVector::Zero(8)).rho, free, RVector::Zero(8));
  CHECK(zero.converged);
  CHECK(zero.v.cwiseAbs().maxCoeff() <= 1e-6);

  for (int k = 0; k < 3; ++k) {
    const RVector v = mean_zero(oracle::random_vector(8, rng));
    const DensityProfile target = forward(free, v).rho;
    const InversionResult r = invert_density(target, free, RVector::Zero(8));
    CHECK(r.converged);
    CHECK(r.residual <= 1e-8);
    CHECK(sup(r.v, v) <= 1e-6);
    CHECK(std::abs(r.v.mean()) <= 1e-12);
    CHECK(sup(forward(free, r.v).rho.values, target.values) <= 10 * 1e-8);
    // Gauge consistency: a constant added to the truth does not move the answer.
    const InversionResult shifted = invert_density(forward(free, (v.array() + 2.5).matrix()).rho, free, RVector::Zero(8));
    CHECK(sup(shifted.v, r.v) <= 1e-8);
  }

  const InversionFamily hot = family(8, 2, PairPotential::from_displacement(LatticeSpace(8, 2), oracle::random_vector(8, rng)), 0.5);
  const RVector v = mean_zero(oracle::random_vector(8, rng));
  const InversionResult r = invert_density(forward(hot, v).rho, hot, RVector::Zero(8));
  CHECK(r.converged);
  CHECK(sup(r.v, v) <= 1e-5);

  const InversionFamily gc = family(5, 2, std::nullopt, 1.0, Ensemble::grand_canonical);
  const RVector vg = oracle::random_vector(5, rng);
  const InversionResult rg = invert_density(forward(gc, vg).rho, gc, RVector::Zero(5));
  CHECK(rg.converged);
  CHECK(sup(rg.v, vg) <= 1e-6);
}

TEST_CASE("density inversion rejects bad targets") {
  const InversionFamily f = family(4, 2);
  DensityProfile holed{RVector::Constant(4, 0.5), 1.0};
  holed.values(1) = 0.0;
  holed.values(0) = 1.0;
  CHECK_THROWS_AS(invert_density(holed, f, RVector::Zero(4)), InvalidArgument);
  CHECK_THROWS_AS(invert_density({RVector::Constant(4, 1.0), 1.0}, f, RVector::Zero(4)), InvalidArgument);
  CHECK_THROWS_AS(invert_density({RVector::Constant(3, 2.0 / 3.0), 1.0}, f, RVector::Zero(4)), InvalidArgument);
  // Spinless fermions cannot put more than one particle on a site.
  const InversionFamily spinless{LatticeSpace(4, 1), 2, Ensemble::canonical, std::nullopt, std::nullopt};
  const RVector crowded = (RVector(4) << 1.5, 0.2, 0.2, 0.1).finished();
  const InversionResult r = invert_density({crowded, 1.0}, spinless, RVector::Zero(4), {.max_iter = 60});
  CHECK(!r.converged);
  CHECK(r.residual > 1e-3);
  CHECK(!r.message.empty());
}

TEST_CASE("pair density inversion") {
  std::mt19937_64 rng(3);
  const LatticeSpace s(6, 2);
  const int nd = s.num_distances();
  const InversionFamily base = family(6, 2);
  {
    const InversionFamily f = family(6, 2, PairPotential::from_displacement(s, RVector::Zero(nd)));
    const InversionResult r = invert_pair_density(forward(f, RVector::Zero(6)).rho2, base, RVector::Zero(6), RVector::Zero(nd));
    CHECK(r.converged);
    CHECK(r.v.cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(r.w.cwiseAbs().maxCoeff() <= 1e-6);
  }
  for (int k = 0; k < 2; ++k) {
    const RVector v = mean_zero(oracle::random_vector(6, rng));
    const RVector w = mean_zero(oracle::random_vector(nd, rng));
    const InversionFamily f = family(6, 2, PairPotential::from_displacement(s, w));
    const PairDensity target = forward(f, v).rho2;
    const InversionResult r = invert_pair_density(target, base, RVector::Zero(6), RVector::Zero(nd));
    CHECK(r.converged);
    CHECK(sup(r.v, v) <= 1e-5);
    CHECK(sup(r.w, w) <= 1e-5);
    // Gauge family: w + c with v - c (N - 1) / 2 is the same Hamiltonian.
    const double c = 0.8;
    const InversionFamily fc = family(6, 2, PairPotential::from_displacement(s, (w.array() + c).matrix()));
    const PairDensity tc = forward(fc, (v.array() - c / 2.0).matrix()).rho2;
    CHECK((tc.values - target.values).cwiseAbs().maxCoeff() <= 1e-10);
    const InversionResult rc = invert_pair_density(tc, base, RVector::Zero(6), RVector::Zero(nd));
    CHECK(rc.converged);
    CHECK(rc.residual <= 1e-8);
    CHECK(sup(rc.v, v) <= 1e-5);
    CHECK(sup(rc.w, w) <= 1e-5);
  }
  CHECK_THROWS_AS(invert_pair_density(PairDensity{RMatrix::Zero(6, 6), 1.0, 2}, family(6, 1), RVector::Zero(6), RVector::Zero(nd)),
                  InvalidArgument);
}

TEST_CASE("(v, T) inversion") {
  std::mt19937_64 rng(4);
  const RVector v0 = mean_zero(oracle::random_vector(6, rng));
  const InversionFamily gc = family(6, 2, std::nullopt, 1.0, Ensemble::grand_canonical);
  const RVector vg = oracle::random_vector(6, rng) + RVector::Constant(6, 0.5);
  const Forward fg = forward(gc, vg);
  const InversionResult r = invert_v_and_T({fg.rho, fg.entropy, std::nullopt}, gc, {0.1, 10.0});
  CHECK(r.converged);
  REQUIRE(r.temperature);
  CHECK(std::abs(*r.temperature - 1.0) <= 1e-2);
  CHECK(sup(r.v, vg) <= 1e-4);

  // Canonical: targets at v and v + c share rho and S; ln Z fixes the constant.
  const InversionFamily can = family(6, 2, std::nullopt, 0.7);
  const double c = 0.3;
  const Forward f1 = forward(can, v0);
  const Forward f2 = forward(can, (v0.array() + c).matrix());
  const InversionResult r1 = invert_v_and_T({f1.rho, f1.entropy, f1.log_partition}, can, {0.1, 10.0});
  const InversionResult r2 = invert_v_and_T({f2.rho, f2.entropy, f2.log_partition}, can, {0.1, 10.0});
  CHECK(r1.converged);
  CHECK(r2.converged);
  CHECK(std::abs(*r1.temperature - 0.7) <= 7e-3);
  CHECK(sup(r1.v, r2.v) <= 1e-8);
  REQUIRE(r1.constant_shift);
  REQUIRE(r2.constant_shift);
  const double expect = 0.7 * (f2.log_partition - f1.log_partition);  // T ln(Z2/Z1) = -N c
  CHECK(std::abs(2.0 * (*r1.constant_shift - *r2.constant_shift) - expect) <= 1e-6);
  CHECK(std::abs(*r1.constant_shift) <= 1e-6);

  const InversionResult pure = invert_v_and_T({f1.rho, 0.0, std::nullopt}, can, {0.1, 10.0});
  CHECK(!pure.converged);
  CHECK_THROWS_AS(invert_v_and_T({f1.rho, f1.entropy, std::nullopt}, can, {0.0, 1.0}), InvalidArgument);
}
