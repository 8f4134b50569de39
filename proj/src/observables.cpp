#include "hklab/observables.hpp"

#include <bit>
#include <cmath>
#include <string>

namespace hklab {

namespace {

void require_dims(const OccupationBasis& basis, const QuantumState& state, const char* who) {
  if (basis.dim() != state.dim())
    throw InvalidArgument(std::string(who) + ": state dimension " + std::to_string(state.dim()) +
                          " does not match basis dimension " + std::to_string(basis.dim()));
}

// Common particle number of every configuration, or -1 if they differ.
int fixed_particle_number(const OccupationBasis& basis) {
  if (basis.dim() == 0) return -1;
  const int n = popcount(basis[0]);
  for (Mask m : basis.masks())
    if (popcount(m) != n) return -1;
  return n;
}

}  // namespace

RVector PairDensity::marginal() const {
  if (num_particles < 2)
    throw InvalidArgument("PairDensity::marginal: needs a fixed particle number N >= 2");
  return values.rowwise().sum() * spacing * 2.0 / (num_particles - 1);
}

double Magnetization::pairing(const MagneticField& field) const {
  if (field.num_sites() != static_cast<int>(values.size()))
    throw InvalidArgument("Magnetization::pairing: size mismatch");
  double s = 0.0;
  for (std::size_t x = 0; x < values.size(); ++x)
    for (int k = 0; k < 3; ++k) s += field.values[x][k] * values[x][k];
  return s * spacing;
}

double Magnetization::max_abs_difference(const Magnetization& other) const {
  if (other.values.size() != values.size())
    throw InvalidArgument("Magnetization: size mismatch");
  double d = 0.0;
  for (std::size_t x = 0; x < values.size(); ++x)
    for (int k = 0; k < 3; ++k) d = std::max(d, std::abs(values[x][k] - other.values[x][k]));
  return d;
}

RVector OneRDM::occupations() const {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(matrix, Eigen::EigenvaluesOnly);
  return eig.eigenvalues();
}

RVector OneRDM::site_density(const LatticeSpace& space) const {
  RVector rho = RVector::Zero(space.num_sites());
  for (int p = 0; p < space.dim(); ++p) rho(space.site_of(p)) += matrix(p, p).real();
  return rho / spacing;
}

RVector SpeciesPairData::density_a(int num_b) const {
  return ab.rowwise().sum() * spacing / static_cast<double>(num_b);
}

RVector SpeciesPairData::density_b(int num_a) const {
  return ab.colwise().sum().transpose() * spacing / static_cast<double>(num_a);
}

double SpeciesPairData::max_abs_difference(const SpeciesPairData& other) const {
  return std::max({(aa - other.aa).cwiseAbs().maxCoeff(), (bb - other.bb).cwiseAbs().maxCoeff(),
                   (ab - other.ab).cwiseAbs().maxCoeff()});
}

DensityProfile density(const OccupationBasis& basis, const QuantumState& state) {
  require_dims(basis, state, "density");
  const LatticeSpace& space = basis.space();
  const RVector pop = state.populations();
  RVector rho = RVector::Zero(space.num_sites());
  for (int i = 0; i < basis.dim(); ++i)
    for (Mask a = basis[i]; a != 0; a &= a - 1) rho(space.site_of(std::countr_zero(a))) += pop(i);
  return {rho / space.spacing(), space.spacing()};
}

PairDensity pair_density(const OccupationBasis& basis, const QuantumState& state) {
  require_dims(basis, state, "pair_density");
  int max_n = 0;
  for (Mask m : basis.masks()) max_n = std::max(max_n, popcount(m));
  if (max_n < 2) throw InvalidArgument("pair_density: needs at least two particles");
  const LatticeSpace& space = basis.space();
  const int L = space.num_sites();
  const double h = space.spacing();
  const RVector pop = state.populations();
  RMatrix rho2 = RMatrix::Zero(L, L);
  for (int i = 0; i < basis.dim(); ++i) {
    if (pop(i) == 0.0) continue;
    // Ordered pairs of distinct particles, each unordered pair counted twice.
    for (Mask a = basis[i]; a != 0; a &= a - 1) {
      const int x = space.site_of(std::countr_zero(a));
      for (Mask b = a & (a - 1); b != 0; b &= b - 1) {
        const int y = space.site_of(std::countr_zero(b));
        rho2(x, y) += 0.5 * pop(i);
        rho2(y, x) += 0.5 * pop(i);
      }
    }
  }
  return {rho2 / (h * h), h, fixed_particle_number(basis)};
}

OneRDM one_rdm(const OccupationBasis& basis, const QuantumState& state) {
  require_dims(basis, state, "one_rdm");
  const int D = basis.space().dim();
  CMatrix gamma = CMatrix::Zero(D, D);
  for (int k = 0; k < state.num_components(); ++k) {
    const double w = state.weights()[k];
    if (w <= 0.0) continue;
    const auto c = state.vectors().col(k);
    for (int j = 0; j < basis.dim(); ++j) {
      const Complex cj = c(j);
      if (cj == Complex(0.0, 0.0)) continue;
      const Mask m = basis[j];
      for (Mask occ = m; occ != 0; occ &= occ - 1) {
        const int p = std::countr_zero(occ);
        const Mask removed = m ^ (Mask{1} << p);
        const double sign_p = (occupied_below(m, p) % 2) ? -1.0 : 1.0;
        for (int q = 0; q < D; ++q) {
          if (removed & (Mask{1} << q)) continue;
          const auto i = basis.index_of(removed | (Mask{1} << q));
          if (!i) continue;
          const double sign_q = (occupied_below(removed, q) % 2) ? -1.0 : 1.0;
          // <i| a+_q a_p |j> = sign, contributes to gamma_pq = <a+_q a_p>.
          gamma(p, q) += w * std::conj(c(*i)) * cj * (sign_p * sign_q);
        }
      }
    }
  }
  return {gamma, basis.space().spacing()};
}

Magnetization magnetization_from_rdm(const OneRDM& gamma, const LatticeSpace& space) {
  if (space.spin_dim() != 2) throw InvalidArgument("magnetization: requires spin dimension 2");
  Magnetization m{std::vector<Vec3>(static_cast<std::size_t>(space.num_sites())), gamma.spacing};
  for (int x = 0; x < space.num_sites(); ++x) {
    const int up = space.mode(x, 0);
    const int dn = space.mode(x, 1);
    // xi = <a+_up a_dn> = gamma(dn, up)
    const Complex xi = gamma.matrix(dn, up) / gamma.spacing;
    m.values[x] = {2.0 * xi.real(), 2.0 * xi.imag(),
                   (gamma.matrix(up, up).real() - gamma.matrix(dn, dn).real()) / gamma.spacing};
  }
  return m;
}

Magnetization magnetization(const OccupationBasis& basis, const QuantumState& state) {
  if (basis.space().spin_dim() != 2)
    throw InvalidArgument("magnetization: requires spin dimension 2");
  return magnetization_from_rdm(one_rdm(basis, state), basis.space());
}

double entropy(const std::vector<double>& probabilities) {
  double sum = 0.0;
  for (double p : probabilities) {
    if (!(p >= -1e-12)) throw InvalidArgument("entropy: negative eigenvalue in spectrum");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-10)
    throw InvalidArgument("entropy: spectrum sums to " + std::to_string(sum));
  double s = 0.0;
  for (double p : probabilities)
    if (p > 0.0) s -= p * std::log(p);
  return std::max(s, 0.0);
}

double entropy(const QuantumState& state) { return entropy(state.weights()); }

SpeciesPairData species_pair_functions(const TwoSpeciesBasis& basis, const QuantumState& state,
                                       const TwoSpeciesSpec& spec) {
  if (spec.num_a != basis.a().num_particles() || spec.num_b != basis.b().num_particles())
    throw InvalidArgument("species_pair_functions: spec particle numbers do not match basis");
  if (state.dim() != basis.dim())
    throw InvalidArgument("species_pair_functions: state dimension mismatch");
  const LatticeSpace& space = basis.space();
  const int L = space.num_sites();
  const double h = space.spacing();
  const RVector pop = state.populations();
  const int db = basis.b().dim();

  const auto sites_of = [&](Mask m) {
    std::vector<int> s;
    for (Mask a = m; a != 0; a &= a - 1) s.push_back(space.site_of(std::countr_zero(a)));
    return s;
  };
  std::vector<std::vector<int>> sites_a, sites_b;
  for (Mask m : basis.a().masks()) sites_a.push_back(sites_of(m));
  for (Mask m : basis.b().masks()) sites_b.push_back(sites_of(m));

  SpeciesPairData out{RMatrix::Zero(L, L), RMatrix::Zero(L, L), RMatrix::Zero(L, L), h};
  const auto add_within = [](RMatrix& target, const std::vector<int>& s, double w) {
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = i + 1; j < s.size(); ++j) {
        target(s[i], s[j]) += 0.5 * w;
        target(s[j], s[i]) += 0.5 * w;
      }
  };
  for (int ia = 0; ia < basis.a().dim(); ++ia) {
    for (int ib = 0; ib < db; ++ib) {
      const double w = pop(ia * db + ib);
      if (w == 0.0) continue;
      add_within(out.aa, sites_a[ia], w);
      add_within(out.bb, sites_b[ib], w);
      for (int x : sites_a[ia])
        for (int y : sites_b[ib]) out.ab(x, y) += w;
    }
  }
  const double scale = 1.0 / (h * h);
  out.aa *= scale;
  out.bb *= scale;
  out.ab *= scale;
  return out;
}

}  // namespace hklab
