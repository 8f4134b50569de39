#include "hklab/inverse.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <memory>

namespace hklab {

namespace {

struct Evaluation {
  RVector observables;
  RMatrix jacobian;  ///< d observable_i / d parameter_j
  double gap = std::numeric_limits<double>::infinity();
  double entropy = 0.0;
  double log_partition = 0.0;
};

// H(theta) = H0 + sum_j theta_j diag(b_j) with diagonal observables a_i.
class ResponseModel {
 public:
  ResponseModel(ManyBodyOperator h0, std::vector<RVector> params, std::vector<RVector> observables)
      : h0_(std::move(h0)), params_(std::move(params)), observables_(std::move(observables)) {}

  void set_temperature(std::optional<double> t) { temperature_ = t; }
  std::optional<double> temperature() const { return temperature_; }
  int num_params() const { return static_cast<int>(params_.size()); }

  Evaluation evaluate(const RVector& theta) const {
    RVector diag = RVector::Zero(h0_.dim());
    for (int j = 0; j < num_params(); ++j) diag += theta(j) * params_[j];
    const ManyBodyOperator h(h0_.sparse() + diagonal_sparse(diag), h0_.blocks(), "");
    const auto& blocks = h.blocks();
    const int nblocks = static_cast<int>(blocks.size()) - 1;
    std::vector<RVector> energies(nblocks);
    std::vector<CMatrix> vectors(nblocks);
    for (int b = 0; b < nblocks; ++b) {
      if (blocks[b + 1] == blocks[b]) continue;
      Eigen::SelfAdjointEigenSolver<CMatrix> eig(h.dense_block(b));
      if (eig.info() != Eigen::Success) throw ConvergenceError("response: eigensolver failed");
      energies[b] = eig.eigenvalues();
      vectors[b] = eig.eigenvectors();
    }
    return temperature_ ? thermal(blocks, energies, vectors) : ground(blocks, energies, vectors);
  }

 private:
  RVector segment(const RVector& full, const std::vector<int>& blocks, int b) const {
    return full.segment(blocks[b], blocks[b + 1] - blocks[b]);
  }

  Evaluation ground(const std::vector<int>& blocks, const std::vector<RVector>& energies,
                    const std::vector<CMatrix>& vectors) const {
    const int na = static_cast<int>(observables_.size());
    int gb = -1;
    std::vector<double> all;
    for (std::size_t b = 0; b < energies.size(); ++b) {
      for (int k = 0; k < energies[b].size(); ++k) all.push_back(energies[b](k));
      if (energies[b].size() &&
          (gb < 0 || energies[b](0) < energies[static_cast<std::size_t>(gb)](0)))
        gb = static_cast<int>(b);
    }
    std::sort(all.begin(), all.end());
    Evaluation e;
    e.gap = all.size() > 1 ? all[1] - all[0] : std::numeric_limits<double>::infinity();
    e.observables = RVector::Zero(na);
    e.jacobian = RMatrix::Zero(na, num_params());
    const CMatrix& u = vectors[gb];
    const RVector& en = energies[gb];
    const CVector u0 = u.col(0);
    const RVector pop = u0.cwiseAbs2();
    const auto row = [&](const RVector& full) -> CVector {
      const RVector d = segment(full, blocks, gb);
      return u.transpose() * (u0.conjugate().cwiseProduct(d.cast<Complex>()));
    };
    std::vector<CVector> rb;
    for (const RVector& b : params_) rb.push_back(row(b));
    RVector denom(en.size());
    for (int k = 0; k < en.size(); ++k) denom(k) = k == 0 ? 0.0 : 1.0 / (en(0) - en(k));
    for (int i = 0; i < na; ++i) {
      e.observables(i) = pop.dot(segment(observables_[i], blocks, gb));
      const CVector ra = row(observables_[i]);
      for (int j = 0; j < num_params(); ++j) {
        double s = 0.0;
        for (int k = 1; k < en.size(); ++k) s += (ra(k) * std::conj(rb[j](k))).real() * denom(k);
        e.jacobian(i, j) = 2.0 * s;
      }
    }
    return e;
  }

  Evaluation thermal(const std::vector<int>& blocks, const std::vector<RVector>& energies,
                     const std::vector<CMatrix>& vectors) const {
    const double t = *temperature_;
    const double beta = 1.0 / t;
    const int na = static_cast<int>(observables_.size());
    const int np = num_params();
    double emin = std::numeric_limits<double>::infinity();
    for (const RVector& en : energies)
      if (en.size()) emin = std::min(emin, en.minCoeff());
    double z = 0.0;
    std::vector<RVector> probs(energies.size());
    for (std::size_t b = 0; b < energies.size(); ++b) {
      probs[b] = (-(energies[b].array() - emin) * beta).exp().matrix();
      z += probs[b].sum();
    }
    Evaluation e;
    e.log_partition = -emin * beta + std::log(z);
    e.observables = RVector::Zero(na);
    e.jacobian = RMatrix::Zero(na, np);
    RVector mean_b = RVector::Zero(np);
    for (std::size_t b = 0; b < energies.size(); ++b) {
      if (!energies[b].size()) continue;
      RVector& p = probs[b];
      p /= z;
      for (int k = 0; k < p.size(); ++k)
        if (p(k) > 0.0) e.entropy -= p(k) * std::log(p(k));
      if (p.maxCoeff() < 1e-300) continue;
      const int bi = static_cast<int>(b);
      const CMatrix& u = vectors[b];
      const RVector& en = energies[b];
      const RVector pop = u.cwiseAbs2() * p;
      const int n = static_cast<int>(en.size());
      RMatrix kmat(n, n);
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const double d = en(k) - en(j);
          if (std::abs(d) > 1e-6)
            kmat(j, k) = (p(j) - p(k)) / d;
          else if (d != 0.0)
            kmat(j, k) = -p(j) * std::expm1(-beta * d) / d;
          else
            kmat(j, k) = beta * p(j);
        }
      const auto rotate = [&](const RVector& full) -> CMatrix {
        const RVector d = segment(full, blocks, bi);
        return u.adjoint() * d.cast<Complex>().asDiagonal() * u;
      };
      std::vector<CMatrix> bt;
      for (int j = 0; j < np; ++j) {
        bt.push_back(rotate(params_[j]));
        mean_b(j) += pop.dot(segment(params_[j], blocks, bi));
      }
      for (int i = 0; i < na; ++i) {
        e.observables(i) += pop.dot(segment(observables_[i], blocks, bi));
        const CMatrix at = rotate(observables_[i]);
        for (int j = 0; j < np; ++j)
          e.jacobian(i, j) -=
              (at.array() * bt[j].array().conjugate()).real().cwiseProduct(kmat.array()).sum();
      }
    }
    e.jacobian += beta * e.observables * mean_b.transpose();
    return e;
  }

  ManyBodyOperator h0_;
  std::vector<RVector> params_;
  std::vector<RVector> observables_;
  std::optional<double> temperature_;
};

struct FitResult {
  RVector theta;
  Evaluation eval;
  double residual = 0.0;
  int iterations = 0;
  bool refused = false;
  std::string message;
};

bool gap_ok(const ResponseModel& model, const Evaluation& e, const InversionOptions& options) {
  return model.temperature().has_value() || e.gap >= options.min_gap;
}

// Levenberg-damped Gauss-Newton on theta = theta0 + q c, run to machine precision.
FitResult fit(const ResponseModel& model, const RVector& target, const RVector& theta0,
              const RMatrix& q, const InversionOptions& options) {
  FitResult f;
  f.theta = theta0;
  f.eval = model.evaluate(f.theta);
  const auto refuse = [&](const Evaluation& e) {
    f.refused = true;
    f.message = "ground state gap " + std::to_string(e.gap) + " below " +
                std::to_string(options.min_gap) + "; density is not single-valued here";
  };
  if (!gap_ok(model, f.eval, options)) {
    refuse(f.eval);
    f.residual = (f.eval.observables - target).norm();
    return f;
  }
  RVector r = f.eval.observables - target;
  double cost = r.norm();
  const double floor = 1e-14 * std::max(1.0, target.norm());
  double mu = -1.0;
  int rejections = 0;
  while (f.iterations < options.max_iter && cost > floor) {
    ++f.iterations;
    const RMatrix jr = f.eval.jacobian * q;
    const RMatrix a = jr.transpose() * jr;
    const RVector g = jr.transpose() * r;
    if (mu < 0.0) mu = 1e-6 * std::max(1e-12, a.diagonal().maxCoeff());
    RMatrix damped = a;
    damped.diagonal().array() += mu;
    const RVector step = -damped.ldlt().solve(g);
    const RVector trial = f.theta + q * step;
    const Evaluation e = model.evaluate(trial);
    if (!gap_ok(model, e, options)) {
      refuse(e);
      break;
    }
    const RVector rn = e.observables - target;
    if (rn.norm() < cost) {
      const bool stalled = rn.norm() > 0.5 * cost && cost <= options.tol;
      f.theta = trial;
      f.eval = e;
      r = rn;
      cost = rn.norm();
      mu = std::max(mu / 3.0, 1e-18);
      rejections = 0;
      if (step.norm() <= 1e-15 * (1.0 + f.theta.norm())) break;
      if (stalled && cost <= 1e-3 * options.tol) break;
    } else {
      mu *= 4.0;
      if (++rejections > (cost <= options.tol ? 6 : 40)) {
        f.message = "stagnated";
        break;
      }
    }
  }
  f.residual = cost;
  return f;
}

struct Setup {
  std::unique_ptr<OccupationBasis> basis;
  ManyBodyOperator h0;
};

Setup make_setup(const InversionFamily& family, bool include_pair) {
  const LatticeSpace& space = family.space;
  const OneBodyOperator kin = kinetic_operator(space);
  const std::optional<PairPotential> pair = include_pair ? family.pair : std::nullopt;
  if (family.ensemble == Ensemble::grand_canonical) {
    if (!family.temperature)
      throw InvalidArgument("inverse: grand-canonical family needs a temperature");
    auto fock = std::make_unique<FockBasis>(space, family.num_particles);
    ManyBodyOperator h0 = assemble_fock_hamiltonian(*fock, kin, pair);
    return {std::move(fock), std::move(h0)};
  }
  auto sector = std::make_unique<SectorBasis>(space, family.num_particles);
  ManyBodyOperator h0 = assemble_hamiltonian(*sector, kin, pair);
  return {std::move(sector), std::move(h0)};
}

std::vector<RVector> scaled(std::vector<RVector> v, double factor) {
  for (RVector& x : v) x *= factor;
  return v;
}

ResponseModel density_model(const InversionFamily& family) {
  Setup s = make_setup(family, true);
  std::vector<RVector> n = site_occupations(*s.basis);
  ResponseModel m(std::move(s.h0), n, scaled(n, 1.0 / family.space.spacing()));
  m.set_temperature(family.temperature);
  return m;
}

void validate_family(const InversionFamily& family) {
  if (family.temperature && !(*family.temperature > 0.0))
    throw InvalidArgument("inverse: temperature must be positive");
  if (family.pair && family.pair->num_sites() != family.space.num_sites())
    throw InvalidArgument("inverse: pair potential size mismatch");
}

void validate_density_target(const DensityProfile& target, const InversionFamily& family) {
  const int L = family.space.num_sites();
  if (target.values.size() != L) throw InvalidArgument("invert_density: target size mismatch");
  for (int x = 0; x < L; ++x)
    if (!(target.values(x) > 1e-10))
      throw InvalidArgument("invert_density: target density vanishes at site " +
                            std::to_string(x));
  if (family.ensemble == Ensemble::canonical &&
      std::abs(target.mass() - family.num_particles) > 1e-8 * family.num_particles)
    throw InvalidArgument("invert_density: target mass " + std::to_string(target.mass()) +
                          " differs from N = " + std::to_string(family.num_particles));
}

InversionResult run_density(const ResponseModel& model, const DensityProfile& target,
                            const InversionFamily& family, const RVector& v_init,
                            const InversionOptions& options) {
  const int L = family.space.num_sites();
  if (v_init.size() != L) throw InvalidArgument("invert_density: initial v size mismatch");
  const bool gauge = family.ensemble == Ensemble::canonical;
  const RMatrix q = gauge ? mean_zero_basis(L) : RMatrix::Identity(L, L);
  RVector theta0 = v_init;
  if (gauge) theta0.array() -= theta0.mean();
  const FitResult f = fit(model, target.values, theta0, q, options);
  InversionResult r;
  r.v = f.theta;
  r.temperature = family.temperature;
  r.residual = f.residual;
  r.iterations = f.iterations;
  r.gauge = gauge ? "mean-zero v" : "none (v fixed by the particle-number distribution)";
  r.converged = !f.refused && f.residual <= options.tol;
  r.message = f.refused ? f.message
                        : (r.converged ? "converged" : "residual above tolerance: " + f.message);
  return r;
}

}  // namespace

RMatrix mean_zero_basis(int n) {
  if (n < 2) return RMatrix::Zero(n, 0);
  RMatrix a = RMatrix::Identity(n, n);
  a.array() -= 1.0 / n;
  Eigen::HouseholderQR<RMatrix> qr(a.leftCols(n - 1));
  return qr.householderQ() * RMatrix::Identity(n, n - 1);
}

DensityResponse density_response(const InversionFamily& family, const RVector& v) {
  validate_family(family);
  if (v.size() != family.space.num_sites())
    throw InvalidArgument("density_response: potential size mismatch");
  const Evaluation e = density_model(family).evaluate(v);
  return {e.observables, e.jacobian, e.gap, e.entropy, e.log_partition};
}

InversionResult invert_density(const DensityProfile& target, const InversionFamily& family,
                               const RVector& v_init, const InversionOptions& options) {
  validate_family(family);
  validate_density_target(target, family);
  return run_density(density_model(family), target, family, v_init, options);
}

InversionResult invert_pair_density(const PairDensity& target, const InversionFamily& family,
                                    const RVector& v_init, const RVector& w_init,
                                    const InversionOptions& options) {
  validate_family(family);
  const LatticeSpace& space = family.space;
  const int L = space.num_sites();
  const int nd = space.num_distances();
  if (family.num_particles < 2) throw InvalidArgument("invert_pair_density: needs N >= 2");
  if (target.values.rows() != L || target.values.cols() != L)
    throw InvalidArgument("invert_pair_density: target size mismatch");
  if (v_init.size() != L || w_init.size() != nd)
    throw InvalidArgument("invert_pair_density: initial parameter size mismatch");

  Setup s = make_setup(family, false);
  const OccupationBasis& basis = *s.basis;
  const double h = space.spacing();
  std::vector<RVector> params = site_occupations(basis);
  // Same-site pairs exist only with more than one spin component.
  const int first_bin = space.spin_dim() >= 2 ? 0 : 1;
  const int nw = nd - first_bin;
  for (int d = first_bin; d < nd; ++d) params.emplace_back(RVector::Zero(basis.dim()));
  std::vector<RVector> obs;
  std::vector<std::pair<int, int>> entries;
  for (int x = 0; x < L; ++x)
    for (int y = x; y < L; ++y) {
      entries.emplace_back(x, y);
      obs.emplace_back(RVector::Zero(basis.dim()));
    }
  const auto entry_index = [L](int x, int y) { return x * L - x * (x - 1) / 2 + (y - x); };
  for (int i = 0; i < basis.dim(); ++i) {
    std::vector<int> sites;
    for (Mask m = basis[i]; m != 0; m &= m - 1)
      sites.push_back(space.site_of(std::countr_zero(m)));
    for (std::size_t a = 0; a < sites.size(); ++a)
      for (std::size_t b = a + 1; b < sites.size(); ++b) {
        const int x = std::min(sites[a], sites[b]);
        const int y = std::max(sites[a], sites[b]);
        const int d = space.distance(x, y);
        if (d >= first_bin) params[static_cast<std::size_t>(L + d - first_bin)](i) += 1.0;
        obs[static_cast<std::size_t>(entry_index(x, y))](i) += (x == y ? 1.0 : 0.5) / (h * h);
      }
  }
  RVector tvec(static_cast<int>(entries.size()));
  for (std::size_t k = 0; k < entries.size(); ++k)
    tvec(static_cast<int>(k)) = target.values(entries[k].first, entries[k].second);

  ResponseModel model(std::move(s.h0), std::move(params), std::move(obs));
  model.set_temperature(family.temperature);

  const bool gauge = family.ensemble == Ensemble::canonical;
  RMatrix q = RMatrix::Zero(L + nw, gauge ? L + nw - 2 : L + nw);
  if (gauge) {
    q.block(0, 0, L, L - 1) = mean_zero_basis(L);
    q.block(L, L - 1, nw, nw - 1) = mean_zero_basis(nw);
  } else {
    q.setIdentity();
  }
  RVector theta0(L + nw);
  theta0.head(L) = v_init;
  theta0.tail(nw) = w_init.tail(nw);
  if (gauge) {
    theta0.head(L).array() -= theta0.head(L).mean();
    theta0.tail(nw).array() -= theta0.tail(nw).mean();
  }
  const FitResult f = fit(model, tvec, theta0, q, options);
  InversionResult r;
  r.v = f.theta.head(L);
  r.w = RVector::Zero(nd);
  r.w.tail(nw) = f.theta.tail(nw);
  r.temperature = family.temperature;
  r.residual = f.residual;
  r.iterations = f.iterations;
  r.gauge = gauge ? "mean-zero v and mean-zero w over occupiable distance bins" : "none";
  r.converged = !f.refused && f.residual <= options.tol;
  r.message = f.refused ? f.message
                        : (r.converged ? "converged" : "residual above tolerance: " + f.message);
  return r;
}

InversionResult invert_v_and_T(const ThermalTarget& target, const InversionFamily& family_in,
                               std::pair<double, double> t_bracket,
                               const InversionOptions& options) {
  auto [lo, hi] = t_bracket;
  if (!(lo > 0.0) || !(hi > lo))
    throw InvalidArgument("invert_v_and_T: bracket must satisfy 0 < T_lo < T_hi");
  InversionFamily family = family_in;
  family.temperature = lo;
  validate_family(family);
  validate_density_target(target.density, family);
  ResponseModel model = density_model(family);
  const int L = family.space.num_sites();

  struct Sample {
    double t;
    InversionResult inner;
    double s_error;  // S(v*(T), T) - S_target
  };
  std::vector<Sample> samples;
  const auto nearest_v = [&](double t) -> RVector {
    if (samples.empty()) return RVector::Zero(L);
    const Sample* best = &samples.front();
    for (const Sample& s : samples)
      if (std::abs(std::log(s.t / t)) < std::abs(std::log(best->t / t))) best = &s;
    return best->inner.v;
  };
  const auto eval = [&](double t) -> const Sample& {
    model.set_temperature(t);
    family.temperature = t;
    InversionResult inner = run_density(model, target.density, family, nearest_v(t), options);
    const double s = model.evaluate(inner.v).entropy;
    samples.push_back({t, std::move(inner), s - target.entropy});
    return samples.back();
  };

  // Coarse logarithmic scan, then golden-section refinement of |S - S_target|.
  const int grid = 16;
  std::vector<double> ts;
  for (int k = 0; k < grid; ++k) ts.push_back(lo * std::pow(hi / lo, k / double(grid - 1)));
  std::vector<double> err;
  for (double t : ts) err.push_back(eval(t).s_error);
  int best = 0;
  for (int k = 1; k < grid; ++k)
    if (std::abs(err[k]) < std::abs(err[best])) best = k;
  double a = ts[std::max(0, best - 1)];
  double b = ts[std::min(grid - 1, best + 1)];
  for (int k = 0; k + 1 < grid; ++k)
    if ((err[k] < 0) != (err[k + 1] < 0) && (k == best || k + 1 == best)) {
      a = ts[k];
      b = ts[k + 1];
      break;
    }
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - ratio * (b - a);
  double d = a + ratio * (b - a);
  double fc = std::abs(eval(c).s_error);
  double fd = std::abs(eval(d).s_error);
  for (int it = 0; it < 200 && (b - a) > 1e-13 * b; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = std::abs(eval(c).s_error);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = std::abs(eval(d).s_error);
    }
    if (std::min(fc, fd) <= 1e-3 * options.tol) break;
  }
  const Sample* pick = &samples.front();
  for (const Sample& s : samples)
    if (std::abs(s.s_error) < std::abs(pick->s_error)) pick = &s;

  InversionResult r = pick->inner;
  r.temperature = pick->t;
  r.entropy_residual = std::abs(pick->s_error);
  r.iterations = static_cast<int>(samples.size());
  r.converged = pick->inner.converged && r.entropy_residual <= options.tol;
  if (!r.converged)
    r.message = r.entropy_residual > options.tol
                    ? "no temperature in the bracket reaches the target entropy (best |dS| = " +
                          std::to_string(r.entropy_residual) + ")"
                    : pick->inner.message;
  if (family.ensemble == Ensemble::canonical && target.log_partition) {
    model.set_temperature(pick->t);
    const double log_z = model.evaluate(r.v).log_partition;
    r.constant_shift = pick->t * (log_z - *target.log_partition) / family.num_particles;
  }
  return r;
}

}  // namespace hklab
