#include "hklab/thermal.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace hklab {

namespace {

constexpr double kFlush = 1e-300;

void require_temperature(double t, const char* who) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw InvalidArgument(std::string(who) + ": temperature must be positive, got " +
                          std::to_string(t));
}

GibbsState from_spectrum(Ensemble ensemble, double t, const RVector& energies, CMatrix vectors) {
  const double e0 = energies.minCoeff();
  std::vector<double> w(static_cast<std::size_t>(energies.size()));
  double sum = 0.0;
  for (int k = 0; k < energies.size(); ++k) {
    w[k] = std::exp(-(energies(k) - e0) / t);
    sum += w[k];
  }
  double flushed = 0.0;
  for (double& p : w) {
    p /= sum;
    if (p < kFlush) {
      flushed += p;
      p = 0.0;
    }
  }
  // Flushed weights carry at most |p ln p| each, far below 1e-12 in total.
  if (flushed * 700.0 * static_cast<double>(w.size()) > 1e-12)
    throw ConvergenceError("gibbs: flushed weight too large");
  GibbsState g{ensemble, t, QuantumState::mixed(std::move(w), std::move(vectors)), energies};
  g.log_partition = -e0 / t + std::log(sum);
  g.partition_function = std::exp(g.log_partition);
  g.free_energy = -t * g.log_partition;
  return g;
}

}  // namespace

GibbsState gibbs_canonical(const ManyBodyOperator& h, double temperature) {
  require_temperature(temperature, "gibbs_canonical");
  const Spectrum s = full_spectrum(h);
  return from_spectrum(Ensemble::canonical, temperature, s.values, s.vectors);
}

GibbsState gibbs_grand_canonical(const ManyBodyOperator& h_fock, double temperature) {
  require_temperature(temperature, "gibbs_grand_canonical");
  const auto& blocks = h_fock.blocks();
  if (blocks.size() < 2 || blocks.back() != h_fock.dim())
    throw InvalidArgument("gibbs_grand_canonical: operator has no sector block structure");
  if (h_fock.dim() > kDenseLimit)
    throw InvalidArgument("gibbs_grand_canonical: dimension exceeds dense limit");
  RVector energies(h_fock.dim());
  CMatrix vectors = CMatrix::Zero(h_fock.dim(), h_fock.dim());
  for (std::size_t b = 0; b + 1 < blocks.size(); ++b) {
    const int begin = blocks[b];
    const int size = blocks[b + 1] - begin;
    if (size == 0) continue;
    const Spectrum s = full_spectrum(h_fock.dense_block(static_cast<int>(b)));
    energies.segment(begin, size) = s.values;
    vectors.block(begin, begin, size, size) = s.vectors;
  }
  return from_spectrum(Ensemble::grand_canonical, temperature, energies, std::move(vectors));
}

double free_energy_of(const QuantumState& state, const ManyBodyOperator& h, double temperature) {
  if (state.dim() != h.dim()) throw InvalidArgument("free_energy_of: dimension mismatch");
  return state.expectation(h) - temperature * entropy(state);
}

}  // namespace hklab
