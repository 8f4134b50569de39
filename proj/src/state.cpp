#include "hklab/state.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace hklab {

QuantumState::QuantumState(std::vector<double> weights, CMatrix vectors)
    : weights_(std::move(weights)), vectors_(std::move(vectors)) {}

QuantumState QuantumState::pure(const CVector& psi) {
  if (psi.size() == 0) throw InvalidArgument("QuantumState: empty vector");
  if (std::abs(psi.norm() - 1.0) > 1e-10)
    throw InvalidArgument("QuantumState: state is not normalized (norm " +
                          std::to_string(psi.norm()) + ")");
  CMatrix v(psi.size(), 1);
  v.col(0) = psi;
  return QuantumState({1.0}, std::move(v));
}

QuantumState QuantumState::mixed(std::vector<double> weights, CMatrix vectors) {
  if (static_cast<int>(weights.size()) != vectors.cols())
    throw InvalidArgument("QuantumState: weight count does not match vector count");
  if (weights.empty()) throw InvalidArgument("QuantumState: no components");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= -1e-12)) throw InvalidArgument("QuantumState: negative probability");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-10)
    throw InvalidArgument("QuantumState: probabilities sum to " + std::to_string(sum));
  const CMatrix gram = vectors.adjoint() * vectors;
  const double defect =
      (gram - CMatrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  if (defect > 1e-8) throw InvalidArgument("QuantumState: component vectors not orthonormal");
  for (double& w : weights) w = std::max(w, 0.0);
  return QuantumState(std::move(weights), std::move(vectors));
}

bool QuantumState::is_pure() const {
  int nonzero = 0;
  for (double w : weights_)
    if (w > 1e-14) ++nonzero;
  return nonzero <= 1;
}

CMatrix QuantumState::density_matrix() const {
  if (dim() > kDenseLimit) throw InvalidArgument("QuantumState: too large to densify");
  RVector p = Eigen::Map<const RVector>(weights_.data(), num_components());
  return vectors_ * p.asDiagonal() * vectors_.adjoint();
}

RVector QuantumState::populations() const {
  RVector pop = RVector::Zero(dim());
  for (int k = 0; k < num_components(); ++k)
    if (weights_[k] > 0.0) pop += weights_[k] * vectors_.col(k).cwiseAbs2();
  return pop;
}

double QuantumState::expectation(const ManyBodyOperator& op) const {
  if (op.dim() != dim()) throw InvalidArgument("QuantumState: operator dimension mismatch");
  double e = 0.0;
  for (int k = 0; k < num_components(); ++k)
    if (weights_[k] > 0.0) e += weights_[k] * op.expectation(vectors_.col(k));
  return e;
}

double trace_distance(const QuantumState& a, const QuantumState& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("trace_distance: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(a.density_matrix() - b.density_matrix(),
                                             Eigen::EigenvaluesOnly);
  return 0.5 * eig.eigenvalues().cwiseAbs().sum();
}

}  // namespace hklab
