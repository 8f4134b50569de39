#pragma once

#include <vector>

#include "hklab/hamiltonian.hpp"

namespace hklab {

/// Pure or mixed state in spectral form: Gamma = sum_k p_k |v_k><v_k| with
/// orthonormal v_k and probabilities p_k summing to one.
class QuantumState {
 public:
  static QuantumState pure(const CVector& psi);
  static QuantumState mixed(std::vector<double> weights, CMatrix vectors);

  const std::vector<double>& weights() const { return weights_; }
  const CMatrix& vectors() const { return vectors_; }
  int dim() const { return static_cast<int>(vectors_.rows()); }
  int num_components() const { return static_cast<int>(weights_.size()); }
  bool is_pure() const;

  CMatrix density_matrix() const;
  /// Diagonal of Gamma in the configuration basis.
  RVector populations() const;
  double expectation(const ManyBodyOperator& op) const;

 private:
  QuantumState(std::vector<double> weights, CMatrix vectors);
  std::vector<double> weights_;
  CMatrix vectors_;
};

/// (1/2) tr |a - b|
double trace_distance(const QuantumState& a, const QuantumState& b);

}  // namespace hklab
