#pragma once

#include <cstdint>
#include <vector>

#include "intentrec/param_set.hpp"

namespace intentrec {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moments mirror the shapes of one ParameterSet;
/// step() consumes the gradients currently stored there.
class AdamState {
public:
  AdamState(const ParameterSet& ps, AdamConfig cfg);

  /// One update. Throws if a gradient is non-finite (names the tensor) or a
  /// shape no longer matches. Also throws if any updated value is non-finite.
  void step(ParameterSet& ps);

  std::uint64_t step_count() const { return step_count_; }
  const AdamConfig& config() const { return cfg_; }

  // Checkpoint access.
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }
  void set_step_count(std::uint64_t t) { step_count_ = t; }

private:
  AdamConfig cfg_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::uint64_t step_count_ = 0;
};

}  // namespace intentrec
