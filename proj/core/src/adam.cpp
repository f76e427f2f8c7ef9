#include "intentrec/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace intentrec {

AdamState::AdamState(const ParameterSet& ps, AdamConfig cfg) : cfg_(cfg) {
  m_.reserve(ps.size());
  v_.reserve(ps.size());
  for (const auto& e : ps.entries()) {
    m_.emplace_back(e.value.shape());
    v_.emplace_back(e.value.shape());
  }
}

void AdamState::step(ParameterSet& ps) {
  if (ps.size() != m_.size()) {
    throw std::invalid_argument("AdamState::step: parameter count changed");
  }
  ++step_count_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
  for (std::size_t k = 0; k < ps.size(); ++k) {
    auto& e = ps.entries()[k];
    if (!e.grad.same_shape(m_[k])) {
      throw std::invalid_argument("AdamState::step: shape mismatch for '" + e.name + "'");
    }
    if (!e.grad.all_finite()) {
      throw std::runtime_error("AdamState::step: non-finite gradient for '" + e.name + "'");
    }
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      const double g = e.grad[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      e.value[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
    if (!e.value.all_finite()) {
      throw std::runtime_error("AdamState::step: non-finite value in '" + e.name +
                               "' after update");
    }
  }
}

}  // namespace intentrec
