#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "fgen/graph.hpp"
#include "fgen/tensor.hpp"

namespace fgen {

struct RmsPropConfig {
  double learning_rate = 1e-4;
  double decay = 0.9;  // rho
  double epsilon = 1e-8;
};

// RMSProp with one squared-gradient accumulator per parameter tensor:
//   s <- rho s + (1 - rho) g^2,   w <- w - lr g / (sqrt(s) + eps)
template <class S>
class RmsProp {
 public:
  RmsProp() = default;
  explicit RmsProp(const ParameterSet<S>& params) {
    for (const auto& p : params) accumulators_.emplace_back(p.value.shape());
  }

  std::vector<Tensor<S>>& accumulators() { return accumulators_; }
  const std::vector<Tensor<S>>& accumulators() const { return accumulators_; }

  void step(ParameterSet<S>& params, const RmsPropConfig& cfg) {
    if (params.size() != accumulators_.size())
      throw std::invalid_argument("rmsprop: parameter count does not match accumulators");
    const S rho = static_cast<S>(cfg.decay);
    const S one_minus_rho = static_cast<S>(1.0 - cfg.decay);
    const S lr = static_cast<S>(cfg.learning_rate);
    const S eps = static_cast<S>(cfg.epsilon);
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto& p = params.at(k);
      auto& s = accumulators_[k];
      if (!p.grad.same_shape(p.value) || !s.same_shape(p.value))
        throw std::invalid_argument("rmsprop: shape mismatch for '" + p.name + "'");
      for (std::size_t i = 0; i < s.size(); ++i) {
        const S g = p.grad[i];
        s[i] = rho * s[i] + one_minus_rho * g * g;
        p.value[i] -= lr * g / (std::sqrt(s[i]) + eps);
      }
    }
  }

 private:
  std::vector<Tensor<S>> accumulators_;
};

// Scales all gradients so their global L2 norm is at most max_norm.
// Returns the norm before scaling.
template <class S>
double clip_grad_norm(ParameterSet<S>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params)
    for (auto g : p.grad.data()) sq += static_cast<double>(g) * static_cast<double>(g);
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const S f = static_cast<S>(max_norm / norm);
    for (auto& p : params)
      for (auto& g : p.grad.data()) g *= f;
  }
  return norm;
}

}  // namespace fgen
