#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "fgen/graph.hpp"
#include "fgen/rng.hpp"

namespace fgen {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
  std::string worst;  // "<param>[<index>]" of the largest error
};

// Compares the analytic gradient of `build` (which records a scalar loss,
// usually on the graph it is handed, reading parameters from `params`) against central
// differences (f(w+h) - f(w-h)) / 2h with h = h_scale * max(1, |w|). When the
// parameters hold more than `max_coords` entries, a uniform random subset of
// that many coordinates is checked. Relative error per coordinate is
// |a - n| / max(|a|, |n|, 1e-8). `build` must be deterministic.
template <class Builder>
GradCheckResult grad_check(Builder&& build, ParameterSet<double>& params, Rng& rng,
                           std::size_t max_coords = 200, double h_scale = 1e-5) {
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t p = 0; p < params.size(); ++p)
    for (std::size_t i = 0; i < params.at(p).value.size(); ++i) coords.emplace_back(p, i);
  if (coords.size() > max_coords) {
    for (std::size_t i = 0; i < max_coords; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(coords.size() - i));
      std::swap(coords[i], coords[j]);
    }
    coords.resize(max_coords);
  }

  params.zero_grad();
  {
    Graph<double> g;
    auto loss = build(g);
    loss.graph->backward(loss);
  }

  auto eval = [&]() {
    Graph<double> g;
    return build(g).value().item();
  };

  GradCheckResult result;
  for (auto [p, i] : coords) {
    auto& param = params.at(p);
    const double w = param.value[i];
    const double h = h_scale * std::max(1.0, std::abs(w));
    param.value[i] = w + h;
    const double up = eval();
    param.value[i] = w - h;
    const double down = eval();
    param.value[i] = w;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = param.grad[i];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    const double err = std::abs(analytic - numeric) / denom;
    ++result.coords_checked;
    if (result.coords_checked == 1 || err > result.max_rel_error) {
      result.max_rel_error = err;
      result.worst = param.name + "[" + std::to_string(i) + "]";
    }
  }
  return result;
}

}  // namespace fgen
