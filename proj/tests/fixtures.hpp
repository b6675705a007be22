#pragma once

#include <numbers>
#include <vector>

#include "depts/network.hpp"
#include "depts/periodicity.hpp"
#include "depts/rng.hpp"
#include "depts/series.hpp"

namespace fixture {

using namespace depts;

// Fan-balanced weights plus nonzero biases and scales, so every parameter matters.
inline NetworkParams<double> random_network(const NetworkShape& shape, Rng& rng) {
  auto p = NetworkParams<double>::initialized(shape, rng);
  p.visit([&rng](auto& a) {
    if (a.cols() == 1) {
      for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = rng.uniform(-0.5, 0.5);
    }
  });
  for (Eigen::Index i = 0; i < p.series_scale.size(); ++i) p.series_scale[i] = rng.uniform(0.5, 1.5);
  return p;
}

inline SeriesPeriods random_coefficients(const std::string& id, int atoms, Rng& rng, double base = 10) {
  SeriesPeriods s;
  s.series_id = id;
  s.coefficients.base = base + rng.uniform(-1, 1);
  for (int k = 0; k < atoms; ++k) {
    s.coefficients.atoms.push_back(
        {rng.uniform(0.5, 3), rng.uniform(0.01, 0.3), rng.uniform(-std::numbers::pi, std::numbers::pi)});
  }
  s.mask = PeriodMask::all_on(atoms);
  return s;
}

// A positive, noisy periodic series of the given length starting at t0.
inline Series random_series(const std::string& id, Index length, Index t0, Rng& rng) {
  Series s{id, Eigen::VectorXd(length), t0};
  const double f = rng.uniform(0.02, 0.2), ph = rng.uniform(0, 6);
  for (Index i = 0; i < length; ++i) {
    s.values[i] = 10 + 3 * std::cos(2 * std::numbers::pi * f * static_cast<double>(t0 + i) + ph) + rng.normal(0, 1);
  }
  return s;
}

}  // namespace fixture
