#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "depts/rng.hpp"
#include "depts/series.hpp"
#include "depts/signal.hpp"

namespace depts {

enum class Composition { linear, quadratic, cubic };

std::string to_string(Composition kind);
Composition parse_composition(const std::string& name);

struct SynthSpec {
  int ar_order = 3;
  double ar_coeff_lo = -1, ar_coeff_hi = 1;
  double init_lo = 0, init_hi = 5;
  double sigma_l = 1;
  double sigma_p = 1;
  double base = 30;
  std::vector<CosineAtom<double>> atoms = default_atoms();
  Composition compose = Composition::linear;
  Index length = 5000;
  std::uint64_t seed = 0;
  // Redraw AR coefficients until the process is stationary.
  bool require_stationary = true;
  // Overrides for the random draws.
  std::optional<std::vector<double>> ar_coeffs;
  std::optional<std::vector<double>> init_values;  // l_{-p}, ..., l_{-1}

  // 8cos(2pi(t+2)/50), 4cos(2pi(t+3)/10), 2cos(2pi t/4).
  static std::vector<CosineAtom<double>> default_atoms();
  void validate() const;
};

/// True when all roots of z^p - a_1 z^{p-1} - ... - a_p lie strictly inside the unit circle.
bool ar_is_stationary(const std::vector<double>& coeffs);

struct ArDraw {
  std::vector<double> coeffs;
  std::vector<double> init;
  Eigen::VectorXd values;
};

ArDraw gen_ar(const SynthSpec& spec, Rng& rng);

/// Noise-free periodic state z_t for t = 0 .. length-1.
Eigen::VectorXd periodic_state(const SynthSpec& spec);
/// p_t ~ Normal(z_t, sigma_p).
Eigen::VectorXd gen_periodic(const SynthSpec& spec, Rng& rng);

Eigen::VectorXd compose(const Eigen::VectorXd& l, const Eigen::VectorXd& p, Composition kind);

struct SynthDataset {
  Series series;  // composed x only
  SplitSpec split;
};

/// Split 4000/100/900 scaled to spec.length (exact for length 5000).
SynthDataset gen_dataset(const SynthSpec& spec, const std::string& id = "");

}  // namespace depts
