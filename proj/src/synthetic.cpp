#include "depts/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace depts {

std::string to_string(Composition kind) {
  switch (kind) {
    case Composition::linear: return "linear";
    case Composition::quadratic: return "quadratic";
    case Composition::cubic: return "cubic";
  }
  return "unknown";
}

Composition parse_composition(const std::string& name) {
  if (name == "linear") return Composition::linear;
  if (name == "quadratic") return Composition::quadratic;
  if (name == "cubic") return Composition::cubic;
  throw std::invalid_argument("unknown composition '" + name + "' (expected linear, quadratic or cubic)");
}

std::vector<CosineAtom<double>> SynthSpec::default_atoms() {
  const double two_pi = 2 * std::numbers::pi;
  return {{8, 1.0 / 50, two_pi * 2 / 50}, {4, 1.0 / 10, two_pi * 3 / 10}, {2, 1.0 / 4, 0}};
}

void SynthSpec::validate() const {
  if (ar_order < 1) throw std::invalid_argument("synth: ar_order must be positive");
  if (length < 1) throw std::invalid_argument("synth: length must be positive");
  if (!(sigma_l >= 0) || !(sigma_p >= 0)) throw std::invalid_argument("synth: sigmas must be >= 0");
  if (ar_coeff_lo > ar_coeff_hi || init_lo > init_hi) throw std::invalid_argument("synth: empty interval");
  if (ar_coeffs && static_cast<int>(ar_coeffs->size()) != ar_order) {
    throw std::invalid_argument("synth: ar_coeffs must have ar_order entries");
  }
  if (init_values && static_cast<int>(init_values->size()) != ar_order) {
    throw std::invalid_argument("synth: init_values must have ar_order entries");
  }
}

bool ar_is_stationary(const std::vector<double>& a) {
  const auto p = static_cast<Eigen::Index>(a.size());
  if (p == 0) return true;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) companion(0, i) = a[i];
  for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1;
  const Eigen::VectorXcd roots = companion.eigenvalues();
  // Unit roots come back as 1 +- rounding; treat them as nonstationary.
  return roots.cwiseAbs().maxCoeff() < 1 - 1e-9;
}

ArDraw gen_ar(const SynthSpec& spec, Rng& rng) {
  spec.validate();
  const int p = spec.ar_order;
  ArDraw d;
  if (spec.ar_coeffs) {
    d.coeffs = *spec.ar_coeffs;
  } else {
    do {
      d.coeffs.assign(p, 0);
      for (auto& c : d.coeffs) c = rng.uniform(spec.ar_coeff_lo, spec.ar_coeff_hi);
    } while (spec.require_stationary && !ar_is_stationary(d.coeffs));
  }
  if (spec.init_values) {
    d.init = *spec.init_values;
  } else {
    d.init.assign(p, 0);
    for (auto& v : d.init) v = rng.uniform(spec.init_lo, spec.init_hi);
  }
  // history[i] = l_{i - p}
  std::vector<double> hist(d.init);
  hist.reserve(p + spec.length);
  d.values.resize(spec.length);
  for (Index t = 0; t < spec.length; ++t) {
    double v = 0;
    for (int i = 1; i <= p; ++i) v += d.coeffs[i - 1] * hist[hist.size() - i];
    if (spec.sigma_l > 0) v += rng.normal(0, spec.sigma_l);
    hist.push_back(v);
    d.values[t] = v;
  }
  return d;
}

Eigen::VectorXd periodic_state(const SynthSpec& spec) {
  const double two_pi = 2 * std::numbers::pi;
  Eigen::VectorXd z = Eigen::VectorXd::Constant(spec.length, spec.base);
  for (const auto& a : spec.atoms) {
    for (Index t = 0; t < spec.length; ++t) {
      z[t] += a.amplitude * std::cos(two_pi * a.frequency * static_cast<double>(t) + a.phase);
    }
  }
  return z;
}

Eigen::VectorXd gen_periodic(const SynthSpec& spec, Rng& rng) {
  spec.validate();
  Eigen::VectorXd p = periodic_state(spec);
  if (spec.sigma_p > 0) {
    for (Index t = 0; t < spec.length; ++t) p[t] += rng.normal(0, spec.sigma_p);
  }
  return p;
}

Eigen::VectorXd compose(const Eigen::VectorXd& l, const Eigen::VectorXd& p, Composition kind) {
  if (l.size() != p.size()) throw std::invalid_argument("compose: length mismatch");
  const Eigen::ArrayXd s = (l + p).array();
  switch (kind) {
    case Composition::linear: return s.matrix();
    case Composition::quadratic: return s.square().matrix();
    case Composition::cubic: return s.cube().matrix();
  }
  throw std::invalid_argument("compose: bad kind");
}

SynthDataset gen_dataset(const SynthSpec& spec, const std::string& id) {
  Rng rng(spec.seed);
  const auto l = gen_ar(spec, rng);
  const auto p = gen_periodic(spec, rng);
  SynthDataset out;
  out.series.id = id.empty() ? to_string(spec.compose) + "-" + std::to_string(spec.seed) : id;
  out.series.values = compose(l.values, p, spec.compose);
  out.series.t0 = 0;
  out.split.train_end = spec.length * 4 / 5;
  out.split.val_end = out.split.train_end + spec.length / 50;
  out.split.test_end = spec.length;
  return out;
}

}  // namespace depts
