#pragma once

// The periodic state model g(t) = A0 + sum_k M_k A_k cos(2 pi F_k t + P_k)
// over absolute time, and its data-driven initialization.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "depts/series.hpp"
#include "depts/signal.hpp"

namespace depts {

template <typename Scalar>
using PeriodicCoefficients = CosineSpectrum<Scalar>;

/// Enabled atoms. A0 is never masked.
struct PeriodMask {
  std::vector<std::uint8_t> bits;
  int budget = 0;

  static PeriodMask all_on(std::size_t k) { return {std::vector<std::uint8_t>(k, 1), static_cast<int>(k)}; }
  static PeriodMask all_off(std::size_t k, int budget) { return {std::vector<std::uint8_t>(k, 0), budget}; }

  std::size_t size() const { return bits.size(); }
  bool enabled(std::size_t k) const { return bits[k] != 0; }
  int count() const {
    int n = 0;
    for (auto b : bits) n += b != 0;
    return n;
  }
};

namespace detail {
template <typename Scalar>
void check_mask(const PeriodicCoefficients<Scalar>& phi, const PeriodMask& mask) {
  if (mask.size() != phi.atoms.size()) {
    throw std::invalid_argument("period mask has " + std::to_string(mask.size()) +
                                " bits for " + std::to_string(phi.atoms.size()) + " atoms");
  }
}
}  // namespace detail

template <typename Scalar>
Vec<Scalar> eval_g(const PeriodicCoefficients<Scalar>& phi, const PeriodMask& mask,
                   std::span<const Index> t) {
  detail::check_mask(phi, mask);
  const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  Vec<Scalar> z = Vec<Scalar>::Constant(static_cast<Eigen::Index>(t.size()), phi.base);
  for (std::size_t k = 0; k < phi.atoms.size(); ++k) {
    if (!mask.enabled(k)) continue;
    const auto& a = phi.atoms[k];
    for (std::size_t i = 0; i < t.size(); ++i) {
      z[i] += a.amplitude * std::cos(two_pi * a.frequency * static_cast<Scalar>(t[i]) + a.phase);
    }
  }
  return z;
}

/// g over the contiguous range [begin, begin + count).
template <typename Scalar>
Vec<Scalar> eval_g_range(const PeriodicCoefficients<Scalar>& phi, const PeriodMask& mask, Index begin,
                         Index count) {
  std::vector<Index> t(count);
  for (Index i = 0; i < count; ++i) t[i] = begin + i;
  return eval_g(phi, mask, std::span<const Index>(t));
}

/// Gradient of sum_i upstream_i * z_i, shaped like phi. Masked atoms get zeros.
template <typename Scalar, typename Derived>
PeriodicCoefficients<Scalar> grad_g(const PeriodicCoefficients<Scalar>& phi, const PeriodMask& mask,
                                    std::span<const Index> t, const Eigen::MatrixBase<Derived>& upstream) {
  detail::check_mask(phi, mask);
  if (static_cast<std::size_t>(upstream.size()) != t.size()) {
    throw std::invalid_argument("grad_g: upstream length differs from time indices");
  }
  const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  PeriodicCoefficients<Scalar> g;
  g.base = upstream.sum();
  g.atoms.resize(phi.atoms.size());
  for (std::size_t k = 0; k < phi.atoms.size(); ++k) {
    if (!mask.enabled(k)) continue;
    const auto& a = phi.atoms[k];
    auto& d = g.atoms[k];
    for (std::size_t i = 0; i < t.size(); ++i) {
      const Scalar ti = static_cast<Scalar>(t[i]);
      const Scalar arg = two_pi * a.frequency * ti + a.phase;
      const Scalar c = std::cos(arg), s = std::sin(arg);
      const Scalar u = upstream[i];
      d.amplitude += u * c;
      d.frequency -= u * a.amplitude * two_pi * ti * s;
      d.phase -= u * a.amplitude * s;
    }
  }
  return g;
}

enum class SpectrumMode {
  quadrature,   // DCT-II + DST-II pairs on the integer-cycle grid (default)
  cosine_only,  // DCT-II bins mapped by coeffs_to_atoms
};

struct InitOptions {
  SpectrumMode spectrum = SpectrumMode::quadrature;
};

struct InitReport {
  std::vector<int> selected_indices;  // positions in the amplitude-sorted atom list
  double baseline_cost = 0;           // DTW of the A0-only model
  std::vector<double> step_costs;     // DTW of each examined candidate
  std::vector<double> accepted_costs; // running best after each acceptance
  double wall_seconds = 0;
};

struct PeriodInit {
  PeriodicCoefficients<double> coefficients;
  PeriodMask mask;
  InitReport report;
};

/// Two-stage period initialization: spectral top-K atoms from `train`, then a
/// greedy pass in amplitude order that keeps an atom iff it strictly lowers
/// the DTW discrepancy against `val`, until J atoms are kept.
PeriodInit init_periods(const Series& train, const Series& val, int top_k, int budget,
                        const InitOptions& options = {});

/// Per-series coefficient document.
struct SeriesPeriods {
  std::string series_id;
  PeriodicCoefficients<double> coefficients;
  PeriodMask mask;
};

void write_periods(const std::filesystem::path& path, std::span<const SeriesPeriods> doc);
std::vector<SeriesPeriods> read_periods(const std::filesystem::path& path);
std::string periods_to_json(std::span<const SeriesPeriods> doc);
std::vector<SeriesPeriods> periods_from_json(const std::string& text);

}  // namespace depts
