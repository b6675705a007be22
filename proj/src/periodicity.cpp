#include "depts/periodicity.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include <json.hpp>

#include "depts/errors.hpp"
#include "depts/text_io.hpp"

namespace depts {

namespace {

double wrap_phase(double p) {
  const double two_pi = 2 * std::numbers::pi;
  double r = std::remainder(p, two_pi);  // in [-pi, pi]
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

}  // namespace

PeriodInit init_periods(const Series& train, const Series& val, int top_k, int budget,
                        const InitOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  if (train.size() == 0) throw DataError("init_periods: empty training series '" + train.id + "'");
  if (val.size() == 0) throw DataError("init_periods: empty validation series '" + val.id + "'");
  if (top_k < 1 || budget < 1 || budget > top_k) {
    throw std::invalid_argument("init_periods: need 1 <= J <= K, got K=" + std::to_string(top_k) +
                                ", J=" + std::to_string(budget));
  }
  validate(train);
  validate(val);

  const auto spectrum = options.spectrum == SpectrumMode::quadrature
                            ? quadrature_atoms(train.values)
                            : coeffs_to_atoms(dct2(train.values));

  // Rounding-level atoms of a (near-)constant signal are not periods.
  const double tol = 1e-10 * std::max(1.0, train.values.cwiseAbs().maxCoeff());
  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < spectrum.atoms.size(); ++k) {
    if (spectrum.atoms[k].amplitude > tol) order.push_back(k);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return spectrum.atoms[a].amplitude > spectrum.atoms[b].amplitude;
  });
  if (order.size() > static_cast<std::size_t>(top_k)) order.resize(top_k);

  PeriodInit out;
  out.coefficients.base = spectrum.base;
  const double two_pi = 2 * std::numbers::pi;
  for (auto k : order) {
    auto atom = spectrum.atoms[k];
    // Fitted on positions t - t0; re-anchor to absolute time.
    atom.phase = wrap_phase(atom.phase - two_pi * atom.frequency * static_cast<double>(train.t0));
    out.coefficients.atoms.push_back(atom);
  }
  out.mask = PeriodMask::all_off(out.coefficients.atoms.size(), budget);

  std::vector<Index> t(val.size());
  std::iota(t.begin(), t.end(), val.t0);
  Eigen::VectorXd current = Eigen::VectorXd::Constant(val.size(), out.coefficients.base);
  double best = dtw(current, val.values);
  out.report.baseline_cost = best;
  out.report.accepted_costs.push_back(best);

  Eigen::VectorXd candidate(val.size());
  for (std::size_t j = 0; j < out.coefficients.atoms.size(); ++j) {
    if (out.mask.count() >= budget) break;
    const auto& a = out.coefficients.atoms[j];
    for (std::size_t i = 0; i < t.size(); ++i) {
      candidate[i] = current[i] + a.amplitude * std::cos(two_pi * a.frequency * static_cast<double>(t[i]) + a.phase);
    }
    const double cost = dtw(candidate, val.values);
    out.report.step_costs.push_back(cost);
    if (cost < best) {
      best = cost;
      current = candidate;
      out.mask.bits[j] = 1;
      out.report.selected_indices.push_back(static_cast<int>(j));
      out.report.accepted_costs.push_back(best);
    }
  }

  out.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

std::string periods_to_json(std::span<const SeriesPeriods> doc) {
  nlohmann::ordered_json series = nlohmann::ordered_json::array();
  for (const auto& s : doc) {
    detail::check_mask(s.coefficients, s.mask);
    nlohmann::ordered_json atoms = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < s.coefficients.atoms.size(); ++k) {
      const auto& a = s.coefficients.atoms[k];
      atoms.push_back({{"amplitude", a.amplitude},
                       {"frequency", a.frequency},
                       {"phase", a.phase},
                       {"enabled", s.mask.enabled(k)}});
    }
    series.push_back({{"series_id", s.series_id},
                      {"A0", s.coefficients.base},
                      {"budget", s.mask.budget},
                      {"atoms", std::move(atoms)}});
  }
  nlohmann::ordered_json root = {{"format", "depts-periods/1"}, {"series", std::move(series)}};
  return root.dump(2) + "\n";
}

std::vector<SeriesPeriods> periods_from_json(const std::string& text) {
  std::vector<SeriesPeriods> out;
  try {
    const auto root = nlohmann::json::parse(text);
    if (root.value("format", "") != "depts-periods/1") {
      throw DataError("coefficient document: unsupported format");
    }
    for (const auto& s : root.at("series")) {
      SeriesPeriods p;
      p.series_id = s.at("series_id").get<std::string>();
      p.coefficients.base = s.at("A0").get<double>();
      for (const auto& a : s.at("atoms")) {
        p.coefficients.atoms.push_back(
            {a.at("amplitude").get<double>(), a.at("frequency").get<double>(), a.at("phase").get<double>()});
        p.mask.bits.push_back(a.at("enabled").get<bool>() ? 1 : 0);
      }
      p.mask.budget = s.value("budget", p.mask.count());
      if (p.mask.count() > p.mask.budget) {
        throw DataError("coefficient document: series '" + p.series_id + "' exceeds its budget");
      }
      out.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("coefficient document: ") + e.what());
  }
  return out;
}

void write_periods(const std::filesystem::path& path, std::span<const SeriesPeriods> doc) {
  write_file_atomic(path, periods_to_json(doc));
}

std::vector<SeriesPeriods> read_periods(const std::filesystem::path& path) {
  return periods_from_json(read_file(path));
}

}  // namespace depts
