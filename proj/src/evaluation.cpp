#include "depts/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "depts/errors.hpp"
#include "depts/text_io.hpp"

namespace depts {

namespace {

void check_keys(const PointMap& forecast, const PointMap& actual) {
  if (actual.empty()) throw DataError("metrics: empty evaluation set");
  if (forecast.size() != actual.size()) throw DataError("metrics: forecast and actual key sets differ");
  for (auto f = forecast.begin(), a = actual.begin(); a != actual.end(); ++f, ++a) {
    if (f->first != a->first) {
      throw DataError("metrics: key mismatch at (" + a->first.series_id + ", " + std::to_string(a->first.t) + ")");
    }
  }
}

double abs_sum(const PointMap& actual) {
  double s = 0;
  for (const auto& [k, v] : actual) s += std::abs(v);
  if (s == 0) throw NumericalError("metrics: actual values sum to zero in absolute value");
  return s;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double nd(const PointMap& forecast, const PointMap& actual) {
  check_keys(forecast, actual);
  double err = 0;
  for (auto f = forecast.begin(), a = actual.begin(); a != actual.end(); ++f, ++a) err += std::abs(a->second - f->second);
  return err / abs_sum(actual);
}

double nrmse(const PointMap& forecast, const PointMap& actual) {
  check_keys(forecast, actual);
  double sq = 0;
  for (auto f = forecast.begin(), a = actual.begin(); a != actual.end(); ++f, ++a) {
    const double d = a->second - f->second;
    sq += d * d;
  }
  const double n = static_cast<double>(actual.size());
  return std::sqrt(sq / n) / (abs_sum(actual) / n);
}

PointMap ensemble(std::span<const PointMap> members) {
  if (members.empty()) throw std::invalid_argument("ensemble: no members");
  for (const auto& m : members) {
    if (m.size() != members[0].size() ||
        !std::equal(m.begin(), m.end(), members[0].begin(), [](auto& a, auto& b) { return a.first == b.first; })) {
      throw std::invalid_argument("ensemble: members cover different points");
    }
  }
  PointMap out;
  std::vector<typename PointMap::const_iterator> it;
  for (const auto& m : members) it.push_back(m.begin());
  std::vector<double> vals(members.size());
  for (const auto& [key, unused] : members[0]) {
    (void)unused;
    for (std::size_t j = 0; j < members.size(); ++j) vals[j] = (it[j]++)->second;
    out.emplace_hint(out.end(), key, median_of(vals));
  }
  return out;
}

ForecastTable ensemble_rows(std::span<const ForecastTable> members) {
  if (members.empty()) throw std::invalid_argument("ensemble: no members");
  const auto& first = members[0];
  for (const auto& m : members) {
    if (m.size() != first.size()) throw std::invalid_argument("ensemble: members cover different points");
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i].series_id != first[i].series_id || m[i].t != first[i].t) {
        throw std::invalid_argument("ensemble: members cover different points");
      }
    }
  }
  const std::size_t n = members.size();
  ForecastTable out(first.size());
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < first.size(); ++i) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return members[a][i].forecast < members[b][i].forecast; });
    auto row = first[i];
    const auto& lo = members[order[(n - 1) / 2]][i];
    const auto& hi = members[order[n / 2]][i];
    if (n % 2) {
      row.forecast = lo.forecast;
      row.local_part = lo.local_part;
      row.periodic_part = lo.periodic_part;
    } else {
      row.forecast = 0.5 * (lo.forecast + hi.forecast);
      row.local_part = 0.5 * (lo.local_part + hi.local_part);
      row.periodic_part = 0.5 * (lo.periodic_part + hi.periodic_part);
    }
    out[i] = row;
  }
  return out;
}

PointMap forecast_map(const ForecastTable& rows) {
  PointMap m;
  for (const auto& r : rows) {
    if (!m.emplace(PointKey{r.series_id, r.t}, r.forecast).second) {
      throw DataError("forecast table: duplicate point (" + r.series_id + ", " + std::to_string(r.t) + ")");
    }
  }
  return m;
}

PointMap actual_map(const ForecastTable& rows) {
  PointMap m;
  for (const auto& r : rows) m.emplace(PointKey{r.series_id, r.t}, r.actual);
  return m;
}

void write_forecast_csv(const std::filesystem::path& path, const ForecastTable& rows) {
  std::string out = "series_id,t,actual,forecast,local_part,periodic_part\n";
  for (const auto& r : rows) {
    out += r.series_id;
    out += ',' + std::to_string(r.t);
    for (double v : {r.actual, r.forecast, r.local_part, r.periodic_part}) out += ',' + format_double(v);
    out += '\n';
  }
  write_file_atomic(path, out);
}

ForecastTable read_forecast_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || trim(line) != "series_id,t,actual,forecast,local_part,periodic_part") {
    throw DataError(path.string() + ": expected header series_id,t,actual,forecast,local_part,periodic_part");
  }
  ForecastTable rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_fields(line, ',');
    const std::string where = path.string() + ":" + std::to_string(lineno) + ": ";
    if (f.size() != 6) throw DataError(where + "expected 6 fields");
    ForecastRow r;
    r.series_id = std::string(trim(f[0]));
    r.t = parse_int(f[1], where + "t");
    r.actual = parse_double(f[2], where + "actual");
    r.forecast = parse_double(f[3], where + "forecast");
    r.local_part = parse_double(f[4], where + "local_part");
    r.periodic_part = parse_double(f[5], where + "periodic_part");
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<Index> rolling_anchors(Index begin, Index end, Index horizon) {
  if (horizon < 1) throw std::invalid_argument("rolling_anchors: horizon must be positive");
  std::vector<Index> a;
  for (Index t = begin; t < end; t += horizon) a.push_back(t);
  return a;
}

ForecastTable forecast_range(const TrainedModel& model, std::span<const Series> series, Index begin, Index end) {
  if (series.size() != model.periods.size()) {
    throw DataError("forecast: model was trained on " + std::to_string(model.periods.size()) + " series, data has " +
                    std::to_string(series.size()));
  }
  const Index horizon = model.network.shape.horizon;
  const auto anchors = rolling_anchors(begin, end, horizon);
  ForecastTable rows;
  for (std::size_t s = 0; s < series.size(); ++s) {
    if (series[s].id != model.periods[s].series_id) {
      throw DataError("forecast: series '" + series[s].id + "' does not match model series '" +
                      model.periods[s].series_id + "'");
    }
    if (begin - model.network.shape.lookback < series[s].t0 || end > series[s].end()) {
      throw DataError("forecast: series '" + series[s].id + "' lacks history or actuals for the requested range");
    }
    const std::vector<std::size_t> idx(anchors.size(), s);
    const auto dec = forecast(model, series, idx, anchors);
    for (std::size_t j = 0; j < anchors.size(); ++j) {
      for (Index h = 0; h < horizon && anchors[j] + h < end; ++h) {
        const Index t = anchors[j] + h;
        rows.push_back({series[s].id, t, series[s].at(t), dec.total(h, j), dec.local_part(h, j),
                        dec.periodic_part(h, j)});
      }
    }
  }
  return rows;
}

EvalReport evaluate(const ForecastTable& rows, int horizon, int members, std::span<const Series> truth) {
  EvalReport rep;
  rep.horizon = horizon;
  rep.members = members;
  std::unordered_map<std::string, const Series*> by_id;
  for (const auto& s : truth) by_id[s.id] = &s;

  PointMap fc = forecast_map(rows), act;
  std::map<std::string, std::pair<PointMap, PointMap>> per;
  std::vector<std::string> order;
  for (const auto& r : rows) {
    double a = r.actual;
    if (!truth.empty()) {
      const auto it = by_id.find(r.series_id);
      if (it == by_id.end()) throw DataError("eval: series '" + r.series_id + "' not in data");
      if (r.t < it->second->t0 || r.t >= it->second->end()) {
        throw DataError("eval: point (" + r.series_id + ", " + std::to_string(r.t) + ") outside the data");
      }
      a = it->second->at(r.t);
    }
    act.emplace(PointKey{r.series_id, r.t}, a);
    auto [slot, fresh] = per.try_emplace(r.series_id);
    if (fresh) order.push_back(r.series_id);
    slot->second.first.emplace(PointKey{r.series_id, r.t}, r.forecast);
    slot->second.second.emplace(PointKey{r.series_id, r.t}, a);
  }
  rep.nd = nd(fc, act);
  rep.nrmse = nrmse(fc, act);
  for (const auto& id : order) {
    const auto& [f, a] = per.at(id);
    rep.per_series.push_back({id, a.size(), nd(f, a), nrmse(f, a)});
  }
  return rep;
}

std::string report_table(const EvalReport& r) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "horizon %d, members %d\n", r.horizon, r.members);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-24s %8s %12s %12s\n", "series", "points", "nd", "nrmse");
  out += buf;
  for (const auto& s : r.per_series) {
    std::snprintf(buf, sizeof buf, "%-24s %8zu %12.6f %12.6f\n", s.series_id.c_str(), s.points, s.nd, s.nrmse);
    out += buf;
  }
  std::size_t total = 0;
  for (const auto& s : r.per_series) total += s.points;
  std::snprintf(buf, sizeof buf, "%-24s %8zu %12.6f %12.6f\n", "(all)", total, r.nd, r.nrmse);
  out += buf;
  return out;
}

std::string report_json(const EvalReport& r) {
  nlohmann::ordered_json per = nlohmann::ordered_json::array();
  for (const auto& s : r.per_series) {
    per.push_back({{"series_id", s.series_id}, {"points", s.points}, {"nd", s.nd}, {"nrmse", s.nrmse}});
  }
  nlohmann::ordered_json j = {{"horizon", r.horizon}, {"members", r.members}, {"nd", r.nd},
                              {"nrmse", r.nrmse},     {"per_series", std::move(per)}};
  return j.dump(2) + "\n";
}

}  // namespace depts
