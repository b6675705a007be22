#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "depts/series.hpp"
#include "depts/training.hpp"

namespace depts {

struct PointKey {
  std::string series_id;
  Index t = 0;
  auto operator<=>(const PointKey&) const = default;
};

/// Values over the evaluation space, keyed by (series, t).
using PointMap = std::map<PointKey, double>;

/// sum |x - xhat| / sum |x| over all keys.
double nd(const PointMap& forecast, const PointMap& actual);
/// sqrt(mean (x - xhat)^2) / mean |x| over all keys.
double nrmse(const PointMap& forecast, const PointMap& actual);

/// Pointwise median; an even member count takes the mean of the two middle values.
PointMap ensemble(std::span<const PointMap> members);

struct ForecastRow {
  std::string series_id;
  Index t = 0;
  double actual = 0;
  double forecast = 0;
  double local_part = 0;
  double periodic_part = 0;
};

using ForecastTable = std::vector<ForecastRow>;

/// Median of member rows. The decomposition is taken from the same member(s)
/// as the median forecast so that forecast = local_part + periodic_part.
ForecastTable ensemble_rows(std::span<const ForecastTable> members);

PointMap forecast_map(const ForecastTable& rows);
PointMap actual_map(const ForecastTable& rows);

void write_forecast_csv(const std::filesystem::path& path, const ForecastTable& rows);
ForecastTable read_forecast_csv(const std::filesystem::path& path);

/// Anchors of rolling, non-overlapping H-step windows starting at
/// `begin` and covering [begin, end). The last window may run past `end`.
std::vector<Index> rolling_anchors(Index begin, Index end, Index horizon);

/// Forecasts of one model over [begin, end) of every series, anchored on
/// true history. Points past `end` are dropped.
ForecastTable forecast_range(const TrainedModel& model, std::span<const Series> series, Index begin, Index end);

struct SeriesMetrics {
  std::string series_id;
  std::size_t points = 0;
  double nd = 0;
  double nrmse = 0;
};

struct EvalReport {
  int horizon = 0;
  int members = 0;
  double nd = 0;     // aggregate over all points
  double nrmse = 0;  // aggregate over all points
  std::vector<SeriesMetrics> per_series;
};

// Actuals are taken from `truth` when given, else from the rows' actual column.
EvalReport evaluate(const ForecastTable& rows, int horizon, int members, std::span<const Series> truth = {});

std::string report_table(const EvalReport& report);
std::string report_json(const EvalReport& report);

}  // namespace depts
