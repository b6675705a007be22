#include <filesystem>

#include <doctest.h>

#include "depts/errors.hpp"
#include "depts/evaluation.hpp"

using namespace depts;

namespace {

PointMap points(std::initializer_list<double> v, const std::string& id = "a") {
  PointMap m;
  Index t = 0;
  for (double x : v) m[{id, t++}] = x;
  return m;
}

}  // namespace

TEST_CASE("nd and nrmse fixtures") {
  const auto x = points({1, 2, 3});
  CHECK(nd(x, x) == 0);
  CHECK(nrmse(x, x) == 0);
  CHECK(nd(points({2, 2, 3}), x) == doctest::Approx(1.0 / 6).epsilon(1e-14));
  CHECK(nrmse(points({2, 2, 3}), x) == doctest::Approx(std::sqrt(1.0 / 3) / 2).epsilon(1e-14));
  CHECK(nrmse(points({0}), points({2})) == 1);
  CHECK_THROWS_AS(nd(points({1, 1}), points({0, 0})), NumericalError);
  CHECK_THROWS_AS(nd(points({1}), points({1, 2})), DataError);
  CHECK_THROWS_AS(nd(points({1}, "b"), points({1})), DataError);
}

TEST_CASE("aggregate nd differs from mean per-series nd") {
  ForecastTable rows{{"a", 0, 1, 2, 2, 0}, {"b", 0, 100, 101, 100, 1}};
  const auto r = evaluate(rows, 1, 1);
  CHECK(r.nd == doctest::Approx(2.0 / 101));
  REQUIRE(r.per_series.size() == 2);
  CHECK(r.per_series[0].nd == 1);
  CHECK(r.per_series[1].nd == doctest::Approx(0.01));
  CHECK(report_table(r).find("(all)") != std::string::npos);
  CHECK(report_json(r).find("\"per_series\"") != std::string::npos);
}

TEST_CASE("ensemble median") {
  std::vector<PointMap> one{points({4, 5})};
  CHECK(ensemble(one) == one[0]);
  std::vector<PointMap> three{points({1}), points({3}), points({100})};
  CHECK(ensemble(three).at({"a", 0}) == 3);
  std::vector<PointMap> two{points({1}), points({3})};
  CHECK(ensemble(two).at({"a", 0}) == 2);
  CHECK_THROWS_AS(ensemble(std::vector<PointMap>{}), std::invalid_argument);
  std::vector<PointMap> mismatch{points({1}), points({1, 2})};
  CHECK_THROWS_AS(ensemble(mismatch), std::invalid_argument);
}

TEST_CASE("ensemble rows keep forecast = local + periodic") {
  std::vector<ForecastTable> m{{{"a", 0, 5, 3, 1, 2}}, {{"a", 0, 5, 10, 4, 6}}, {{"a", 0, 5, 4, 3.5, 0.5}}};
  auto r = ensemble_rows(m);
  CHECK(r[0].forecast == 4);
  CHECK(r[0].local_part == 3.5);
  CHECK(r[0].periodic_part == 0.5);
  m.pop_back();
  r = ensemble_rows(m);
  CHECK(r[0].forecast == 6.5);
  CHECK(r[0].local_part + r[0].periodic_part == r[0].forecast);
}

TEST_CASE("forecast CSV round trip") {
  ForecastTable rows{{"a", 3, 1.5, 1.25, 1, 0.25}, {"b", -2, 0.1, 0.2, 0.3, -0.1}};
  const auto p = std::filesystem::temp_directory_path() / "depts_forecast.csv";
  write_forecast_csv(p, rows);
  const auto back = read_forecast_csv(p);
  REQUIRE(back.size() == 2);
  CHECK(back[1].series_id == "b");
  CHECK(back[1].t == -2);
  CHECK(back[1].periodic_part == -0.1);
  CHECK(back[0].forecast == 1.25);
}

TEST_CASE("rolling anchors cover the range") {
  const auto a = rolling_anchors(100, 150, 24);
  CHECK(a == std::vector<Index>{100, 124, 148});
  CHECK(rolling_anchors(0, 0, 5).empty());
}
