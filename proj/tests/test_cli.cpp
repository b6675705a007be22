#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "depts/evaluation.hpp"
#include "depts/periodicity.hpp"
#include "depts/series.hpp"
#include "depts/text_io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "depts_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(DEPTS_CLI) + " " + args + " > " + (kDir / "last.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string p(const std::string& name) { return (kDir / name).string(); }

struct Setup {
  Setup() {
    fs::remove_all(kDir);
    fs::create_directories(kDir);
  }
};

}  // namespace

TEST_CASE("synth command") {
  Setup s;
  CHECK(run("synth --kind cubic --seed 7 --out " + p("d.csv")) == 0);
  CHECK(run("synth --kind cubic --seed 7 --out " + p("e.csv")) == 0);
  const auto a = depts::read_file(p("d.csv")), b = depts::read_file(p("e.csv"));
  CHECK(a == b);
  CHECK(std::count(a.begin(), a.end(), '\n') == 5001);
  CHECK(run("synth --kind bogus --out " + p("x.csv")) == 1);
  CHECK(run("synth --out " + p("x.csv")) == 1);
  CHECK(run("") == 1);
}

TEST_CASE("init-periods command") {
  Setup s;
  REQUIRE(run("synth --kind cubic --seed 7 --out " + p("d.csv")) == 0);
  CHECK(run("init-periods --data " + p("d.csv") + " -K 128 -J 8 --train-end 4000 --val-end 4100 --out " +
            p("p.json")) == 0);
  const auto doc = depts::read_periods(p("p.json"));
  REQUIRE(doc.size() == 1);
  CHECK(doc[0].mask.count() <= 8);
  CHECK(run("init-periods --data " + p("missing.csv") + " --out " + p("q.json")) == 2);

  std::ofstream(p("c.csv")) << "series_id,t,value\n";
  std::ofstream c(p("c.csv"), std::ios::app);
  for (int t = 0; t < 300; ++t) c << "c," << t << ",4.5\n";
  c.close();
  CHECK(run("init-periods --data " + p("c.csv") + " -K 8 -J 2 --out " + p("c.json")) == 0);
  const auto cdoc = depts::read_periods(p("c.json"));
  REQUIRE(cdoc.size() == 1);
  CHECK(cdoc[0].mask.count() == 0);
  CHECK(cdoc[0].coefficients.base == doctest::Approx(4.5));
}

TEST_CASE("train, forecast, eval and decompose commands") {
  Setup s;
  REQUIRE(run("synth --kind linear --seed 3 --length 800 --out " + p("d.csv")) == 0);
  std::ofstream(p("m.json")) << R"({
    "data": "d.csv",
    "split": {"train_end": 640, "val_end": 656, "test_end": 800},
    "periods": {"K": 32, "J": 4},
    "training": {"iterations": 20, "batch_size": 8, "horizon": 8, "layers": 2, "width": 8,
                 "loss": "mase", "mase_lag": 8},
    "members": [{"lookback_multiplier": 2, "seed": 1}, {"lookback_multiplier": 3, "seed": 2}],
    "output": "run",
    "threads": 1
  })";
  REQUIRE(run("train --config " + p("m.json")) == 0);
  CHECK(fs::exists(kDir / "run" / "member-0.ckpt"));
  CHECK(fs::exists(kDir / "run" / "member-1.ckpt"));
  const auto rows = depts::read_forecast_csv(p("run/forecast.csv"));
  CHECK(rows.size() == 144);
  for (const auto& r : rows) CHECK(r.forecast == doctest::Approx(r.local_part + r.periodic_part).epsilon(1e-12));

  CHECK(run("forecast --checkpoint " + p("run/member-0.ckpt") + " --checkpoint " + p("run/member-1.ckpt") +
            " --data " + p("d.csv") + " --out " + p("f.csv")) == 0);
  CHECK(depts::read_file(p("f.csv")) == depts::read_file(p("run/forecast.csv")));

  CHECK(run("eval --forecast " + p("f.csv") + " --data " + p("d.csv") + " --out " + p("r.json")) == 0);
  CHECK(fs::exists(kDir / "r.json"));

  // A perfect forecast file scores nd = 0.
  auto perfect = rows;
  for (auto& r : perfect) r.forecast = r.actual;
  depts::write_forecast_csv(p("perfect.csv"), perfect);
  CHECK(run("eval --forecast " + p("perfect.csv") + " --out " + p("perfect.json")) == 0);
  CHECK(depts::read_file(p("perfect.json")).find("\"nd\": 0.0") != std::string::npos);

  CHECK(run("decompose --checkpoint " + p("run/member-0.ckpt") + " --data " + p("d.csv") + " --out " +
            p("dec.csv")) == 0);
  const auto dec = depts::read_file(p("dec.csv"));
  CHECK(std::count(dec.begin(), dec.end(), '\n') == 1 + 2 * (16 + 8));

  CHECK(run("forecast --checkpoint " + p("nope.ckpt") + " --data " + p("d.csv") + " --out " + p("g.csv")) == 2);
  CHECK(run("train --config " + p("missing.json")) == 2);
}
