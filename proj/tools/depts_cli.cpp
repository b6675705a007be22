// depts: command-line pipeline. Commands talk to each other only through
// files (CSV, coefficient documents, checkpoints, manifests).
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "depts/checkpoint.hpp"
#include "depts/errors.hpp"
#include "depts/evaluation.hpp"
#include "depts/experiment.hpp"
#include "depts/synthetic.hpp"
#include "depts/text_io.hpp"

namespace fs = std::filesystem;
using namespace depts;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void cmd_synth(const std::string& kind, std::uint64_t seed, double sigma_l, double sigma_p, Index length,
               const fs::path& out) {
  SynthSpec spec;
  try {
    spec.compose = parse_composition(kind);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  spec.seed = seed;
  spec.sigma_l = sigma_l;
  spec.sigma_p = sigma_p;
  spec.length = length;
  const auto ds = gen_dataset(spec);
  write_csv(out, std::span<const Series>(&ds.series, 1));
  std::printf("wrote %s: series %s, %lld points, split %lld/%lld/%lld\n", out.c_str(), ds.series.id.c_str(),
              static_cast<long long>(ds.series.size()), static_cast<long long>(ds.split.train_end),
              static_cast<long long>(ds.split.val_end), static_cast<long long>(ds.split.test_end));
}

SplitSpec resolve_split(const std::vector<Series>& data, std::optional<Index> train_end, std::optional<Index> val_end,
                        std::optional<Index> test_end) {
  if (data.empty()) throw DataError("no series in input");
  SplitSpec s = default_split(data.front());
  if (train_end) s.train_end = *train_end;
  if (val_end) s.val_end = *val_end;
  if (test_end) s.test_end = *test_end;
  return s;
}

void cmd_init_periods(const fs::path& data_path, int k, int j, const SplitSpec* fixed, std::optional<Index> train_end,
                      std::optional<Index> val_end, bool cosine_only, const fs::path& out) {
  const auto data = load_csv(data_path);
  const auto split = fixed ? *fixed : resolve_split(data, train_end, val_end, std::nullopt);
  InitOptions opt;
  if (cosine_only) opt.spectrum = SpectrumMode::cosine_only;
  std::vector<SeriesPeriods> doc;
  for (const auto& s : data) {
    SplitSpec local = split;
    local.test_end = s.end();
    const auto parts = depts::split(s, local);
    auto init = init_periods(parts.train, parts.val, k, j, opt);
    std::printf("%s: %d of %zu atoms enabled, val DTW %.6g -> %.6g (%.3f s)\n", s.id.c_str(), init.mask.count(),
                init.coefficients.atoms.size(), init.report.baseline_cost, init.report.accepted_costs.back(),
                init.report.wall_seconds);
    doc.push_back({s.id, std::move(init.coefficients), std::move(init.mask)});
  }
  write_periods(out, doc);
}

void cmd_train(const fs::path& manifest_path, std::optional<std::uint64_t> seed, std::optional<fs::path> out) {
  auto m = read_manifest(manifest_path);
  if (seed) {
    for (auto& e : m.members) e.seed += *seed;
  }
  if (out) m.output = *out;
  const auto r = run_experiment(m);
  for (std::size_t i = 0; i < r.models.size(); ++i) {
    std::printf("member %zu: lookback %d, seed %llu, final loss %.6g -> %s\n", i, r.models[i].network.shape.lookback,
                static_cast<unsigned long long>(r.models[i].config.seed), r.models[i].final_loss,
                r.checkpoints[i].c_str());
  }
  std::printf("%s", report_table(r.report).c_str());
}

void cmd_forecast(const std::vector<fs::path>& checkpoints, const fs::path& data_path, std::optional<Index> begin,
                  std::optional<Index> end, const fs::path& out) {
  if (checkpoints.empty()) throw UsageError("forecast: at least one --checkpoint is required");
  const auto data = load_csv(data_path);
  std::vector<ForecastTable> tables;
  for (const auto& c : checkpoints) {
    const auto model = load_checkpoint(c);
    tables.push_back(forecast_range(model, data, begin.value_or(model.split.val_end),
                                    end.value_or(model.split.test_end)));
  }
  const auto rows = ensemble_rows(tables);
  write_forecast_csv(out, rows);
  std::printf("wrote %s: %zu points from %zu member(s)\n", out.c_str(), rows.size(), checkpoints.size());
}

void cmd_eval(const fs::path& forecast_path, const std::optional<fs::path>& data_path, int horizon, int members,
              const std::optional<fs::path>& out) {
  const auto rows = read_forecast_csv(forecast_path);
  std::vector<Series> truth;
  if (data_path) truth = load_csv(*data_path);
  const auto rep = evaluate(rows, horizon, members, truth);
  std::printf("%s", report_table(rep).c_str());
  if (out) write_file_atomic(*out, report_json(rep));
}

// Per-layer terms of one window: backcast rows for [anchor - L, anchor),
// forecast rows for [anchor, anchor + H).
void cmd_decompose(const fs::path& checkpoint, const fs::path& data_path, const std::string& series_id,
                   std::optional<Index> anchor, const fs::path& out) {
  const auto model = load_checkpoint(checkpoint);
  const auto data = load_csv(data_path);
  std::size_t s = data.size();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (series_id.empty() ? i == 0 : data[i].id == series_id) s = i;
  }
  if (s == data.size()) throw DataError("decompose: series '" + series_id + "' not found");
  const Index a = anchor.value_or(model.split.val_end);
  const Index lookback = model.network.shape.lookback, horizon = model.network.shape.horizon;
  if (a - lookback < data[s].t0 || a + horizon > data[s].end()) throw DataError("decompose: window outside the data");
  const std::size_t idx[1] = {s};
  const Index anchors[1] = {a};
  const auto dec = forecast(model, data, idx, anchors);
  const auto& p = model.periods[s];
  const auto z = eval_g_range(p.coefficients, p.mask, a - lookback, lookback + horizon);

  std::string csv = "series_id,t,region,actual,periodic_state,layer,local,periodic\n";
  auto row = [&](Index t, const char* region, std::size_t layer, double u, double v) {
    csv += data[s].id + ',' + std::to_string(t) + ',' + region + ',' + format_double(data[s].at(t)) + ',' +
           format_double(z[t - a + lookback]) + ',' + std::to_string(layer) + ',' + format_double(u) + ',' +
           format_double(v) + '\n';
  };
  for (std::size_t l = 0; l < dec.layers.size(); ++l) {
    const auto& tr = dec.layers[l];
    for (Index i = 0; i < lookback; ++i) row(a - lookback + i, "backcast", l + 1, tr.u_back(i, 0), tr.v_back(i, 0));
    const bool fore_added = !flags_for(model.config.variant).drop_periodic_forecast;
    for (Index i = 0; i < horizon; ++i) {
      row(a + i, "forecast", l + 1, tr.u_fore(i, 0), fore_added ? tr.v_fore(i, 0) : 0.0);
    }
  }
  write_file_atomic(out, csv);
  std::printf("wrote %s: %zu layers, anchor %lld\n", out.c_str(), dec.layers.size(), static_cast<long long>(a));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DEPTS periodic time-series forecasting"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string kind = "linear";
  fs::path out;
  double sigma_l = 1, sigma_p = 1;
  Index length = 5000;
  auto* synth = app.add_subcommand("synth", "generate a synthetic periodic series");
  synth->add_option("--kind", kind, "linear, quadratic or cubic")->required();
  synth->add_option("--seed", seed, "random seed");
  synth->add_option("--sigma-l", sigma_l, "AR noise standard deviation");
  synth->add_option("--sigma-p", sigma_p, "periodic noise standard deviation");
  synth->add_option("--length", length, "series length")->check(CLI::PositiveNumber);
  synth->add_option("--out", out, "output CSV")->required();

  fs::path data, config;
  int top_k = 128, budget = 8;
  bool cosine_only = false;
  std::optional<Index> train_end, val_end, begin, end, anchor;
  auto* init = app.add_subcommand("init-periods", "initialize periodicity coefficients per series");
  init->add_option("--data", data, "input CSV")->required();
  init->add_option("-K,--top-k", top_k, "candidate atoms kept from the spectrum");
  init->add_option("-J,--budget", budget, "maximum enabled atoms");
  init->add_option("--train-end", train_end, "exclusive end of the train region");
  init->add_option("--val-end", val_end, "exclusive end of the validation region");
  init->add_option("--config", config, "manifest supplying split, K and J");
  init->add_flag("--cosine-only", cosine_only, "use DCT bins alone instead of DCT/DST pairs");
  init->add_option("--out", out, "output coefficient document")->required();

  std::optional<std::uint64_t> train_seed;
  std::optional<fs::path> train_out;
  auto* trn = app.add_subcommand("train", "train the ensemble described by a manifest");
  trn->add_option("--config", config, "experiment manifest (JSON)")->required();
  trn->add_option("--seed", train_seed, "offset added to every member seed");
  trn->add_option("--out", train_out, "output directory (overrides the manifest)");

  std::vector<fs::path> checkpoints;
  auto* fc = app.add_subcommand("forecast", "forecast with one or more checkpoints (median ensemble)");
  fc->add_option("--checkpoint", checkpoints, "checkpoint file (repeatable)")->required();
  fc->add_option("--data", data, "input CSV")->required();
  fc->add_option("--begin", begin, "first forecast time (default: the checkpoint's val_end)");
  fc->add_option("--end", end, "exclusive last forecast time (default: test_end)");
  fc->add_option("--out", out, "output forecast CSV")->required();

  fs::path forecast_path;
  std::optional<fs::path> eval_data, eval_out;
  int horizon = 0, members = 1;
  auto* ev = app.add_subcommand("eval", "compute nd and nrmse of a forecast CSV");
  ev->add_option("--forecast", forecast_path, "forecast CSV")->required();
  ev->add_option("--data", eval_data, "take actuals from this CSV instead of the forecast file");
  ev->add_option("--horizon", horizon, "horizon recorded in the report");
  ev->add_option("--members", members, "member count recorded in the report");
  ev->add_option("--out", eval_out, "write the JSON report here");

  fs::path checkpoint;
  std::string series_id;
  auto* dec = app.add_subcommand("decompose", "dump per-layer local and periodic terms of one window");
  dec->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  dec->add_option("--data", data, "input CSV")->required();
  dec->add_option("--series", series_id, "series id (default: first)");
  dec->add_option("--anchor", anchor, "forecast start time (default: the checkpoint's val_end)");
  dec->add_option("--out", out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*synth) {
      cmd_synth(kind, seed, sigma_l, sigma_p, length, out);
    } else if (*init) {
      std::optional<ExperimentManifest> m;
      if (!config.empty()) {
        m = read_manifest(config);
        if (init->count("--top-k") == 0) top_k = m->top_k;
        if (init->count("--budget") == 0) budget = m->budget;
      }
      const SplitSpec* fixed = m && m->split.test_end > 0 && !train_end && !val_end ? &m->split : nullptr;
      cmd_init_periods(data, top_k, budget, fixed, train_end, val_end, cosine_only, out);
    } else if (*trn) {
      cmd_train(config, train_seed, train_out);
    } else if (*fc) {
      cmd_forecast(checkpoints, data, begin, end, out);
    } else if (*ev) {
      cmd_eval(forecast_path, eval_data, horizon, members, eval_out);
    } else if (*dec) {
      cmd_decompose(checkpoint, data, series_id, anchor, out);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
