#include "depts/experiment.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "depts/checkpoint.hpp"
#include "depts/errors.hpp"
#include "depts/text_io.hpp"

namespace depts {

ExperimentManifest manifest_from_json(const std::string& text, const std::filesystem::path& base_dir) {
  ExperimentManifest m;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };
  try {
    const auto j = nlohmann::json::parse(text);
    m.data = resolve(j.at("data").get<std::string>());
    if (j.contains("split")) {
      const auto& s = j.at("split");
      m.split = {s.at("train_end").get<Index>(), s.at("val_end").get<Index>(), s.at("test_end").get<Index>()};
    }
    if (j.contains("periods")) {
      const auto& p = j.at("periods");
      m.top_k = p.value("K", m.top_k);
      m.budget = p.value("J", m.budget);
      if (p.contains("file")) m.periods = resolve(p.at("file").get<std::string>());
    }
    if (j.contains("training")) m.training = config_from_json(j.at("training").dump());
    if (j.contains("members")) {
      for (const auto& e : j.at("members")) {
        m.members.push_back({e.value("lookback_multiplier", m.training.lookback_multiplier),
                             e.value("seed", m.training.seed)});
      }
    } else {
      m.members.push_back({m.training.lookback_multiplier, m.training.seed});
    }
    m.output = resolve(j.value("output", m.output.string()));
    m.threads = j.value("threads", m.threads);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("manifest: ") + e.what());
  }
  if (m.members.empty()) throw DataError("manifest: members list is empty");
  return m;
}

std::string manifest_to_json(const ExperimentManifest& m) {
  nlohmann::ordered_json members = nlohmann::ordered_json::array();
  for (const auto& e : m.members) members.push_back({{"lookback_multiplier", e.lookback_multiplier}, {"seed", e.seed}});
  nlohmann::ordered_json periods = {{"K", m.top_k}, {"J", m.budget}};
  if (m.periods) periods["file"] = m.periods->string();
  nlohmann::ordered_json j = {
      {"data", m.data.string()},
      {"split", {{"train_end", m.split.train_end}, {"val_end", m.split.val_end}, {"test_end", m.split.test_end}}},
      {"periods", std::move(periods)},
      {"training", nlohmann::ordered_json::parse(config_to_json(m.training))},
      {"members", std::move(members)},
      {"output", m.output.string()},
      {"threads", m.threads},
  };
  return j.dump(2) + "\n";
}

ExperimentManifest read_manifest(const std::filesystem::path& path) {
  return manifest_from_json(read_file(path), path.parent_path());
}

SplitSpec default_split(const Series& s) {
  const Index n = s.size();
  return {s.t0 + n * 4 / 5, s.t0 + n * 4 / 5 + n / 50, s.end()};
}

std::vector<SeriesPeriods> initialize_periods(std::span<const Series> data, const SplitSpec& split, int top_k,
                                              int budget, const InitOptions& options) {
  std::vector<SeriesPeriods> out;
  for (const auto& s : data) {
    const auto parts = depts::split(s, split);
    auto init = init_periods(parts.train, parts.val, top_k, budget, options);
    out.push_back({s.id, std::move(init.coefficients), std::move(init.mask)});
  }
  return out;
}

std::vector<Series> train_regions(std::span<const Series> data, const SplitSpec& split) {
  std::vector<Series> out;
  for (const auto& s : data) out.push_back(depts::split(s, split).train);
  return out;
}

std::vector<TrainedModel> train_members(std::span<const Series> data, const SplitSpec& split,
                                        const std::vector<SeriesPeriods>& periods, const TrainingConfig& base,
                                        std::span<const MemberSpec> members, int threads) {
  const auto regions = train_regions(data, split);
  std::vector<TrainedModel> models(members.size());
  std::vector<std::exception_ptr> errors(members.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i; (i = next++) < members.size();) {
      try {
        auto cfg = base;
        cfg.lookback_multiplier = members[i].lookback_multiplier;
        cfg.seed = members[i].seed;
        models[i] = train(cfg, regions, periods, split);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  std::size_t n = threads > 0 ? static_cast<std::size_t>(threads) : std::max(1u, std::thread::hardware_concurrency());
  n = std::min(n, members.size());
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return models;
}

ForecastTable ensemble_test_forecast(std::span<const TrainedModel> models, std::span<const Series> data) {
  if (models.empty()) throw std::invalid_argument("ensemble_test_forecast: no models");
  std::vector<ForecastTable> tables;
  for (const auto& m : models) tables.push_back(forecast_range(m, data, m.split.val_end, m.split.test_end));
  return ensemble_rows(tables);
}

ExperimentResult run_experiment(const ExperimentManifest& m) {
  const auto data = load_csv(m.data);
  if (data.empty()) throw DataError(m.data.string() + ": no series");
  for (const auto& s : data) validate(s);
  const SplitSpec split = m.split.test_end > 0 ? m.split : default_split(data.front());

  ExperimentResult r;
  if (m.periods) {
    r.periods = read_periods(*m.periods);
  } else if (m.training.variant != Variant::rand_init) {
    r.periods = initialize_periods(data, split, m.top_k, m.budget);
  }

  std::filesystem::create_directories(m.output);
  if (!r.periods.empty()) write_periods(m.output / "periods.json", r.periods);

  r.models = train_members(data, split, r.periods, m.training, m.members, m.threads);
  for (std::size_t i = 0; i < r.models.size(); ++i) {
    const auto path = m.output / ("member-" + std::to_string(i) + ".ckpt");
    save_checkpoint(path, r.models[i]);
    r.checkpoints.push_back(path);
  }
  r.forecast = ensemble_test_forecast(r.models, data);
  write_forecast_csv(m.output / "forecast.csv", r.forecast);
  r.report = evaluate(r.forecast, m.training.horizon, static_cast<int>(r.models.size()));
  write_file_atomic(m.output / "report.json", report_json(r.report));
  return r;
}

}  // namespace depts
