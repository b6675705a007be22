#pragma once

// File-driven experiment pipeline: period initialization, ensemble training
// and test forecasting.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "depts/evaluation.hpp"
#include "depts/periodicity.hpp"
#include "depts/series.hpp"
#include "depts/training.hpp"

namespace depts {

struct MemberSpec {
  int lookback_multiplier = 2;
  std::uint64_t seed = 0;
  bool operator==(const MemberSpec&) const = default;
};

struct ExperimentManifest {
  std::filesystem::path data;
  SplitSpec split;
  int top_k = 128;
  int budget = 8;
  std::optional<std::filesystem::path> periods;  // precomputed coefficient document
  TrainingConfig training;
  std::vector<MemberSpec> members;
  std::filesystem::path output = "run";
  int threads = 0;  // 0 = one per hardware thread
};

/// Relative paths in the document resolve against `base_dir`.
ExperimentManifest manifest_from_json(const std::string& text, const std::filesystem::path& base_dir = {});
std::string manifest_to_json(const ExperimentManifest& manifest);
ExperimentManifest read_manifest(const std::filesystem::path& path);

/// Default split for a series without one: 80% train, 2% val, rest test.
SplitSpec default_split(const Series& series);

/// One init_periods call per series on its train and val regions.
std::vector<SeriesPeriods> initialize_periods(std::span<const Series> data, const SplitSpec& split, int top_k,
                                              int budget, const InitOptions& options = {});

std::vector<Series> train_regions(std::span<const Series> data, const SplitSpec& split);

/// Trains one model per member, in parallel when threads != 1. Results are in
/// member order and do not depend on the thread count.
std::vector<TrainedModel> train_members(std::span<const Series> data, const SplitSpec& split,
                                        const std::vector<SeriesPeriods>& periods, const TrainingConfig& base,
                                        std::span<const MemberSpec> members, int threads = 0);

/// Ensembled forecast of the test region [val_end, test_end).
ForecastTable ensemble_test_forecast(std::span<const TrainedModel> models, std::span<const Series> data);

struct ExperimentResult {
  std::vector<SeriesPeriods> periods;
  std::vector<TrainedModel> models;
  std::vector<std::filesystem::path> checkpoints;
  ForecastTable forecast;
  EvalReport report;
};

/// Runs the manifest and writes periods.json, member-<i>.ckpt, forecast.csv
/// and report.json under manifest.output.
ExperimentResult run_experiment(const ExperimentManifest& manifest);

}  // namespace depts
