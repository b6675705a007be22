#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "depts/network.hpp"
#include "depts/periodicity.hpp"
#include "depts/series.hpp"

namespace depts {

enum class LossKind { smape, mase };

enum class Variant { depts, depts1, depts2, depts3, no_period, rand_init, fix_period };

std::string to_string(LossKind kind);
std::string to_string(Variant variant);
LossKind parse_loss(const std::string& name);
Variant parse_variant(const std::string& name);

VariantFlags flags_for(Variant variant);
/// False for variants that freeze the periodicity coefficients.
bool trains_periods(Variant variant);

/// 200/H * sum |yhat - y| / (|y| + |yhat|); zero-denominator terms contribute 0.
double smape(const Eigen::VectorXd& yhat, const Eigen::VectorXd& y);

/// mean |yhat - y| over the seasonal-naive mean absolute error of `insample`
/// at lag m. Throws on a zero denominator or insample.size() <= m.
double mase(const Eigen::VectorXd& yhat, const Eigen::VectorXd& y, const Eigen::VectorXd& insample, int m);

struct TrainingConfig {
  int iterations = 2000;
  int batch_size = 128;
  LossKind loss = LossKind::smape;
  int mase_lag = 24;
  double lr_theta = 1e-3;
  double lr_phi = 5e-7;
  int lookback_multiplier = 2;
  int horizon = 24;
  int training_horizon = 0;  // most recent points of the train region to anchor in; 0 = all
  std::uint64_t seed = 0;
  Variant variant = Variant::depts;
  int layers = 6;
  int width = 64;
  int rand_init_atoms = 8;  // J for RandInit

  int lookback() const { return lookback_multiplier * horizon; }
  void validate() const;
  bool operator==(const TrainingConfig&) const = default;
};

std::string config_to_json(const TrainingConfig& config);
TrainingConfig config_from_json(const std::string& text);

struct AdamState {
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState zeros(Eigen::Index n) { return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)}; }
};

struct AdamResult {
  Eigen::VectorXd params;
  AdamState state;
};

/// Bias-corrected Adam update. Returns new parameters and state; inputs are untouched.
AdamResult adam_step(const Eigen::VectorXd& params, const Eigen::VectorXd& grads, const AdamState& state,
                     double lr);

/// Flat layout of per-series coefficients: [A0, A_1, F_1, P_1, ...] per series.
Eigen::VectorXd pack_periods(std::span<const SeriesPeriods> periods);
void unpack_periods(std::vector<SeriesPeriods>& periods, const Eigen::VectorXd& flat);

struct TrainedModel {
  NetworkParams<double> network;
  std::vector<SeriesPeriods> periods;  // one per series, index = series index
  TrainingConfig config;
  SplitSpec split;
  double final_loss = 0;
  std::vector<double> loss_history;
};

/// Stacked inputs of a batch of windows.
struct BatchInputs {
  Eigen::MatrixXd lookback;  // L x B
  Eigen::MatrixXd state;     // (L + H) x B, g evaluated at anchor - L ... anchor + H - 1
  Eigen::MatrixXd target;    // H x B (may be empty when forecasting)
  std::vector<std::size_t> series_index;
  std::vector<Index> anchors;
};

BatchInputs stack_windows(std::span<const WindowSample> windows, std::span<const SeriesPeriods> periods,
                          int lookback, int horizon);

struct BatchGradients {
  double loss = 0;
  Eigen::VectorXd theta;  // NetworkParams::pack layout
  Eigen::VectorXd phi;    // pack_periods layout
};

/// Mean batch loss and its exact gradients through the network and g.
/// Masked atoms get zero gradient; variants that freeze phi get phi = 0.
BatchGradients backward(const NetworkParams<double>& network, std::span<const SeriesPeriods> periods,
                        std::span<const WindowSample> batch, LossKind loss, Variant variant, int mase_lag = 24);

/// Loss only (same definition as backward).
double batch_loss(const NetworkParams<double>& network, std::span<const SeriesPeriods> periods,
                  std::span<const WindowSample> batch, LossKind loss, Variant variant, int mase_lag = 24);

/// RandInit coefficients: A0 = train mean, J atoms with amplitude
/// U[0, 2 sd], frequency U(0, 0.5), phase U[-pi, pi], all enabled.
SeriesPeriods random_periods(const Series& train, int atoms, Rng& rng);

/// Joint training on the train regions (one per series, same order as
/// `init`). `init` may be empty for RandInit.
TrainedModel train(const TrainingConfig& config, std::span<const Series> train_regions,
                   std::vector<SeriesPeriods> init, const SplitSpec& split = {});

/// Forecast windows anchored at `anchors[j]` of series `series_index[j]`.
ForecastDecomposition<double> forecast(const TrainedModel& model, std::span<const Series> series,
                                       std::span<const std::size_t> series_index, std::span<const Index> anchors);

}  // namespace depts
