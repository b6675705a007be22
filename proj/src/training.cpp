#include "depts/training.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "depts/errors.hpp"

namespace depts {

namespace {

constexpr std::pair<Variant, const char*> kVariantNames[] = {
    {Variant::depts, "depts"},         {Variant::depts1, "depts-1"},        {Variant::depts2, "depts-2"},
    {Variant::depts3, "depts-3"},      {Variant::no_period, "no-period"},   {Variant::rand_init, "rand-init"},
    {Variant::fix_period, "fix-period"},
};

double sign(double v) { return (v > 0) - (v < 0); }

// Per-window loss and dLoss/dyhat.
double window_loss(LossKind kind, const Eigen::VectorXd& yhat, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& insample, int lag, Eigen::VectorXd* grad) {
  const auto h = static_cast<double>(y.size());
  if (kind == LossKind::smape) {
    double acc = 0;
    if (grad) grad->setZero(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double d = yhat[i] - y[i];
      const double s = std::abs(y[i]) + std::abs(yhat[i]);
      if (s == 0) continue;
      acc += std::abs(d) / s;
      if (grad) (*grad)[i] = 200.0 / h * (sign(d) / s - std::abs(d) * sign(yhat[i]) / (s * s));
    }
    return 200.0 / h * acc;
  }
  // MASE with the lookback as in-sample window; a zero scale drops the window.
  double scale = 0;
  for (Eigen::Index i = lag; i < insample.size(); ++i) scale += std::abs(insample[i] - insample[i - lag]);
  scale /= static_cast<double>(insample.size() - lag);
  if (grad) grad->setZero(y.size());
  if (scale == 0) return 0;
  double acc = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double d = yhat[i] - y[i];
    acc += std::abs(d);
    if (grad) (*grad)[i] = sign(d) / (h * scale);
  }
  return acc / (h * scale);
}

void check_periods_match(std::span<const SeriesPeriods> periods, int num_series) {
  if (static_cast<int>(periods.size()) != num_series) {
    throw std::invalid_argument("model has " + std::to_string(num_series) + " series but " +
                                std::to_string(periods.size()) + " coefficient sets");
  }
}

}  // namespace

std::string to_string(LossKind kind) { return kind == LossKind::smape ? "smape" : "mase"; }

std::string to_string(Variant variant) {
  for (const auto& [v, name] : kVariantNames) {
    if (v == variant) return name;
  }
  return "unknown";
}

LossKind parse_loss(const std::string& name) {
  if (name == "smape") return LossKind::smape;
  if (name == "mase") return LossKind::mase;
  throw std::invalid_argument("unknown loss '" + name + "' (expected smape or mase)");
}

Variant parse_variant(const std::string& name) {
  for (const auto& [v, n] : kVariantNames) {
    if (name == n) return v;
  }
  throw std::invalid_argument("unknown variant '" + name + "'");
}

VariantFlags flags_for(Variant variant) {
  VariantFlags f;
  switch (variant) {
    case Variant::depts1: f.drop_local_input_subtraction = true; break;
    case Variant::depts2: f.drop_periodic_forecast = true; break;
    case Variant::depts3: f.drop_z_residual = true; break;
    case Variant::no_period: f.no_period_mode = true; break;
    default: break;
  }
  return f;
}

bool trains_periods(Variant variant) { return variant != Variant::no_period && variant != Variant::fix_period; }

double smape(const Eigen::VectorXd& yhat, const Eigen::VectorXd& y) {
  if (yhat.size() != y.size()) throw std::invalid_argument("smape: length mismatch");
  if (y.size() == 0) throw std::invalid_argument("smape: empty input");
  return window_loss(LossKind::smape, yhat, y, {}, 0, nullptr);
}

double mase(const Eigen::VectorXd& yhat, const Eigen::VectorXd& y, const Eigen::VectorXd& insample, int m) {
  if (yhat.size() != y.size()) throw std::invalid_argument("mase: length mismatch");
  if (y.size() == 0) throw std::invalid_argument("mase: empty input");
  if (m < 1 || insample.size() <= m) throw std::invalid_argument("mase: insample must be longer than the lag");
  double scale = 0;
  for (Eigen::Index i = m; i < insample.size(); ++i) scale += std::abs(insample[i] - insample[i - m]);
  if (scale == 0) throw NumericalError("mase: seasonal-naive denominator is zero");
  return window_loss(LossKind::mase, yhat, y, insample, m, nullptr);
}

void TrainingConfig::validate() const {
  auto positive = [](int v, const char* what) {
    if (v <= 0) throw std::invalid_argument(std::string("training config: ") + what + " must be positive");
  };
  if (iterations < 0) throw std::invalid_argument("training config: iterations must be >= 0");
  positive(batch_size, "batch_size");
  positive(lookback_multiplier, "lookback_multiplier");
  positive(horizon, "horizon");
  positive(layers, "layers");
  positive(width, "width");
  if (training_horizon < 0) throw std::invalid_argument("training config: training_horizon must be >= 0");
  if (!(lr_theta > 0) || !(lr_phi >= 0)) throw std::invalid_argument("training config: bad learning rates");
  if (loss == LossKind::mase && lookback() <= mase_lag) {
    throw std::invalid_argument("training config: MASE needs lookback > mase_lag");
  }
  if (variant == Variant::rand_init) positive(rand_init_atoms, "rand_init_atoms");
}

std::string config_to_json(const TrainingConfig& c) {
  nlohmann::ordered_json j = {
      {"iterations", c.iterations},
      {"batch_size", c.batch_size},
      {"loss", to_string(c.loss)},
      {"mase_lag", c.mase_lag},
      {"lr_theta", c.lr_theta},
      {"lr_phi", c.lr_phi},
      {"lookback_multiplier", c.lookback_multiplier},
      {"horizon", c.horizon},
      {"training_horizon", c.training_horizon},
      {"seed", c.seed},
      {"variant", to_string(c.variant)},
      {"layers", c.layers},
      {"width", c.width},
      {"rand_init_atoms", c.rand_init_atoms},
  };
  return j.dump(2);
}

TrainingConfig config_from_json(const std::string& text) {
  TrainingConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    c.iterations = j.value("iterations", c.iterations);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.loss = parse_loss(j.value("loss", to_string(c.loss)));
    c.mase_lag = j.value("mase_lag", c.mase_lag);
    c.lr_theta = j.value("lr_theta", c.lr_theta);
    c.lr_phi = j.value("lr_phi", c.lr_phi);
    c.lookback_multiplier = j.value("lookback_multiplier", c.lookback_multiplier);
    c.horizon = j.value("horizon", c.horizon);
    c.training_horizon = j.value("training_horizon", c.training_horizon);
    c.seed = j.value("seed", c.seed);
    c.variant = parse_variant(j.value("variant", to_string(c.variant)));
    c.layers = j.value("layers", c.layers);
    c.width = j.value("width", c.width);
    c.rand_init_atoms = j.value("rand_init_atoms", c.rand_init_atoms);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("training config: ") + e.what());
  }
  return c;
}

AdamResult adam_step(const Eigen::VectorXd& params, const Eigen::VectorXd& grads, const AdamState& state,
                     double lr) {
  if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  AdamResult r{params, state};
  auto& s = r.state;
  s.step += 1;
  s.first_moment = s.beta1 * state.first_moment + (1 - s.beta1) * grads;
  s.second_moment = s.beta2 * state.second_moment + (1 - s.beta2) * grads.cwiseProduct(grads);
  const double c1 = 1 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1 - std::pow(s.beta2, static_cast<double>(s.step));
  r.params.array() -= lr * (s.first_moment.array() / c1) / ((s.second_moment.array() / c2).sqrt() + s.epsilon);
  return r;
}

Eigen::VectorXd pack_periods(std::span<const SeriesPeriods> periods) {
  Eigen::Index n = 0;
  for (const auto& p : periods) n += 1 + 3 * static_cast<Eigen::Index>(p.coefficients.atoms.size());
  Eigen::VectorXd flat(n);
  Eigen::Index at = 0;
  for (const auto& p : periods) {
    flat[at++] = p.coefficients.base;
    for (const auto& a : p.coefficients.atoms) {
      flat[at++] = a.amplitude;
      flat[at++] = a.frequency;
      flat[at++] = a.phase;
    }
  }
  return flat;
}

void unpack_periods(std::vector<SeriesPeriods>& periods, const Eigen::VectorXd& flat) {
  Eigen::Index at = 0;
  for (auto& p : periods) {
    if (at + 1 + 3 * static_cast<Eigen::Index>(p.coefficients.atoms.size()) > flat.size()) {
      throw std::invalid_argument("unpack_periods: flat vector too short");
    }
    p.coefficients.base = flat[at++];
    for (auto& a : p.coefficients.atoms) {
      a.amplitude = flat[at++];
      a.frequency = flat[at++];
      a.phase = flat[at++];
    }
  }
  if (at != flat.size()) throw std::invalid_argument("unpack_periods: flat vector too long");
}

BatchInputs stack_windows(std::span<const WindowSample> windows, std::span<const SeriesPeriods> periods,
                          int lookback, int horizon) {
  const auto b = static_cast<Eigen::Index>(windows.size());
  BatchInputs in;
  in.lookback.resize(lookback, b);
  in.state.resize(lookback + horizon, b);
  in.target.resize(horizon, b);
  in.series_index.resize(b);
  in.anchors.resize(b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const auto& w = windows[j];
    if (w.lookback.size() != lookback || w.target.size() != horizon) {
      throw std::invalid_argument("stack_windows: window shape does not match L/H");
    }
    if (w.series_index >= periods.size()) throw std::out_of_range("stack_windows: series index out of range");
    const auto& p = periods[w.series_index];
    in.lookback.col(j) = w.lookback;
    in.target.col(j) = w.target;
    in.state.col(j) = eval_g_range(p.coefficients, p.mask, w.anchor - lookback, lookback + horizon);
    in.series_index[j] = w.series_index;
    in.anchors[j] = w.anchor;
  }
  return in;
}

namespace {

double loss_and_output_grad(const ForecastDecomposition<double>& fwd, const BatchInputs& in, LossKind loss,
                            int mase_lag, Eigen::MatrixXd* grad) {
  const Eigen::Index b = in.target.cols();
  if (grad) grad->resize(in.target.rows(), b);
  double total = 0;
  Eigen::VectorXd g;
  for (Eigen::Index j = 0; j < b; ++j) {
    total += window_loss(loss, fwd.total.col(j), in.target.col(j), in.lookback.col(j), mase_lag,
                         grad ? &g : nullptr);
    if (grad) grad->col(j) = g / static_cast<double>(b);
  }
  return total / static_cast<double>(b);
}

}  // namespace

double batch_loss(const NetworkParams<double>& network, std::span<const SeriesPeriods> periods,
                  std::span<const WindowSample> batch, LossKind loss, Variant variant, int mase_lag) {
  if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
  check_periods_match(periods, network.shape.num_series);
  const auto in = stack_windows(batch, periods, network.shape.lookback, network.shape.horizon);
  const auto fwd = network_forward(network, in.lookback, in.state, in.series_index, flags_for(variant));
  return loss_and_output_grad(fwd, in, loss, mase_lag, nullptr);
}

BatchGradients backward(const NetworkParams<double>& network, std::span<const SeriesPeriods> periods,
                        std::span<const WindowSample> batch, LossKind loss, Variant variant, int mase_lag) {
  if (batch.empty()) throw std::invalid_argument("backward: empty batch");
  check_periods_match(periods, network.shape.num_series);
  const auto flags = flags_for(variant);
  const int lookback = network.shape.lookback, horizon = network.shape.horizon;
  const auto in = stack_windows(batch, periods, lookback, horizon);
  const auto fwd = network_forward(network, in.lookback, in.state, in.series_index, flags);

  Eigen::MatrixXd grad_out;
  BatchGradients out;
  out.loss = loss_and_output_grad(fwd, in, loss, mase_lag, &grad_out);
  if (!std::isfinite(out.loss)) throw NumericalError("backward: non-finite loss");

  const auto g = network_backward(network, fwd, in.series_index, grad_out, flags);
  out.theta = g.params.pack();
  if (!out.theta.allFinite()) {
    Eigen::Index at = 0;
    for (; at < out.theta.size() && std::isfinite(out.theta[at]); ++at) {
    }
    throw NumericalError("backward: non-finite network gradient at flat parameter " + std::to_string(at));
  }

  std::vector<SeriesPeriods> phi_grad(periods.begin(), periods.end());
  for (auto& p : phi_grad) {
    p.coefficients.base = 0;
    for (auto& a : p.coefficients.atoms) a = {};
  }
  if (trains_periods(variant)) {
    std::vector<Index> t(lookback + horizon);
    for (Eigen::Index j = 0; j < in.state.cols(); ++j) {
      const auto s = in.series_index[j];
      std::iota(t.begin(), t.end(), in.anchors[j] - lookback);
      const auto gj = grad_g(periods[s].coefficients, periods[s].mask, std::span<const Index>(t),
                             g.periodic_state.col(j));
      auto& acc = phi_grad[s].coefficients;
      acc.base += gj.base;
      for (std::size_t k = 0; k < acc.atoms.size(); ++k) {
        acc.atoms[k].amplitude += gj.atoms[k].amplitude;
        acc.atoms[k].frequency += gj.atoms[k].frequency;
        acc.atoms[k].phase += gj.atoms[k].phase;
      }
    }
  }
  out.phi = pack_periods(phi_grad);
  if (!out.phi.allFinite()) throw NumericalError("backward: non-finite periodicity gradient");
  return out;
}

SeriesPeriods random_periods(const Series& train, int atoms, Rng& rng) {
  const double mean = train.values.mean();
  const double sd = std::sqrt((train.values.array() - mean).square().mean());
  SeriesPeriods p;
  p.series_id = train.id;
  p.coefficients.base = mean;
  for (int k = 0; k < atoms; ++k) {
    CosineAtom<double> a;
    a.amplitude = rng.uniform(0, 2 * sd);
    a.frequency = rng.uniform(0, 0.5);
    a.phase = rng.uniform(-std::numbers::pi, std::numbers::pi);
    p.coefficients.atoms.push_back(a);
  }
  p.mask = PeriodMask::all_on(atoms);
  return p;
}

TrainedModel train(const TrainingConfig& config, std::span<const Series> train_regions,
                   std::vector<SeriesPeriods> init, const SplitSpec& split) {
  config.validate();
  if (train_regions.empty()) throw DataError("train: no series");
  Rng rng(config.seed);

  TrainedModel model;
  model.config = config;
  model.split = split;
  const NetworkShape shape{config.layers, config.width, config.lookback(), config.horizon,
                           static_cast<int>(train_regions.size())};
  model.network = NetworkParams<double>::initialized(shape, rng);

  if (config.variant == Variant::rand_init) {
    model.periods.clear();
    for (const auto& s : train_regions) model.periods.push_back(random_periods(s, config.rand_init_atoms, rng));
  } else {
    if (init.size() != train_regions.size()) {
      throw DataError("train: need one coefficient set per series, got " + std::to_string(init.size()));
    }
    for (std::size_t i = 0; i < init.size(); ++i) {
      if (init[i].series_id != train_regions[i].id) {
        throw DataError("train: coefficient set '" + init[i].series_id + "' does not match series '" +
                        train_regions[i].id + "'");
      }
    }
    model.periods = std::move(init);
  }

  const int horizon_len = config.training_horizon > 0 ? config.training_horizon
                                                      : static_cast<int>(train_regions.front().size());
  auto theta = model.network.pack();
  auto phi = pack_periods(model.periods);
  auto theta_state = AdamState::zeros(theta.size());
  auto phi_state = AdamState::zeros(phi.size());
  const bool update_phi = trains_periods(config.variant);

  model.loss_history.reserve(config.iterations);
  for (int it = 0; it < config.iterations; ++it) {
    const auto batch =
        sample_windows(train_regions, config.lookback(), config.horizon, horizon_len, config.batch_size, rng);
    BatchGradients g;
    try {
      g = backward(model.network, model.periods, batch, config.loss, config.variant, config.mase_lag);
    } catch (const NumericalError& e) {
      throw NumericalError("train: iteration " + std::to_string(it) + ": " + e.what());
    }
    model.loss_history.push_back(g.loss);

    auto t = adam_step(theta, g.theta, theta_state, config.lr_theta);
    theta = std::move(t.params);
    theta_state = std::move(t.state);
    model.network.unpack(theta);

    if (update_phi) {
      auto p = adam_step(phi, g.phi, phi_state, config.lr_phi);
      phi = std::move(p.params);
      phi_state = std::move(p.state);
      unpack_periods(model.periods, phi);
    }
  }
  model.final_loss = model.loss_history.empty() ? 0.0 : model.loss_history.back();
  return model;
}

ForecastDecomposition<double> forecast(const TrainedModel& model, std::span<const Series> series,
                                       std::span<const std::size_t> series_index, std::span<const Index> anchors) {
  if (series_index.size() != anchors.size()) throw std::invalid_argument("forecast: index/anchor count mismatch");
  const int lookback = model.network.shape.lookback, horizon = model.network.shape.horizon;
  const auto b = static_cast<Eigen::Index>(anchors.size());
  Eigen::MatrixXd x(lookback, b), z(lookback + horizon, b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const auto s = series_index[j];
    if (s >= series.size() || s >= model.periods.size()) throw std::out_of_range("forecast: series index");
    x.col(j) = series[s].slice(anchors[j] - lookback, anchors[j]);
    const auto& p = model.periods[s];
    z.col(j) = eval_g_range(p.coefficients, p.mask, anchors[j] - lookback, lookback + horizon);
  }
  return network_forward(model.network, x, z, series_index, flags_for(model.config.variant));
}

}  // namespace depts
