#pragma once

// Expansion network: N layers, each a periodic block over the periodic-state
// residue and a local block over the lookback residue, coupled by three
// residual recurrences
//
//   z(l)    = z(l-1) - v(l)
//   x(l)    = x(l-1) - v_back(l) - u_back(l)
//   xhat(l) = xhat(l-1) + u_fore(l) + v_fore(l)
//
// All batched routines take one window per column: x is L x B, z is
// (L + H) x B with the lookback rows first.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "depts/rng.hpp"

namespace depts {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct Linear {
  Mat<Scalar> weight;  // out x in
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> bias;

  static Linear zeros(Eigen::Index in, Eigen::Index out) {
    return {Mat<Scalar>::Zero(out, in), Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(out)};
  }
  Eigen::Index in() const { return weight.cols(); }
  Eigen::Index out() const { return weight.rows(); }

  template <typename Derived>
  Mat<Scalar> operator()(const Eigen::MatrixBase<Derived>& x) const {
    Mat<Scalar> y = weight * x;
    y.colwise() += bias;
    return y;
  }
};

template <typename Scalar>
struct LocalBlockParams {
  std::array<Linear<Scalar>, 4> fc;  // rectified
  Linear<Scalar> coeff_back;         // W -> L
  Linear<Scalar> coeff_fore;         // W -> H
  Linear<Scalar> basis_back;         // L -> L
  Linear<Scalar> basis_fore;         // H -> H

  static LocalBlockParams zeros(Eigen::Index lookback, Eigen::Index horizon, Eigen::Index width) {
    return {{Linear<Scalar>::zeros(lookback, width), Linear<Scalar>::zeros(width, width),
             Linear<Scalar>::zeros(width, width), Linear<Scalar>::zeros(width, width)},
            Linear<Scalar>::zeros(width, lookback),
            Linear<Scalar>::zeros(width, horizon),
            Linear<Scalar>::zeros(lookback, lookback),
            Linear<Scalar>::zeros(horizon, horizon)};
  }

  template <typename F>
  void visit(F&& f) {
    for (auto& l : fc) {
      f(l.weight);
      f(l.bias);
    }
    for (auto* l : {&coeff_back, &coeff_fore, &basis_back, &basis_fore}) {
      f(l->weight);
      f(l->bias);
    }
  }
};

template <typename Scalar>
struct PeriodicBlockParams {
  Linear<Scalar> fc;         // (L + H) -> W, rectified
  Linear<Scalar> head_back;  // W -> L
  Linear<Scalar> head_fore;  // W -> H

  static PeriodicBlockParams zeros(Eigen::Index lookback, Eigen::Index horizon, Eigen::Index width) {
    return {Linear<Scalar>::zeros(lookback + horizon, width), Linear<Scalar>::zeros(width, lookback),
            Linear<Scalar>::zeros(width, horizon)};
  }

  template <typename F>
  void visit(F&& f) {
    for (auto* l : {&fc, &head_back, &head_fore}) {
      f(l->weight);
      f(l->bias);
    }
  }
};

struct NetworkShape {
  int layers = 1;
  int width = 8;
  int lookback = 1;
  int horizon = 1;
  int num_series = 1;

  bool operator==(const NetworkShape&) const = default;
};

template <typename Scalar>
struct NetworkParams {
  struct Layer {
    LocalBlockParams<Scalar> local;
    PeriodicBlockParams<Scalar> periodic;
  };

  NetworkShape shape;
  std::vector<Layer> layers;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> series_scale;  // alpha_i

  static NetworkParams zeros(const NetworkShape& s) {
    if (s.layers < 1 || s.width < 1 || s.lookback < 1 || s.horizon < 1 || s.num_series < 1) {
      throw std::invalid_argument("network shape entries must be positive");
    }
    NetworkParams p;
    p.shape = s;
    for (int l = 0; l < s.layers; ++l) {
      p.layers.push_back({LocalBlockParams<Scalar>::zeros(s.lookback, s.horizon, s.width),
                          PeriodicBlockParams<Scalar>::zeros(s.lookback, s.horizon, s.width)});
    }
    p.series_scale = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(s.num_series);
    return p;
  }

  /// Weights uniform on +-sqrt(6 / (fan_in + fan_out)), biases 0, alpha 1.
  static NetworkParams initialized(const NetworkShape& s, Rng& rng) {
    auto p = zeros(s);
    auto init = [&rng](auto& arr) {
      if (arr.cols() == 1) return;  // bias
      const double bound = std::sqrt(6.0 / static_cast<double>(arr.rows() + arr.cols()));
      for (Eigen::Index j = 0; j < arr.cols(); ++j) {
        for (Eigen::Index i = 0; i < arr.rows(); ++i) arr(i, j) = static_cast<Scalar>(rng.uniform(-bound, bound));
      }
    };
    for (auto& layer : p.layers) {
      layer.local.visit(init);
      layer.periodic.visit(init);
    }
    p.series_scale.setOnes();
    return p;
  }

  /// Visits every array in a fixed order: per layer local then periodic,
  /// then the series scales.
  template <typename F>
  void visit(F&& f) {
    for (auto& layer : layers) {
      layer.local.visit(f);
      layer.periodic.visit(f);
    }
    f(series_scale);
  }

  Eigen::Index size() const {
    Eigen::Index n = 0;
    const_cast<NetworkParams*>(this)->visit([&n](auto& a) { n += a.size(); });
    return n;
  }

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> pack() const {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> flat(size());
    Eigen::Index at = 0;
    const_cast<NetworkParams*>(this)->visit([&](auto& a) {
      flat.segment(at, a.size()) = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(a.data(), a.size());
      at += a.size();
    });
    return flat;
  }

  template <typename Derived>
  void unpack(const Eigen::MatrixBase<Derived>& flat) {
    if (flat.size() != size()) throw std::invalid_argument("unpack: flat parameter size mismatch");
    Eigen::Index at = 0;
    visit([&](auto& a) {
      Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(a.data(), a.size()) = flat.segment(at, a.size());
      at += a.size();
    });
  }
};

struct VariantFlags {
  bool drop_local_input_subtraction = false;  // DEPTS-1
  bool drop_periodic_forecast = false;        // DEPTS-2
  bool drop_z_residual = false;               // DEPTS-3
  bool no_period_mode = false;                // NoPeriod

  bool operator==(const VariantFlags&) const = default;
};

/// Per-layer terms and block internals of one forward pass.
template <typename Scalar>
struct LayerTrace {
  Mat<Scalar> periodic_input;  // z(l-1), or z under DEPTS-3
  Mat<Scalar> periodic_hidden;
  Mat<Scalar> v_back_raw, v_fore_raw;  // before alpha scaling
  Mat<Scalar> v_back, v_fore;

  Mat<Scalar> local_input;  // x~(l)
  std::array<Mat<Scalar>, 4> local_hidden;
  Mat<Scalar> coeff_back, coeff_fore;
  Mat<Scalar> u_back, u_fore;
};

template <typename Scalar>
struct ForecastDecomposition {
  Mat<Scalar> total;          // H x B
  Mat<Scalar> local_part;     // sum of u_fore
  Mat<Scalar> periodic_part;  // sum of v_fore actually added to the forecast
  Mat<Scalar> x_residue;      // x(N)
  Mat<Scalar> z_residue;      // z(N)
  std::vector<LayerTrace<Scalar>> layers;
};

namespace detail {

template <typename Scalar>
Mat<Scalar> relu(const Mat<Scalar>& a) {
  return a.cwiseMax(Scalar(0));
}

template <typename Scalar>
void check_inputs(const NetworkShape& s, Eigen::Index x_rows, Eigen::Index x_cols, Eigen::Index z_rows,
                  Eigen::Index z_cols, std::span<const std::size_t> series_index) {
  if (x_rows != s.lookback) throw std::invalid_argument("network: lookback rows != L");
  if (z_rows != s.lookback + s.horizon) throw std::invalid_argument("network: periodic state rows != L + H");
  if (z_cols != x_cols) throw std::invalid_argument("network: x and z batch sizes differ");
  if (static_cast<Eigen::Index>(series_index.size()) != x_cols) {
    throw std::invalid_argument("network: one series index per column required");
  }
  for (auto i : series_index) {
    if (i >= static_cast<std::size_t>(s.num_series)) throw std::out_of_range("network: series index out of range");
  }
}

template <typename Scalar>
Eigen::Matrix<Scalar, 1, Eigen::Dynamic> gather_scales(const NetworkParams<Scalar>& p,
                                                       std::span<const std::size_t> series_index) {
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> a(series_index.size());
  for (std::size_t j = 0; j < series_index.size(); ++j) a[j] = p.series_scale[series_index[j]];
  return a;
}

}  // namespace detail

/// Local block over x~ (L x B). Returns {u_back, u_fore} and fills the trace.
template <typename Scalar, typename Derived>
std::pair<Mat<Scalar>, Mat<Scalar>> local_block_forward(const LocalBlockParams<Scalar>& p,
                                                        const Eigen::MatrixBase<Derived>& x_tilde,
                                                        LayerTrace<Scalar>* trace = nullptr) {
  if (x_tilde.rows() != p.fc[0].in()) throw std::invalid_argument("local block: input length != L");
  std::array<Mat<Scalar>, 4> h;
  h[0] = detail::relu<Scalar>(p.fc[0](x_tilde));
  for (int i = 1; i < 4; ++i) h[i] = detail::relu<Scalar>(p.fc[i](h[i - 1]));
  Mat<Scalar> cb = p.coeff_back(h[3]);
  Mat<Scalar> cf = p.coeff_fore(h[3]);
  Mat<Scalar> ub = p.basis_back(cb);
  Mat<Scalar> uf = p.basis_fore(cf);
  if (trace) {
    trace->local_input = x_tilde;
    trace->local_hidden = std::move(h);
    trace->coeff_back = std::move(cb);
    trace->coeff_fore = std::move(cf);
  }
  return {std::move(ub), std::move(uf)};
}

/// Periodic block over z ((L + H) x B), outputs scaled per column by `scale`.
template <typename Scalar, typename Derived>
std::pair<Mat<Scalar>, Mat<Scalar>> periodic_block_forward(const PeriodicBlockParams<Scalar>& p,
                                                           const Eigen::MatrixBase<Derived>& z,
                                                           const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>& scale,
                                                           LayerTrace<Scalar>* trace = nullptr) {
  if (z.rows() != p.fc.in()) throw std::invalid_argument("periodic block: input length != L + H");
  if (scale.size() != z.cols()) throw std::invalid_argument("periodic block: one scale per column required");
  Mat<Scalar> hidden = detail::relu<Scalar>(p.fc(z));
  Mat<Scalar> back_raw = p.head_back(hidden);
  Mat<Scalar> fore_raw = p.head_fore(hidden);
  Mat<Scalar> back = back_raw * scale.asDiagonal();
  Mat<Scalar> fore = fore_raw * scale.asDiagonal();
  if (trace) {
    trace->periodic_input = z;
    trace->periodic_hidden = std::move(hidden);
    trace->v_back_raw = std::move(back_raw);
    trace->v_fore_raw = std::move(fore_raw);
  }
  return {std::move(back), std::move(fore)};
}

template <typename Scalar, typename DX, typename DZ>
ForecastDecomposition<Scalar> network_forward(const NetworkParams<Scalar>& params,
                                              const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DZ>& z,
                                              std::span<const std::size_t> series_index,
                                              const VariantFlags& flags = {}) {
  const auto& s = params.shape;
  detail::check_inputs<Scalar>(s, x.rows(), x.cols(), z.rows(), z.cols(), series_index);
  const Eigen::Index batch = x.cols();
  const auto scale = detail::gather_scales(params, series_index);

  ForecastDecomposition<Scalar> out;
  out.local_part = Mat<Scalar>::Zero(s.horizon, batch);
  out.periodic_part = Mat<Scalar>::Zero(s.horizon, batch);
  out.layers.resize(params.layers.size());

  Mat<Scalar> x_res = x;
  Mat<Scalar> z_res = z;
  if (flags.no_period_mode) x_res -= z.topRows(s.lookback);

  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    auto& tr = out.layers[l];

    if (flags.no_period_mode) {
      tr.v_back = Mat<Scalar>::Zero(s.lookback, batch);
      tr.v_fore = Mat<Scalar>::Zero(s.horizon, batch);
    } else {
      std::tie(tr.v_back, tr.v_fore) = periodic_block_forward(layer.periodic, z_res, scale, &tr);
    }

    Mat<Scalar> x_tilde;
    if (flags.drop_local_input_subtraction && !flags.no_period_mode) {
      x_tilde = x;
    } else {
      x_tilde = x_res - tr.v_back;
    }
    std::tie(tr.u_back, tr.u_fore) = local_block_forward(layer.local, x_tilde, &tr);

    x_res -= tr.v_back + tr.u_back;
    if (!flags.drop_z_residual && !flags.no_period_mode) {
      z_res.topRows(s.lookback) -= tr.v_back;
      z_res.bottomRows(s.horizon) -= tr.v_fore;
    }
    out.local_part += tr.u_fore;
    if (!flags.drop_periodic_forecast) out.periodic_part += tr.v_fore;
  }

  out.total = out.local_part + out.periodic_part;
  out.x_residue = std::move(x_res);
  out.z_residue = std::move(z_res);
  return out;
}

/// Single-window convenience overload (B = 1).
template <typename Scalar>
ForecastDecomposition<Scalar> network_forward(const NetworkParams<Scalar>& params,
                                              const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x,
                                              const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& z,
                                              std::size_t series_index, const VariantFlags& flags = {}) {
  const std::array<std::size_t, 1> idx{series_index};
  return network_forward(params, x, z, std::span<const std::size_t>(idx), flags);
}

template <typename Scalar>
struct NetworkGradients {
  NetworkParams<Scalar> params;  // same layout as the network
  Mat<Scalar> periodic_state;    // dLoss/dz, (L + H) x B
};

namespace detail {

template <typename Scalar>
void linear_backward(const Linear<Scalar>& layer, const Mat<Scalar>& input, const Mat<Scalar>& grad_out,
                     Linear<Scalar>& grad, Mat<Scalar>* grad_in) {
  grad.weight.noalias() += grad_out * input.transpose();
  grad.bias += grad_out.rowwise().sum();
  if (grad_in) *grad_in = layer.weight.transpose() * grad_out;
}

template <typename Scalar>
void relu_backward(const Mat<Scalar>& activated, Mat<Scalar>& grad) {
  grad = (activated.array() > Scalar(0)).select(grad, Scalar(0));
}

}  // namespace detail

/// Reverse pass for a forward pass run with the same inputs and flags.
/// `grad_total` is dLoss/d(total), H x B.
template <typename Scalar>
NetworkGradients<Scalar> network_backward(const NetworkParams<Scalar>& params,
                                          const ForecastDecomposition<Scalar>& fwd,
                                          std::span<const std::size_t> series_index,
                                          const Mat<Scalar>& grad_total, const VariantFlags& flags = {}) {
  const auto& s = params.shape;
  const Eigen::Index batch = grad_total.cols();
  const auto scale = detail::gather_scales(params, series_index);

  NetworkGradients<Scalar> g{NetworkParams<Scalar>::zeros(s), Mat<Scalar>::Zero(s.lookback + s.horizon, batch)};

  Mat<Scalar> gx = Mat<Scalar>::Zero(s.lookback, batch);                 // dL/dx(l)
  Mat<Scalar> gz = Mat<Scalar>::Zero(s.lookback + s.horizon, batch);     // dL/dz(l)
  const bool periodic = !flags.no_period_mode;

  for (std::size_t li = params.layers.size(); li-- > 0;) {
    const auto& layer = params.layers[li];
    const auto& tr = fwd.layers[li];
    auto& gl = g.params.layers[li];

    Mat<Scalar> g_vb = -gx;
    Mat<Scalar> g_vf = flags.drop_periodic_forecast ? Mat<Scalar>::Zero(s.horizon, batch) : grad_total;
    if (periodic && !flags.drop_z_residual) {
      g_vb -= gz.topRows(s.lookback);
      g_vf -= gz.bottomRows(s.horizon);
    }
    Mat<Scalar> g_ub = -gx;
    const Mat<Scalar>& g_uf = grad_total;
    // gx flows unchanged into x(l-1) through the residual; gz likewise.

    // Local block.
    Mat<Scalar> g_cb, g_cf;
    detail::linear_backward(layer.local.basis_back, tr.coeff_back, g_ub, gl.local.basis_back, &g_cb);
    detail::linear_backward(layer.local.basis_fore, tr.coeff_fore, g_uf, gl.local.basis_fore, &g_cf);
    Mat<Scalar> g_h, g_tmp;
    detail::linear_backward(layer.local.coeff_back, tr.local_hidden[3], g_cb, gl.local.coeff_back, &g_h);
    detail::linear_backward(layer.local.coeff_fore, tr.local_hidden[3], g_cf, gl.local.coeff_fore, &g_tmp);
    g_h += g_tmp;
    for (int i = 3; i >= 0; --i) {
      detail::relu_backward(tr.local_hidden[i], g_h);
      const Mat<Scalar>& in = i == 0 ? tr.local_input : tr.local_hidden[i - 1];
      detail::linear_backward(layer.local.fc[i], in, g_h, gl.local.fc[i], &g_tmp);
      g_h = std::move(g_tmp);
    }
    // g_h is now dL/dx~.
    if (!(flags.drop_local_input_subtraction && periodic)) {
      gx += g_h;
      if (periodic) g_vb -= g_h;
    }

    if (periodic) {
      // Undo the alpha scaling: v = raw * alpha.
      for (Eigen::Index j = 0; j < batch; ++j) {
        g.params.series_scale[series_index[j]] +=
            tr.v_back_raw.col(j).dot(g_vb.col(j)) + tr.v_fore_raw.col(j).dot(g_vf.col(j));
      }
      const Mat<Scalar> g_rb = g_vb * scale.asDiagonal();
      const Mat<Scalar> g_rf = g_vf * scale.asDiagonal();
      Mat<Scalar> g_hidden;
      detail::linear_backward(layer.periodic.head_back, tr.periodic_hidden, g_rb, gl.periodic.head_back, &g_hidden);
      detail::linear_backward(layer.periodic.head_fore, tr.periodic_hidden, g_rf, gl.periodic.head_fore, &g_tmp);
      g_hidden += g_tmp;
      detail::relu_backward(tr.periodic_hidden, g_hidden);
      detail::linear_backward(layer.periodic.fc, tr.periodic_input, g_hidden, gl.periodic.fc, &g_tmp);
      gz += g_tmp;
    }
  }

  g.periodic_state = gz;
  if (flags.no_period_mode) g.periodic_state.topRows(s.lookback) -= gx;
  return g;
}

}  // namespace depts
