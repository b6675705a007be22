#include <doctest.h>

#include "depts/errors.hpp"
#include "depts/training.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace depts;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> l) {
  Eigen::VectorXd v(l.size());
  std::copy(l.begin(), l.end(), v.data());
  return v;
}

struct Instance {
  NetworkParams<double> network;
  std::vector<Series> series;
  std::vector<SeriesPeriods> periods;
  std::vector<WindowSample> batch;
};

Instance make_instance(Rng& rng, const NetworkShape& shape, int atoms, int batch) {
  Instance in;
  in.network = fixture::random_network(shape, rng);
  for (int s = 0; s < shape.num_series; ++s) {
    in.series.push_back(fixture::random_series("s" + std::to_string(s), 120, 40 * s, rng));
    in.periods.push_back(fixture::random_coefficients(in.series.back().id, atoms, rng));
  }
  in.batch = sample_windows(in.series, shape.lookback, shape.horizon, 120, batch, rng);
  return in;
}

TrainingConfig tiny_config(Variant v) {
  TrainingConfig c;
  c.iterations = 15;
  c.batch_size = 8;
  c.horizon = 4;
  c.lookback_multiplier = 2;
  c.layers = 2;
  c.width = 8;
  c.variant = v;
  c.seed = 99;
  return c;
}

}  // namespace

TEST_CASE("smape fixtures") {
  CHECK(smape(vec({1, 2}), vec({1, 2})) == 0);
  CHECK(smape(vec({2}), vec({0})) == 200);
  CHECK(smape(vec({3}), vec({1})) == doctest::Approx(100));
  CHECK(smape(vec({0, 3}), vec({0, 1})) == doctest::Approx(50));
  CHECK_THROWS_AS(smape(vec({1}), vec({1, 2})), std::invalid_argument);
}

TEST_CASE("mase fixtures") {
  CHECK(mase(vec({4}), vec({4}), vec({1, 2, 3, 4}), 1) == 0);
  CHECK(mase(vec({5}), vec({4}), vec({1, 2, 3, 4}), 1) == doctest::Approx(1));
  CHECK_THROWS_AS(mase(vec({5}), vec({4}), vec({2, 2, 2, 2}), 1), NumericalError);
  CHECK_THROWS_AS(mase(vec({5}), vec({4}), vec({1, 2}), 2), std::invalid_argument);
}

TEST_CASE("adam_step") {
  const Eigen::VectorXd p = vec({1.0, -2.0});
  auto s = AdamState::zeros(2);
  const auto r0 = adam_step(p, Eigen::VectorXd::Zero(2), s, 0.1);
  CHECK(r0.params == p);
  CHECK(r0.state.step == 1);

  const auto r1 = adam_step(vec({0.0}), vec({1.0}), AdamState::zeros(1), 1e-3);
  CHECK(r1.params[0] == doctest::Approx(-1e-3).epsilon(1e-6));
  const auto r2 = adam_step(vec({0.0}), vec({1.0}), AdamState::zeros(1), 1e-3);
  CHECK(r1.params == r2.params);
  CHECK(r1.state.first_moment == r2.state.first_moment);
  CHECK_THROWS_AS(adam_step(p, vec({1.0}), s, 0.1), std::invalid_argument);
}

TEST_CASE("config JSON round trip and validation") {
  auto c = tiny_config(Variant::depts3);
  c.loss = LossKind::mase;
  c.lr_phi = 1.25e-7;
  CHECK(config_from_json(config_to_json(c)) == c);
  for (auto v : {Variant::depts, Variant::depts1, Variant::depts2, Variant::depts3, Variant::no_period,
                 Variant::rand_init, Variant::fix_period}) {
    CHECK(parse_variant(to_string(v)) == v);
  }
  CHECK_THROWS_AS(parse_variant("foo"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json("{\"iterations\": \"many\"}"), DataError);
  auto bad = c;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.mase_lag = 100;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("backward matches central differences") {
  Rng rng(17);
  const NetworkShape shape{2, 6, 8, 4, 2};
  for (auto loss : {LossKind::smape, LossKind::mase}) {
    for (auto v : {Variant::depts, Variant::depts1, Variant::depts2, Variant::depts3}) {
      auto in = make_instance(rng, shape, 2, 5);
      const auto g = backward(in.network, in.periods, in.batch, loss, v, 3);
      const auto theta = in.network.pack();
      auto f_theta = [&](const Eigen::VectorXd& flat) {
        auto q = in.network;
        q.unpack(flat);
        return batch_loss(q, in.periods, in.batch, loss, v, 3);
      };
      const double value = f_theta(theta);
      CHECK(g.loss == value);
      int bad = 0;
      for (Eigen::Index i = 0; i < theta.size(); ++i) {
        bad += !oracle::gradients_agree(g.theta[i], oracle::central_difference(f_theta, theta, i), 1e-4, value);
      }
      CHECK(bad == 0);

      const auto phi = pack_periods(in.periods);
      auto f_phi = [&](const Eigen::VectorXd& flat) {
        auto p = in.periods;
        unpack_periods(p, flat);
        return batch_loss(in.network, p, in.batch, loss, v, 3);
      };
      bad = 0;
      for (Eigen::Index i = 0; i < phi.size(); ++i) {
        bad += !oracle::gradients_agree(g.phi[i], oracle::central_difference(f_phi, phi, i), 1e-4, value);
      }
      CHECK(bad == 0);
    }
  }
}

TEST_CASE("frozen-period variants have zero phi gradient") {
  Rng rng(18);
  auto in = make_instance(rng, {2, 6, 8, 4, 2}, 2, 4);
  for (auto v : {Variant::fix_period, Variant::no_period}) {
    const auto g = backward(in.network, in.periods, in.batch, LossKind::smape, v);
    CHECK(g.phi.isZero(0));
  }
  in.periods[0].mask.bits[1] = 0;
  const auto g = backward(in.network, in.periods, in.batch, LossKind::smape, Variant::depts);
  // [A0, A1, F1, P1, A2, F2, P2] for series 0; atom 2 is masked.
  CHECK(g.phi.segment(4, 3).isZero(0));
}

TEST_CASE("backward reports non-finite values") {
  Rng rng(19);
  auto in = make_instance(rng, {1, 4, 8, 4, 2}, 1, 3);
  in.network.layers[0].local.fc[0].weight(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(backward(in.network, in.periods, in.batch, LossKind::mase, Variant::depts, 3), NumericalError);
}

TEST_CASE("train with zero iterations returns the initialization") {
  Rng rng(20);
  std::vector<Series> regions{fixture::random_series("a", 100, 0, rng)};
  std::vector<SeriesPeriods> init{fixture::random_coefficients("a", 2, rng)};
  auto c = tiny_config(Variant::depts);
  c.iterations = 0;
  const auto m = train(c, regions, init);
  Rng again(c.seed);
  const auto fresh = NetworkParams<double>::initialized(m.network.shape, again);
  CHECK(m.network.pack() == fresh.pack());
  CHECK(pack_periods(m.periods) == pack_periods(init));
  CHECK(m.loss_history.empty());
}

TEST_CASE("train is deterministic and freezes masked atoms") {
  Rng rng(21);
  std::vector<Series> regions{fixture::random_series("a", 100, 0, rng), fixture::random_series("b", 90, 5, rng)};
  std::vector<SeriesPeriods> init{fixture::random_coefficients("a", 3, rng), fixture::random_coefficients("b", 2, rng)};
  init[0].mask.bits[1] = 0;
  auto c = tiny_config(Variant::depts);
  c.lr_phi = 1e-2;  // large enough for enabled atoms to visibly move
  const auto m1 = train(c, regions, init);
  const auto m2 = train(c, regions, init);
  CHECK(m1.network.pack() == m2.network.pack());
  CHECK(pack_periods(m1.periods) == pack_periods(m2.periods));
  CHECK(m1.loss_history == m2.loss_history);
  const auto& a0 = init[0].coefficients.atoms[1];
  const auto& a1 = m1.periods[0].coefficients.atoms[1];
  CHECK(a0.amplitude == a1.amplitude);
  CHECK(a0.frequency == a1.frequency);
  CHECK(a0.phase == a1.phase);
  CHECK(m1.periods[0].coefficients.atoms[0].amplitude != init[0].coefficients.atoms[0].amplitude);
}

TEST_CASE("train errors") {
  Rng rng(22);
  std::vector<Series> regions{fixture::random_series("a", 100, 0, rng)};
  const auto c = tiny_config(Variant::depts);
  CHECK_THROWS_AS(train(c, regions, {}), DataError);
  std::vector<SeriesPeriods> wrong{fixture::random_coefficients("b", 1, rng)};
  CHECK_THROWS_AS(train(c, regions, wrong), DataError);
  CHECK_THROWS_AS(train(c, std::span<const Series>(), {}), DataError);
}

TEST_CASE("rand-init draws its own enabled atoms") {
  Rng rng(23);
  std::vector<Series> regions{fixture::random_series("a", 100, 0, rng)};
  auto c = tiny_config(Variant::rand_init);
  c.rand_init_atoms = 5;
  c.iterations = 0;
  const auto m = train(c, regions, {});
  REQUIRE(m.periods.size() == 1);
  CHECK(m.periods[0].series_id == "a");
  CHECK(m.periods[0].coefficients.atoms.size() == 5);
  CHECK(m.periods[0].mask.count() == 5);
  CHECK(m.periods[0].coefficients.base == doctest::Approx(regions[0].values.mean()));
}

TEST_CASE("training loss falls on a periodic series") {
  Rng rng(24);
  std::vector<Series> regions{fixture::random_series("a", 400, 0, rng)};
  std::vector<SeriesPeriods> init{fixture::random_coefficients("a", 1, rng)};
  auto c = tiny_config(Variant::depts);
  c.iterations = 300;
  c.loss = LossKind::mase;
  c.mase_lag = 4;
  const auto m = train(c, regions, init);
  auto mean = [&](std::size_t from, std::size_t to) {
    double s = 0;
    for (std::size_t i = from; i < to; ++i) s += m.loss_history[i];
    return s / static_cast<double>(to - from);
  };
  CHECK(mean(270, 300) < mean(0, 30));
}
