#include <functional>

#include <doctest.h>

#include "depts/network.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace depts;

namespace {

NetworkShape small_shape() { return {3, 8, 6, 3, 2}; }

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.normal(0, 1);
  return m;
}

}  // namespace

TEST_CASE("zero local block outputs zero") {
  const auto p = LocalBlockParams<double>::zeros(6, 3, 8);
  Rng rng(1);
  const auto [b, f] = local_block_forward(p, random_matrix(6, 4, rng));
  CHECK(b.isZero(0));
  CHECK(f.isZero(0));
}

TEST_CASE("hand-computed local block") {
  // Width 1, identity-like path: every FC weight 1, bias 0, so u4 = relu(sum x).
  auto p = LocalBlockParams<double>::zeros(3, 2, 1);
  p.fc[0].weight.setOnes();
  for (int i = 1; i < 4; ++i) p.fc[i].weight.setConstant(1);
  p.coeff_back.weight << 1, 2, 3;
  p.coeff_fore.weight << -1, 1;
  p.coeff_fore.bias << 0.5, 0;
  p.basis_back.weight.setIdentity();
  p.basis_fore.weight << 1, 1, 0, 2;
  Eigen::VectorXd x(3);
  x << 1, -2, 4;  // sum 3
  const auto [b, f] = local_block_forward(p, x);
  CHECK(b(0, 0) == 3);
  CHECK(b(1, 0) == 6);
  CHECK(b(2, 0) == 9);
  // c_f = [-3 + 0.5, 3] = [-2.5, 3]; h_f = [[1, 1], [0, 2]]
  CHECK(f(0, 0) == 0.5);
  CHECK(f(1, 0) == 6);

  x << -1, -2, 0;  // negative sum, relu blocks everything except the bias
  const auto [b2, f2] = local_block_forward(p, x);
  CHECK(b2.isZero(0));
  CHECK(f2(0, 0) == 0.5);
  CHECK(f2(1, 0) == 0);
}

TEST_CASE("periodic block scale and bias contracts") {
  Rng rng(2);
  auto p = PeriodicBlockParams<double>::zeros(6, 3, 8);
  p.head_back.bias.setConstant(2);
  p.head_fore.bias.setConstant(-1);
  const auto z = random_matrix(9, 2, rng);
  Eigen::RowVectorXd scale(2);
  scale << 0.5, 3;
  const auto [b, f] = periodic_block_forward(p, z, scale);
  CHECK((b.col(0).array() == 1).all());
  CHECK((b.col(1).array() == 6).all());
  CHECK((f.col(1).array() == -3).all());
  scale.setZero();
  const auto [b0, f0] = periodic_block_forward(p, z, scale);
  CHECK(b0.isZero(0));
  CHECK(f0.isZero(0));
}

TEST_CASE("shape errors") {
  const auto p = NetworkParams<double>::zeros(small_shape());
  const std::vector<std::size_t> idx{0};
  CHECK_THROWS_AS(network_forward(p, Eigen::MatrixXd::Zero(5, 1), Eigen::MatrixXd::Zero(9, 1), idx),
                  std::invalid_argument);
  CHECK_THROWS_AS(network_forward(p, Eigen::MatrixXd::Zero(6, 1), Eigen::MatrixXd::Zero(8, 1), idx),
                  std::invalid_argument);
  const std::vector<std::size_t> bad{5};
  CHECK_THROWS(network_forward(p, Eigen::MatrixXd::Zero(6, 1), Eigen::MatrixXd::Zero(9, 1), bad));
  CHECK_THROWS_AS(NetworkParams<double>::zeros({0, 8, 6, 3, 1}), std::invalid_argument);
}

TEST_CASE("zero network forward") {
  const auto p = NetworkParams<double>::zeros(small_shape());
  Rng rng(3);
  const Eigen::VectorXd x = random_matrix(6, 1, rng), z = random_matrix(9, 1, rng);
  const auto d = network_forward(p, x, z, 1);
  CHECK(d.total.isZero(0));
  CHECK(d.x_residue == x);
  CHECK(d.z_residue == z);
}

TEST_CASE("telescoping identities and decomposition") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = fixture::random_network(small_shape(), rng);
    const auto x = random_matrix(6, 3, rng), z = random_matrix(9, 3, rng);
    const std::vector<std::size_t> idx{0, 1, 0};
    const auto d = network_forward(p, x, z, idx);
    Eigen::MatrixXd xs = d.x_residue, zs = d.z_residue, fs = Eigen::MatrixXd::Zero(3, 3);
    for (const auto& l : d.layers) {
      xs += l.u_back + l.v_back;
      zs.topRows(6) += l.v_back;
      zs.bottomRows(3) += l.v_fore;
      fs += l.u_fore + l.v_fore;
    }
    CHECK(oracle::max_rel_diff(xs, x) < 1e-12);
    CHECK(oracle::max_rel_diff(zs, z) < 1e-12);
    CHECK(oracle::max_rel_diff(fs, d.total) < 1e-12);
    CHECK(d.total == d.local_part + d.periodic_part);
  }
}

TEST_CASE("variant flags") {
  Rng rng(5);
  const auto p = fixture::random_network(small_shape(), rng);
  const auto x = random_matrix(6, 2, rng), z = random_matrix(9, 2, rng);
  const std::vector<std::size_t> idx{1, 0};

  VariantFlags f2;
  f2.drop_periodic_forecast = true;
  CHECK(network_forward(p, x, z, idx, f2).periodic_part.isZero(0));

  VariantFlags f3;
  f3.drop_z_residual = true;
  const auto d3 = network_forward(p, x, z, idx, f3);
  for (const auto& l : d3.layers) CHECK(l.periodic_input == z);

  VariantFlags f1;
  f1.drop_local_input_subtraction = true;
  const auto d1 = network_forward(p, x, z, idx, f1);
  for (const auto& l : d1.layers) CHECK(l.local_input == x);

  VariantFlags np;
  np.no_period_mode = true;
  const auto dn = network_forward(p, x, z, idx, np);
  CHECK(dn.periodic_part.isZero(0));
  CHECK(dn.layers[0].local_input == x - z.topRows(6));
  // Only z's backcast slice reaches the output.
  Eigen::MatrixXd z2 = z;
  z2.bottomRows(3).setConstant(1e6);
  CHECK(network_forward(p, x, z2, idx, np).total == dn.total);
}

TEST_CASE("network_backward matches central differences for every flag set") {
  Rng rng(6);
  std::vector<VariantFlags> all(5);
  all[1].drop_local_input_subtraction = true;
  all[2].drop_periodic_forecast = true;
  all[3].drop_z_residual = true;
  all[4].no_period_mode = true;
  for (const auto& flags : all) {
    const auto shape = small_shape();
    auto p = fixture::random_network(shape, rng);
    const auto x = random_matrix(6, 2, rng), z = random_matrix(9, 2, rng);
    const std::vector<std::size_t> idx{1, 0};
    const auto w = random_matrix(3, 2, rng);  // loss = sum w .* total

    const auto fwd = network_forward(p, x, z, idx, flags);
    const auto g = network_backward(p, fwd, idx, w, flags);
    const auto analytic = g.params.pack();

    auto loss_theta = [&](const Eigen::VectorXd& flat) {
      auto q = p;
      q.unpack(flat);
      return network_forward(q, x, z, idx, flags).total.cwiseProduct(w).sum();
    };
    const auto theta = p.pack();
    const double value = loss_theta(theta);
    int bad = 0;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      bad += !oracle::gradients_agree(analytic[i], oracle::central_difference(loss_theta, theta, i), 1e-5, value);
    }
    CHECK(bad == 0);

    Eigen::Map<const Eigen::VectorXd> zflat(z.data(), z.size());
    auto loss_z = [&](const Eigen::VectorXd& flat) {
      const Eigen::Map<const Eigen::MatrixXd> zz(flat.data(), 9, 2);
      return network_forward(p, x, Eigen::MatrixXd(zz), idx, flags).total.cwiseProduct(w).sum();
    };
    bad = 0;
    const Eigen::VectorXd zv = zflat;
    for (Eigen::Index i = 0; i < zv.size(); ++i) {
      bad += !oracle::gradients_agree(g.periodic_state(i), oracle::central_difference(loss_z, zv, i), 1e-5, value);
    }
    CHECK(bad == 0);
  }
}

TEST_CASE("pack and unpack are inverse") {
  Rng rng(7);
  const auto p = fixture::random_network(small_shape(), rng);
  auto q = NetworkParams<double>::zeros(small_shape());
  q.unpack(p.pack());
  CHECK(q.pack() == p.pack());
  CHECK(p.size() == p.pack().size());
  CHECK_THROWS_AS(q.unpack(Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("initialization bounds") {
  Rng rng(8);
  auto p = NetworkParams<double>::initialized({2, 16, 12, 6, 3}, rng);
  CHECK(p.series_scale == Eigen::VectorXd::Ones(3));
  p.visit([](auto& a) {
    if (a.cols() == 1) {
      if (a.rows() != 3) CHECK(a.isZero(0));
      return;
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(a.rows() + a.cols()));
    CHECK(a.cwiseAbs().maxCoeff() <= bound);
    CHECK(a.cwiseAbs().maxCoeff() > 0.5 * bound);
  });
}
