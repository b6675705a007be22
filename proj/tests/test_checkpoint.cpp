#include <filesystem>

#include <doctest.h>

#include "depts/checkpoint.hpp"
#include "depts/errors.hpp"
#include "fixtures.hpp"

using namespace depts;

TEST_CASE("checkpoint round trip is bit-exact") {
  Rng rng(31);
  TrainedModel m;
  m.config.variant = Variant::depts2;
  m.config.horizon = 3;
  m.config.lookback_multiplier = 2;
  m.config.lr_phi = 0.1 + 0.2;  // not a short decimal
  m.network = fixture::random_network({2, 5, 6, 3, 2}, rng);
  m.periods = {fixture::random_coefficients("a", 3, rng), fixture::random_coefficients("b", 0, rng)};
  m.periods[0].mask.bits[2] = 0;
  m.split = {10, 20, 30};
  m.final_loss = 1.0 / 3;
  m.loss_history = {5, 4, 1.0 / 3};

  const auto bytes = serialize_model(m);
  const auto back = deserialize_model(bytes);
  CHECK(serialize_model(back) == bytes);
  CHECK(back.network.shape == m.network.shape);
  CHECK(back.network.pack() == m.network.pack());
  CHECK(back.config == m.config);
  CHECK(back.periods[0].mask.bits == m.periods[0].mask.bits);
  CHECK(back.periods[1].series_id == "b");
  CHECK(back.split.val_end == 20);
  CHECK(back.loss_history == m.loss_history);

  const auto p = std::filesystem::temp_directory_path() / "depts_model.ckpt";
  save_checkpoint(p, m);
  CHECK(serialize_model(load_checkpoint(p)) == bytes);
}

TEST_CASE("corrupt checkpoints are rejected") {
  Rng rng(32);
  TrainedModel m;
  m.network = fixture::random_network({1, 2, 2, 1, 1}, rng);
  m.periods = {fixture::random_coefficients("a", 1, rng)};
  const auto bytes = serialize_model(m);
  CHECK_THROWS_AS(deserialize_model(bytes.substr(0, bytes.size() - 3)), DataError);
  CHECK_THROWS_AS(deserialize_model("XXXXXXXXXXXX"), DataError);
  CHECK_THROWS_AS(deserialize_model(bytes + "x"), DataError);
  auto wrong_version = bytes;
  wrong_version[8] = 9;
  CHECK_THROWS_AS(deserialize_model(wrong_version), DataError);
}
