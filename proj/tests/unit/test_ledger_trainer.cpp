#include <doctest.h>

#include <cmath>
#include <limits>

#include "forgetset/errors.hpp"
#include "forgetset/ledger.hpp"
#include "forgetset/synthgen.hpp"
#include "forgetset/trainer.hpp"
#include "ledger_oracle.hpp"
#include "test_util.hpp"

using namespace forgetset;

namespace {

ForgettingLedger single_row(const std::string& bits) {
  return ForgettingLedger::from_bits({0}, {bits});
}

SynthSplits small_data(std::size_t n = 300) {
  SynthConfig c;
  c.seed = 5;
  c.n_train = n;
  c.n_test_id = 50;
  c.n_test_ood = 50;
  return generate(c);
}

}  // namespace

TEST_CASE("event counting on fixed sequences") {
  const auto a = single_row("01010");
  CHECK(a.event_count(0) == 2);
  CHECK(a.first_learned(0) == 1);
  CHECK(a.forgettable(0));
  const auto b = single_row("11111");
  CHECK(b.event_count(0) == 0);
  CHECK(b.first_learned(0) == 0);
  CHECK_FALSE(b.forgettable(0));
  const auto c = single_row("00000");
  CHECK(c.never_learned(0));
  CHECK(c.forgettable(0));
  const auto d = single_row("0111");
  CHECK_FALSE(d.forgettable(0));
}

TEST_CASE("property: streaming ledger equals brute-force recount") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = testing::random_matrix(rng, 1 + rng.below(30), 1 + rng.below(12));
    CHECK(testing::ledger_mismatches(m) == 0);
  }
}

TEST_CASE("histogram and forgettable extraction") {
  const auto l = ForgettingLedger::from_bits({3, 1, 2, 0}, {"101", "111", "000", "010"});
  CHECK(extract_forgettables(l) == std::vector<ExampleId>{0, 2, 3});
  const auto h = histogram(l);
  CHECK(h.never_learned == 1);
  CHECK(h.learned.at(0) == 1);
  CHECK(h.learned.at(1) == 2);
  CHECK(h.total() == 4);
  CHECK(histogram_to_csv(h) == "events,count\n0,1\n1,2\nnever,1\n");
}

TEST_CASE("ledger CSV round trip and validation") {
  TempDir dir;
  const auto l = ForgettingLedger::from_bits({0, 1, 2}, {"1010", "0000", "0111"});
  write_ledger_csv(l, dir.path() / "ledger.csv");
  CHECK(read_ledger_csv(dir.path() / "ledger.csv") == l);
  std::string text = ledger_to_csv(l);
  text.replace(text.find("0,0,2,1,1010"), 7, "0,0,1,1");
  CHECK_THROWS_AS(ledger_from_csv(text, "x"), DataError);
  CHECK_THROWS_AS(ForgettingLedger::from_bits({0, 1}, {"10", "1"}), DataError);
}

TEST_CASE("rank_by_loss") {
  const FinalLosses fl{{0, 1, 2, 3}, {0.1, 2.0, 0.5, 2.0}};
  CHECK(rank_by_loss(fl, 1) == std::vector<ExampleId>{1});
  CHECK(rank_by_loss(fl, 3) == std::vector<ExampleId>{1, 3, 2});
  CHECK(rank_by_loss(fl, 4).size() == 4);
  CHECK_THROWS(rank_by_loss(fl, 5));
  CHECK_THROWS(rank_by_loss(fl, 0));
  CHECK(rank_by_loss_fraction(fl, 1.0).size() == 4);
  CHECK(rank_by_loss_fraction(fl, 0.5) == std::vector<ExampleId>{1, 3});
  CHECK(rank_by_loss_fraction(fl, 0.3) == std::vector<ExampleId>{1, 3});  // ceil(1.2)
  TempDir dir;
  write_losses_csv(fl, dir.path() / "l.csv");
  const auto back = read_losses_csv(dir.path() / "l.csv");
  CHECK(back.ids == fl.ids);
  CHECK(back.loss == fl.loss);
}

TEST_CASE("id list hash is stable and order sensitive") {
  CHECK(id_list_hash({1, 2, 3}) == id_list_hash({1, 2, 3}));
  CHECK(id_list_hash({1, 2, 3}) != id_list_hash({3, 2, 1}));
  CHECK(id_list_hash({}).size() == 16);
}

TEST_CASE("training records one column per epoch and is deterministic") {
  const auto data = small_data();
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 16;
  cfg.seed = 4;
  Model a = Model::init(ModelConfig::shallow(), data.train.vocab().size(), 1);
  Model b = a;
  const TrainResult ra = train(a, data.train, cfg);
  const TrainResult rb = train(b, data.train, cfg);
  CHECK(a == b);
  CHECK(ra.ledger == rb.ledger);
  CHECK(ra.ledger.n_recordings() == 3);
  CHECK(ra.ledger.n_examples() == data.train.size());
  CHECK(ra.final_losses.ids.size() == data.train.size());
  CHECK(a.all_finite());
  for (double p : a.parameters()) CHECK(static_cast<double>(static_cast<float>(p)) == p);
}

TEST_CASE("single epoch: forgettable iff incorrect at that recording") {
  const auto data = small_data();
  TrainConfig cfg;
  cfg.epochs = 1;
  Model m = Model::init(ModelConfig::shallow(), data.train.vocab().size(), 2);
  const auto r = train(m, data.train, cfg);
  for (std::size_t i = 0; i < r.ledger.n_examples(); ++i) {
    CHECK(r.ledger.event_count(i) == 0);
    CHECK(r.ledger.forgettable(i) == !r.ledger.correct(i, 0));
  }
}

TEST_CASE("never learned implies incorrect at the final recording") {
  const auto data = small_data();
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.learning_rate = 3e-4;
  Model m = Model::init(ModelConfig::shallow(), data.train.vocab().size(), 3);
  const auto r = train(m, data.train, cfg);
  for (std::size_t i = 0; i < r.ledger.n_examples(); ++i) {
    if (r.ledger.never_learned(i)) CHECK_FALSE(r.ledger.correct(i, r.ledger.n_recordings() - 1));
  }
}

TEST_CASE("per-presentation recording") {
  const auto data = small_data(100);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.record = RecordGranularity::per_presentation;
  Model m = Model::init(ModelConfig::shallow(), data.train.vocab().size(), 3);
  const auto r = train(m, data.train, cfg);
  CHECK(r.ledger.n_recordings() == 2);
  CHECK(r.ledger.n_examples() == 100);
}

TEST_CASE("subset training touches only the subset") {
  const auto data = small_data(100);
  const std::vector<ExampleId> ids{4, 9, 50};
  const auto pos = positions_of(data.train, ids);
  std::vector<std::size_t> seen;
  TrainHooks hooks{[&](std::size_t p) { seen.push_back(p); }};
  TrainConfig cfg;
  cfg.epochs = 2;
  Model m = Model::init(ModelConfig::shallow(), data.train.vocab().size(), 3);
  const auto r = train(m, data.train, cfg, pos, &hooks);
  CHECK(r.ledger.ids() == ids);
  CHECK_FALSE(seen.empty());
  for (std::size_t p : seen) CHECK(std::find(pos.begin(), pos.end(), p) != pos.end());
}

TEST_CASE("numerical failures abort with context") {
  const auto data = small_data(50);
  Model m = Model::init(ModelConfig::shallow(), data.train.vocab().size(), 3);
  m.parameters()[m.bias_offset(m.layer_count() - 1)] = std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg;
  CHECK_THROWS_WITH_AS(train(m, data.train, cfg), doctest::Contains("epoch 0"), NumericalError);
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  const auto data = small_data(50);
  Model wrong = Model::init(ModelConfig::shallow(), 3, 0);
  CHECK_THROWS_AS(train(wrong, data.train, TrainConfig{}), ConfigError);
}
