#include <doctest.h>

#include <cmath>

#include "lstma/training.hpp"

using namespace lstma;

namespace {

std::vector<CaptionRecord> toy(std::size_t count, std::uint64_t seed = 7) {
  ToyDatasetOptions options;
  options.seed = seed;
  options.count = count;
  return generate_toy_dataset(options);
}

TrainConfig small_config(Variant v = Variant::A1) {
  TrainConfig c;
  c.variant = v;
  c.embed_dim = 16;
  c.hidden_dim = 16;
  c.batch_size = 8;
  c.max_iters = 30;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  TrainConfig c;
  c.lr = -1.0;
  CHECK_THROWS(c.validate());
  c = {};
  c.batch_size = 0;
  CHECK_THROWS(c.validate());
  c = {};
  c.clip_norm = 0.0;
  CHECK_THROWS(c.validate());
  c = {};
  c.hidden_dim = 0;
  CHECK_THROWS(c.validate());
  CHECK_NOTHROW(TrainConfig{}.validate());
}

TEST_CASE("examples enumerate every caption") {
  const auto records = toy(10);
  const Vocabulary vocab = build_vocab(all_captions(records), 1);
  const auto examples = make_examples(records, vocab);
  CHECK(examples.size() == all_captions(records).size());
  for (const auto& ex : examples) {
    CHECK(ex.record < records.size());
    CHECK(ex.words.ids.front() == kBos);
    CHECK(ex.words.ids.back() == kEos);
  }
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  const auto records = toy(12);
  const Vocabulary vocab = build_vocab(all_captions(records), 1);
  TrainConfig c = small_config();
  c.lr = 0.0;
  c.batch_size = 1000;
  const TrainResult r = sgd_train(c, records, vocab);
  CHECK(r.params == CaptionerParams::random(model_dims(c, records, vocab), c.seed, c.init_scale));
  for (double loss : r.loss_history) CHECK(loss == r.loss_history.front());
  CHECK(r.final_dataset_loss == r.initial_dataset_loss);
}

TEST_CASE("training is reproducible and thread-count independent") {
  const auto records = toy(12);
  const Vocabulary vocab = build_vocab(all_captions(records), 1);
  const TrainConfig c = small_config(Variant::A3);
  const TrainResult a = sgd_train(c, records, vocab);
  const TrainResult b = sgd_train(c, records, vocab);
  CHECK(a.params == b.params);
  CHECK(a.loss_history == b.loss_history);

  TrainConfig threaded = c;
  threaded.threads = 3;
  const TrainResult t = sgd_train(threaded, records, vocab);
  CHECK(t.params == a.params);

  TrainConfig other = c;
  other.seed = 2;
  CHECK_FALSE(sgd_train(other, records, vocab).params == a.params);
}

TEST_CASE("progress and eval hooks") {
  const auto records = toy(6);
  const Vocabulary vocab = build_vocab(all_captions(records), 1);
  TrainConfig c = small_config();
  c.eval_every = 10;
  std::size_t calls = 0;
  const TrainResult r = sgd_train(c, records, vocab, [&](std::size_t iter, double) {
    ++calls;
    CHECK(iter == calls);
  });
  CHECK(calls == c.max_iters);
  CHECK(r.loss_history.size() == c.max_iters);
  REQUIRE(r.eval_history.size() == 3);
  CHECK(r.eval_history.back().iteration == 30);
  CHECK(r.eval_history.back().mean_loss == r.final_dataset_loss);
}

TEST_CASE("global-norm clipping") {
  const ModelDims dims{7, 5, 12, 6, 6};
  CaptionerParams g = CaptionerParams::random(dims, 3, 1.0);
  const double before = global_norm(g);
  CHECK(before > 2.0);
  CHECK(clip_global_norm(g, 2.0) == before);
  CHECK(std::abs(global_norm(g) - 2.0) < 1e-12);
  const CaptionerParams copy = g;
  clip_global_norm(g, 100.0);
  CHECK(g == copy);
}

TEST_CASE("a single caption is memorized") {
  auto records = toy(1);
  records[0].captions.resize(1);
  const Vocabulary vocab = build_vocab(all_captions(records), 1);
  TrainConfig c;
  c.max_iters = 500;
  c.lr = 0.05;
  const TrainResult r = sgd_train(c, records, vocab);
  CHECK(r.final_dataset_loss < 0.05 * r.initial_dataset_loss);
}

TEST_CASE("divergence raises a training error") {
  const auto records = toy(4);
  const Vocabulary vocab = build_vocab(all_captions(records), 1);
  TrainConfig c = small_config();
  c.clip_norm.reset();
  c.lr = 1e300;
  CHECK_THROWS_AS(sgd_train(c, records, vocab), TrainingError);
}

TEST_CASE("ensemble members") {
  const auto records = toy(8);
  const Vocabulary vocab = build_vocab(all_captions(records), 1);
  const TrainConfig c = small_config();
  const auto one = train_ensemble(c, records, vocab, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].params == sgd_train(c, records, vocab).params);
  const auto two = train_ensemble(c, records, vocab, 2);
  CHECK_FALSE(two[0].params == two[1].params);
  CHECK_THROWS(train_ensemble(c, records, vocab, 0));
}

TEST_CASE("three-member toy ensemble reaches a quarter of the initial loss") {
  const auto records = toy(50);
  const Vocabulary vocab = build_vocab(all_captions(records), 5);
  TrainConfig c;
  c.variant = Variant::A5;
  for (const auto& member : train_ensemble(c, records, vocab, 3)) {
    CHECK(member.final_dataset_loss <= 0.25 * member.initial_dataset_loss);
  }
}

TEST_CASE("loss history csv") {
  CHECK(loss_history_csv({1.5, 0.25}) == "iteration,mean_loss\n1,1.5\n2,0.25\n");
}
