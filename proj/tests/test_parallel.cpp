#include <random>

#include "doctest.h"
#include "mne/embed.hpp"
#include "mne/evalmetrics.hpp"
#include "mne/gradcheck.hpp"
#include "mne/synthetic.hpp"
#include "mne/trainer.hpp"

using namespace mne;

namespace {

EpisodicMemory random_memory(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Vec> feats(n, Vec(d));
  for (auto& f : feats)
    for (double& x : f) x = gauss(rng);
  return EpisodicMemory::init(feats, std::vector<int>(n, 0));
}

}  // namespace

// The OpenMP kernels must be bitwise interchangeable with their serial
// reference loops: results land in per-item slots and reductions happen in
// index order afterwards.
TEST_SUITE("parallel") {

TEST_CASE("parallel_for covers every index once and propagates exceptions") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), Exec::parallel, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(16, Exec::parallel,
                               [&](std::size_t i) {
                                 if (i == 7) throw LookupError("boom");
                               }),
                  LookupError);
}

TEST_CASE("batched knn is identical under both execution policies") {
  std::mt19937_64 rng(3);
  const auto mem = random_memory(rng, 300, 8);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Vec> queries(64, Vec(8));
  for (auto& q : queries)
    for (double& x : q) x = gauss(rng);

  const auto serial = mem.knn_batch(queries, 12, {}, Exec::serial);
  const auto parallel = mem.knn_batch(queries, 12, {}, Exec::parallel);
  CHECK(serial == parallel);
}

TEST_CASE("a batch of 64 embeddings is identical under both policies") {
  std::mt19937_64 rng(5);
  const auto mem = random_memory(rng, 120, 6);
  ModelDims dims;
  dims.feature_dim = 6;
  dims.rounds = 2;
  dims.classes = 4;
  const auto params = init_model(dims, 7);

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::pair<Vec, std::optional<std::int64_t>>> targets;
  for (int i = 0; i < 64; ++i) {
    Vec t(6);
    for (double& x : t) x = gauss(rng);
    targets.emplace_back(t, std::nullopt);
  }

  const auto serial = batch_embed(targets, mem, params.asa, 4, 2, AggMode::attention,
                                  Exec::serial);
  const auto parallel = batch_embed(targets, mem, params.asa, 4, 2, AggMode::attention,
                                    Exec::parallel);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].embedding == parallel[i].embedding);
    REQUIRE(serial[i].records.size() == parallel[i].records.size());
    for (std::size_t r = 0; r < serial[i].records.size(); ++r) {
      CHECK(serial[i].records[r].p == parallel[i].records[r].p);
    }
  }
}

TEST_CASE("few-shot evaluation is identical under both policies") {
  SyntheticSpec spec;
  spec.classes = 10;
  spec.per_class = 8;
  spec.dim = 8;
  spec.sigma = 0.3;
  spec.seed = 9;
  const auto data = generate_synthetic(spec).data;
  ModelDims dims;
  dims.feature_dim = 8;
  dims.rounds = 1;
  dims.classes = 10;
  const auto params = init_model(dims, 11);

  FewShotOptions serial_options;
  serial_options.k = 4;
  serial_options.depth = 1;
  serial_options.exec = Exec::serial;
  FewShotOptions parallel_options = serial_options;
  parallel_options.exec = Exec::parallel;

  const auto a = evaluate_fewshot(data, params, {5, 1, 3}, 40, 13, serial_options);
  const auto b = evaluate_fewshot(data, params, {5, 1, 3}, 40, 13, parallel_options);
  CHECK(a.mean_accuracy == b.mean_accuracy);
  CHECK(a.ci95 == b.ci95);
}

TEST_CASE("training gives bitwise equal parameters under both policies") {
  SyntheticSpec spec;
  spec.classes = 5;
  spec.per_class = 8;
  spec.dim = 8;
  spec.sigma = 0.2;
  spec.seed = 15;
  const auto data = generate_synthetic(spec).data;

  TrainConfig config;
  config.k = 4;
  config.depth = 1;
  config.epochs = 2;
  config.batch_size = 8;
  config.lr_model = 1e-3;
  config.lr_encoder = 1e-3;
  config.seed = 17;
  config.exec = Exec::serial;
  const auto serial = train_retrieval(data, config);
  config.exec = Exec::parallel;
  const auto parallel = train_retrieval(data, config);
  CHECK(flatten(serial.params) == flatten(parallel.params));
}

TEST_CASE("finite differences are identical under both policies") {
  const LossFn loss = [](const Vec& t) {
    double s = 0.0;
    for (double x : t) s += x * x * x;
    return s;
  };
  Vec params(32);
  Vec grad(32);
  for (std::size_t i = 0; i < 32; ++i) {
    params[i] = 0.1 * static_cast<double>(i) - 1.0;
    grad[i] = 3.0 * params[i] * params[i];
  }
  const auto serial = finite_diff_check(loss, params, grad, {}, 1e-4, 1e-5, Exec::serial);
  const auto parallel = finite_diff_check(loss, params, grad, {}, 1e-4, 1e-5, Exec::parallel);
  CHECK(serial.max_rel_err == parallel.max_rel_err);
  CHECK(serial.passed());
}

}  // TEST_SUITE
