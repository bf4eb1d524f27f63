#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "mne/evalmetrics.hpp"
#include "mne/synthetic.hpp"
#include "mne/trainer.hpp"

using namespace mne;

namespace {

RankingResult make_ranking(std::vector<char> relevance) {
  RankingResult r;
  r.relevance = std::move(relevance);
  for (std::size_t i = 0; i < r.relevance.size(); ++i) {
    r.ranked.push_back(static_cast<std::int64_t>(i));
  }
  return r;
}

// definitional oracle, written as the plain sum over relevant positions
double oracle_ap(const std::vector<char>& rel) {
  double total_rel = 0.0;
  for (char r : rel) total_rel += r ? 1.0 : 0.0;
  double ap = 0.0, hits = 0.0;
  for (std::size_t i = 0; i < rel.size(); ++i) {
    if (rel[i]) {
      hits += 1.0;
      ap += hits / static_cast<double>(i + 1);
    }
  }
  return ap / total_rel;
}

ModelParams identity_pipeline(std::size_t dim) {
  ModelDims dims;
  dims.feature_dim = dim;
  dims.rounds = 0;
  dims.classes = 2;
  return init_model(dims, 0);
}

}  // namespace

TEST_SUITE("evalmetrics") {

TEST_CASE("perfect ranking gives ap one") {
  CHECK(average_precision(make_ranking({1, 1, 1, 0, 0})) == doctest::Approx(1.0));
}

TEST_CASE("the (1,0,1) ranking gives 5/6") {
  CHECK(average_precision(make_ranking({1, 0, 1})) ==
        doctest::Approx(0.833333333333).epsilon(1e-9));
}

TEST_CASE("no relevant item is an error") {
  CHECK_THROWS_AS(average_precision(make_ranking({0, 0, 0})), DegenerateInputError);
}

TEST_CASE("ap matches the definitional oracle on 1000 random masks") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> len(1, 40);
  std::bernoulli_distribution coin(0.3);
  int checked = 0;
  while (checked < 1000) {
    std::vector<char> rel(static_cast<std::size_t>(len(rng)));
    bool any = false;
    for (char& r : rel) {
      r = coin(rng) ? 1 : 0;
      any = any || r;
    }
    if (!any) continue;
    CHECK(average_precision(make_ranking(rel)) == oracle_ap(rel));  // same sum, exactly
    ++checked;
  }
}

TEST_CASE("ap depends on the ranking only, not the scores behind it") {
  // any strictly monotone rescoring leaves the ranking and hence ap unchanged;
  // we model that by checking ap is a pure function of the relevance order
  std::vector<char> rel{0, 1, 0, 1, 1, 0};
  const double base = average_precision(make_ranking(rel));
  RankingResult renamed;
  renamed.relevance = rel;
  for (std::size_t i = 0; i < rel.size(); ++i) {
    renamed.ranked.push_back(static_cast<std::int64_t>(100 + i * 7));  // ids are cosmetic
  }
  CHECK(average_precision(renamed) == base);
}

TEST_CASE("separable retrieval task scores map one") {
  // gallery duplicates each query class with no distractors nearby
  SyntheticSpec spec;
  spec.classes = 5;
  spec.per_class = 8;
  spec.dim = 16;
  spec.sigma = 0.01;
  spec.seed = 4;
  const auto all = generate_synthetic(spec).data;
  Dataset queries, gallery;
  for (std::size_t i = 0; i < all.size(); ++i) {
    Dataset& side = (i % 2 == 0) ? gallery : queries;
    side.features.push_back(all.features[i]);
    side.labels.push_back(all.labels[i]);
  }
  RetrievalOptions options;
  options.k = 4;
  options.depth = 0;
  const auto metrics =
      evaluate_retrieval(all, queries, gallery, identity_pipeline(16), options);
  CHECK(metrics.map == doctest::Approx(1.0));
  CHECK(metrics.rank1 == doctest::Approx(1.0));
  CHECK(metrics.queries_skipped == 0);
}

TEST_CASE("depth zero equals plain cosine ranking on normalized features") {
  SyntheticSpec spec;
  spec.classes = 6;
  spec.per_class = 10;
  spec.dim = 8;
  spec.sigma = 0.4;
  spec.seed = 5;
  const auto all = generate_synthetic(spec).data;
  Dataset queries, gallery;
  for (std::size_t i = 0; i < all.size(); ++i) {
    Dataset& side = (i % 2 == 0) ? gallery : queries;
    side.features.push_back(all.features[i]);
    side.labels.push_back(all.labels[i]);
  }

  RetrievalOptions options;
  options.k = 4;
  options.depth = 0;
  const auto metrics =
      evaluate_retrieval(all, queries, gallery, identity_pipeline(8), options);

  // independent oracle: normalize, dot, rank, definitional ap
  double ap_sum = 0.0, hit = 0.0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const Vec qe = l2_normalize(queries.features[q]);
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t g = 0; g < gallery.size(); ++g) {
      order.emplace_back(-dot(qe, l2_normalize(gallery.features[g])), g);
    }
    std::sort(order.begin(), order.end());
    std::vector<char> rel;
    for (const auto& [s, g] : order) rel.push_back(queries.labels[q] == gallery.labels[g]);
    ap_sum += oracle_ap(rel);
    hit += rel.front() ? 1.0 : 0.0;
  }
  CHECK(metrics.map == doctest::Approx(ap_sum / queries.size()).epsilon(1e-12));
  CHECK(metrics.rank1 == doctest::Approx(hit / queries.size()).epsilon(1e-12));
}

TEST_CASE("self matches are excluded when queries are the gallery") {
  SyntheticSpec spec;
  spec.classes = 4;
  spec.per_class = 6;
  spec.dim = 8;
  spec.sigma = 0.3;
  spec.seed = 6;
  const auto all = generate_synthetic(spec).data;

  RetrievalOptions options;
  options.k = 4;
  options.depth = 0;
  options.queries_are_gallery = true;
  const auto metrics = evaluate_retrieval(all, all, all, identity_pipeline(8), options);
  CHECK(metrics.queries_scored == all.size());
  // with self matches allowed, rank-1 would trivially be 1.0 everywhere
  const RetrievalOptions keep_self{.k = 4, .depth = 0};
  const auto cheating = evaluate_retrieval(all, all, all, identity_pipeline(8), keep_self);
  CHECK(cheating.rank1 == doctest::Approx(1.0));
  CHECK(metrics.map <= cheating.map);
}

TEST_CASE("camera filtering drops same-class same-camera items") {
  // two items per class per camera; filtering away the query's camera makes
  // the cross-camera twin the only relevant item
  SyntheticSpec spec;
  spec.classes = 3;
  spec.per_class = 8;
  spec.dim = 8;
  spec.sigma = 0.1;
  spec.bimodal_offset = 0.5;
  spec.seed = 7;
  const auto all = generate_synthetic(spec);

  RetrievalOptions options;
  options.k = 4;
  options.depth = 0;
  std::vector<int> cams_q = all.modes, cams_g = all.modes;
  options.query_cameras = &cams_q;
  options.gallery_cameras = &cams_g;
  options.queries_are_gallery = true;
  const auto metrics =
      evaluate_retrieval(all.data, all.data, all.data, identity_pipeline(8), options);
  CHECK(metrics.queries_scored == all.data.size());
}

TEST_CASE("memory sampling controls how much gallery joins the memory") {
  SyntheticSpec spec;
  spec.classes = 4;
  spec.per_class = 10;
  spec.dim = 8;
  spec.sigma = 0.2;
  spec.seed = 8;
  const auto all = generate_synthetic(spec).data;
  Dataset queries, gallery;
  for (std::size_t i = 0; i < all.size(); ++i) {
    Dataset& side = (i % 2 == 0) ? gallery : queries;
    side.features.push_back(all.features[i]);
    side.labels.push_back(all.labels[i]);
  }
  RetrievalOptions options;
  options.k = 3;
  options.depth = 1;
  options.memory_sample_ratio = 0.5;
  options.sample_seed = 9;
  ModelDims dims;
  dims.feature_dim = 8;
  dims.rounds = 1;
  dims.classes = 4;
  const auto params = init_model(dims, 1);
  const auto metrics = evaluate_retrieval(all, queries, gallery, params, options);
  CHECK(metrics.queries_scored == queries.size());
  CHECK_THROWS_AS(([&] {
                    RetrievalOptions bad = options;
                    bad.memory_sample_ratio = 0.0;
                    evaluate_retrieval(all, queries, gallery, params, bad);
                  }()),
                  DegenerateInputError);
}

TEST_CASE("separable few-shot task scores accuracy one with zero ci") {
  SyntheticSpec spec;
  spec.classes = 8;
  spec.per_class = 20;
  spec.dim = 16;
  spec.sigma = 0.0;  // every class collapses to its center
  spec.seed = 10;
  const auto data = generate_synthetic(spec).data;
  FewShotOptions options;
  options.k = 4;
  options.depth = 0;
  const auto report = evaluate_fewshot(data, identity_pipeline(16), {5, 1, 3}, 20, 11, options);
  CHECK(report.mean_accuracy == doctest::Approx(1.0));
  CHECK(report.ci95 == doctest::Approx(0.0));
}

TEST_CASE("identical episodes give zero ci") {
  // every item of both classes sits on the same point: each episode is the
  // same degenerate task, ties resolve to the lowest class id, and the
  // accuracy is exactly one half every time
  Dataset data;
  for (int i = 0; i < 4; ++i) {
    data.features.push_back({1.0, 0.5, -0.25});
    data.labels.push_back(i / 2);
  }
  FewShotOptions options;
  options.k = 2;
  options.depth = 0;
  const auto report = evaluate_fewshot(data, identity_pipeline(3), {2, 1, 1}, 25, 13, options);
  CHECK(report.mean_accuracy == doctest::Approx(0.5));
  CHECK(report.ci95 == doctest::Approx(0.0));
}

TEST_CASE("one-shot prototypes equal nearest-support prediction") {
  SyntheticSpec spec;
  spec.classes = 10;
  spec.per_class = 10;
  spec.dim = 8;
  spec.sigma = 0.5;
  spec.seed = 14;
  const auto data = generate_synthetic(spec).data;

  // independent oracle at depth 0: normalize raw features and pick the
  // nearest support by cosine, episode sampling replayed identically
  const EpisodeShape shape{5, 1, 4};
  const std::size_t episodes = 30;
  const std::uint64_t seed = 15;

  FewShotOptions options;
  options.k = 4;
  options.depth = 0;
  const auto report = evaluate_fewshot(data, identity_pipeline(8), shape, episodes, seed,
                                       options);

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(data.num_classes()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
  }
  std::vector<int> eligible;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() >= 5) eligible.push_back(static_cast<int>(c));
  }
  double acc_sum = 0.0;
  for (std::size_t e = 0; e < episodes; ++e) {
    std::mt19937_64 rng(seed + e);
    std::vector<int> classes = eligible;
    std::shuffle(classes.begin(), classes.end(), rng);
    classes.resize(5);
    std::sort(classes.begin(), classes.end());
    std::vector<std::size_t> support, queries;
    for (int c : classes) {
      auto pool = by_class[static_cast<std::size_t>(c)];
      std::shuffle(pool.begin(), pool.end(), rng);
      support.push_back(pool[0]);
      for (int j = 0; j < 4; ++j) queries.push_back(pool[static_cast<std::size_t>(1 + j)]);
    }
    std::size_t correct = 0;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
      const Vec qe = l2_normalize(data.features[queries[qi]]);
      int best = -1;
      double best_sim = -2.0;
      for (std::size_t s = 0; s < support.size(); ++s) {
        const double sim = dot(qe, l2_normalize(data.features[support[s]]));
        if (sim > best_sim) {
          best_sim = sim;
          best = static_cast<int>(s);
        }
      }
      if (classes[static_cast<std::size_t>(best)] == data.labels[queries[qi]]) ++correct;
    }
    acc_sum += static_cast<double>(correct) / 20.0;
  }
  CHECK(report.mean_accuracy == doctest::Approx(acc_sum / episodes).epsilon(1e-12));
}

TEST_CASE("a 1-shot 5-way episode with 15 queries fills a memory of 80") {
  // observable through the capacity precondition: 80 entries serve k = 79
  // per tree (self excluded) but not k = 80
  SyntheticSpec spec;
  spec.classes = 6;
  spec.per_class = 16;
  spec.dim = 8;
  spec.sigma = 0.2;
  spec.seed = 15;
  const auto data = generate_synthetic(spec).data;
  ModelDims dims;
  dims.feature_dim = 8;
  dims.rounds = 1;
  dims.classes = 2;
  const auto params = init_model(dims, 0);
  FewShotOptions options;
  options.k = 79;
  options.depth = 1;
  const auto report = evaluate_fewshot(data, params, {5, 1, 15}, 3, 1, options);
  CHECK(report.episodes == 3);
  // 75 queries per episode: accuracies are multiples of 1/75
  CHECK(std::fabs(report.mean_accuracy * 75.0 * 3.0 -
                  std::round(report.mean_accuracy * 75.0 * 3.0)) < 1e-9);

  FewShotOptions over = options;
  over.k = 80;
  CHECK_THROWS_AS(evaluate_fewshot(data, params, {5, 1, 15}, 3, 1, over), CapacityError);
}

TEST_CASE("few-shot validation errors") {
  SyntheticSpec spec;
  spec.classes = 3;
  spec.per_class = 4;
  spec.dim = 4;
  spec.seed = 16;
  const auto data = generate_synthetic(spec).data;
  FewShotOptions options;
  options.depth = 0;
  CHECK_THROWS_AS(evaluate_fewshot(data, identity_pipeline(4), {5, 1, 3}, 5, 1, options),
                  CapacityError);
  CHECK_THROWS_AS(evaluate_fewshot(data, identity_pipeline(4), {2, 1, 1}, 0, 1, options),
                  DegenerateInputError);
}

}  // TEST_SUITE
