#include "mne/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "mne/embed.hpp"
#include "mne/trainer.hpp"

namespace mne {

double average_precision(const RankingResult& ranking) {
  if (ranking.ranked.size() != ranking.relevance.size()) {
    throw ShapeError("average_precision: ranking/relevance length mismatch");
  }
  std::size_t relevant = 0;
  for (char r : ranking.relevance) relevant += r ? 1 : 0;
  if (relevant == 0) {
    throw DegenerateInputError("average_precision: no relevant item for query " +
                               std::to_string(ranking.query_id));
  }
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < ranking.relevance.size(); ++k) {
    if (ranking.relevance[k]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return sum / static_cast<double>(relevant);
}

std::vector<RankingResult> retrieval_rankings(const Dataset& train, const Dataset& queries,
                                              const Dataset& gallery,
                                              const ModelParams& params,
                                              const RetrievalOptions& options) {
  train.validate();
  queries.validate();
  gallery.validate();
  if (gallery.size() == 0) throw DegenerateInputError("evaluate_retrieval: empty gallery");
  if (!queries.labeled() || !gallery.labeled()) {
    throw DegenerateInputError("evaluate_retrieval: queries and gallery need labels");
  }
  if (options.queries_are_gallery && queries.size() != gallery.size()) {
    throw ShapeError("evaluate_retrieval: self-exclusion needs matching query/gallery sets");
  }
  if (options.query_cameras != nullptr || options.gallery_cameras != nullptr) {
    if (options.query_cameras == nullptr || options.gallery_cameras == nullptr ||
        options.query_cameras->size() != queries.size() ||
        options.gallery_cameras->size() != gallery.size()) {
      throw ShapeError("evaluate_retrieval: camera tags must cover both sets");
    }
  }

  // evaluation memory: train features plus a (possibly subsampled) gallery
  EpisodicMemory mem =
      EpisodicMemory::init(encode_all(params.encoder, train.features, options.exec),
                           train.labels);
  const std::vector<Vec> gallery_feats =
      encode_all(params.encoder, gallery.features, options.exec);

  std::vector<std::size_t> kept(gallery.size());
  std::iota(kept.begin(), kept.end(), 0);
  if (options.memory_sample_ratio < 1.0) {
    if (!(options.memory_sample_ratio > 0.0)) {
      throw DegenerateInputError("evaluate_retrieval: sample ratio must be in (0, 1]");
    }
    const auto n = static_cast<std::size_t>(std::llround(
        options.memory_sample_ratio * static_cast<double>(gallery.size())));
    if (n == 0) throw CapacityError("evaluate_retrieval: gallery sample would be empty");
    std::mt19937_64 rng(options.sample_seed);
    std::shuffle(kept.begin(), kept.end(), rng);
    kept.resize(n);
    std::sort(kept.begin(), kept.end());
  }
  std::vector<Vec> kept_feats;
  kept_feats.reserve(kept.size());
  for (std::size_t i : kept) kept_feats.push_back(gallery_feats[i]);
  const auto new_ids = mem.augment(kept_feats);
  std::vector<std::optional<std::int64_t>> gallery_mem_id(gallery.size());
  for (std::size_t i = 0; i < kept.size(); ++i) gallery_mem_id[kept[i]] = new_ids[i];

  std::vector<std::pair<Vec, std::optional<std::int64_t>>> targets;
  targets.reserve(queries.size() + gallery.size());
  const std::vector<Vec> query_feats =
      encode_all(params.encoder, queries.features, options.exec);
  for (const Vec& f : query_feats) targets.emplace_back(f, std::nullopt);
  for (std::size_t i = 0; i < gallery.size(); ++i) {
    targets.emplace_back(gallery_feats[i], gallery_mem_id[i]);
  }
  const auto outputs = batch_embed(targets, mem, params.asa, options.k, options.depth,
                                   options.mode, options.exec);

  std::vector<RankingResult> rankings(queries.size());
  parallel_for(queries.size(), options.exec, [&](std::size_t q) {
    const Vec& qe = outputs[q].embedding;
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(gallery.size());
    for (std::size_t g = 0; g < gallery.size(); ++g) {
      if (options.queries_are_gallery && g == q) continue;
      if (options.query_cameras != nullptr &&
          (*options.query_cameras)[q] == (*options.gallery_cameras)[g] &&
          queries.labels[q] == gallery.labels[g]) {
        continue;
      }
      // all embeddings are unit norm, so the dot product is the cosine
      order.emplace_back(-dot(qe, outputs[queries.size() + g].embedding), g);
    }
    std::sort(order.begin(), order.end());

    RankingResult& ranking = rankings[q];
    ranking.query_id = static_cast<std::int64_t>(q);
    ranking.ranked.reserve(order.size());
    ranking.relevance.reserve(order.size());
    std::size_t relevant = 0;
    for (const auto& [negsim, g] : order) {
      ranking.ranked.push_back(static_cast<std::int64_t>(g));
      const char rel = queries.labels[q] == gallery.labels[g] ? 1 : 0;
      ranking.relevance.push_back(rel);
      relevant += rel;
    }
    if (relevant == 0) {
      ranking.ranked.clear();  // not scoreable, skipped by the metrics
      ranking.relevance.clear();
    }
  });
  return rankings;
}

RetrievalMetrics evaluate_retrieval(const Dataset& train, const Dataset& queries,
                                    const Dataset& gallery, const ModelParams& params,
                                    const RetrievalOptions& options) {
  const auto rankings = retrieval_rankings(train, queries, gallery, params, options);

  RetrievalMetrics metrics;
  double ap_sum = 0.0, hit_sum = 0.0;
  for (const auto& r : rankings) {
    if (r.ranked.empty()) {
      ++metrics.queries_skipped;
      continue;
    }
    ++metrics.queries_scored;
    ap_sum += average_precision(r);
    hit_sum += r.relevance.front() ? 1.0 : 0.0;
  }
  if (metrics.queries_scored == 0) {
    throw DegenerateInputError("evaluate_retrieval: no scoreable query");
  }
  metrics.map = ap_sum / static_cast<double>(metrics.queries_scored);
  metrics.rank1 = hit_sum / static_cast<double>(metrics.queries_scored);
  return metrics;
}

FewShotReport evaluate_fewshot(const Dataset& test, const ModelParams& params,
                               const EpisodeShape& shape, std::size_t episodes,
                               std::uint64_t seed, const FewShotOptions& options) {
  test.validate();
  if (!test.labeled()) throw DegenerateInputError("evaluate_fewshot: labels required");
  if (shape.n_way < 2 || shape.m_shot < 1 || shape.q_queries < 1) {
    throw DegenerateInputError("evaluate_fewshot: bad episode shape");
  }
  if (episodes == 0) throw DegenerateInputError("evaluate_fewshot: need at least one episode");

  const int per_class = shape.m_shot + shape.q_queries;
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(test.num_classes()));
  for (std::size_t i = 0; i < test.size(); ++i) {
    by_class[static_cast<std::size_t>(test.labels[i])].push_back(i);
  }
  std::vector<int> eligible;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() >= static_cast<std::size_t>(per_class)) {
      eligible.push_back(static_cast<int>(c));
    }
  }
  if (eligible.size() < static_cast<std::size_t>(shape.n_way)) {
    throw CapacityError("evaluate_fewshot: only " + std::to_string(eligible.size()) +
                        " classes have " + std::to_string(per_class) + " items, need " +
                        std::to_string(shape.n_way));
  }

  std::vector<double> accuracy(episodes, 0.0);
  parallel_for(episodes, options.exec, [&](std::size_t e) {
    std::mt19937_64 rng(seed + e);  // per-episode stream, independent of scheduling
    std::vector<int> classes = eligible;
    std::shuffle(classes.begin(), classes.end(), rng);
    classes.resize(static_cast<std::size_t>(shape.n_way));
    std::sort(classes.begin(), classes.end());  // prototype order = ascending class id

    std::vector<std::size_t> support, queries;
    for (int c : classes) {
      std::vector<std::size_t> pool = by_class[static_cast<std::size_t>(c)];
      std::shuffle(pool.begin(), pool.end(), rng);
      for (int j = 0; j < shape.m_shot; ++j) support.push_back(pool[static_cast<std::size_t>(j)]);
      for (int j = 0; j < shape.q_queries; ++j) {
        queries.push_back(pool[static_cast<std::size_t>(shape.m_shot + j)]);
      }
    }
    std::vector<std::size_t> items = support;
    items.insert(items.end(), queries.begin(), queries.end());

    std::vector<Vec> encoded(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      encoded[i] = encoder_forward(params.encoder, test.features[items[i]]);
    }
    EpisodicMemory mem;  // labels hidden: the memory is entirely unlabeled
    mem.augment(encoded);

    std::vector<std::pair<Vec, std::optional<std::int64_t>>> targets;
    targets.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      targets.emplace_back(encoded[i], static_cast<std::int64_t>(i));
    }
    const auto outputs = batch_embed(targets, mem, params.asa, options.k, options.depth,
                                     options.mode, Exec::serial);

    // class prototypes: mean of the support embeddings
    const std::size_t dim = outputs.front().embedding.size();
    std::vector<Vec> prototype(static_cast<std::size_t>(shape.n_way), Vec(dim, 0.0));
    for (std::size_t s = 0; s < support.size(); ++s) {
      const std::size_t c = s / static_cast<std::size_t>(shape.m_shot);
      axpy(1.0 / shape.m_shot, outputs[s].embedding, prototype[c]);
    }
    std::vector<double> proto_norm(prototype.size());
    for (std::size_t c = 0; c < prototype.size(); ++c) proto_norm[c] = norm(prototype[c]);

    std::size_t correct = 0;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
      const Vec& qe = outputs[support.size() + qi].embedding;
      int best = 0;
      double best_sim = -2.0;
      for (std::size_t c = 0; c < prototype.size(); ++c) {
        const double sim = dot(qe, prototype[c]) / proto_norm[c];
        if (sim > best_sim) {  // strict: ties stay with the lowest class id
          best_sim = sim;
          best = static_cast<int>(c);
        }
      }
      const std::size_t true_class = qi / static_cast<std::size_t>(shape.q_queries);
      if (classes[static_cast<std::size_t>(best)] == classes[true_class]) ++correct;
    }
    accuracy[e] = static_cast<double>(correct) /
                  static_cast<double>(shape.n_way * shape.q_queries);
  });

  FewShotReport report;
  report.episodes = episodes;
  double sum = 0.0;
  for (double a : accuracy) sum += a;
  report.mean_accuracy = sum / static_cast<double>(episodes);
  if (episodes > 1) {
    double ss = 0.0;
    for (double a : accuracy) ss += (a - report.mean_accuracy) * (a - report.mean_accuracy);
    const double sample_std = std::sqrt(ss / static_cast<double>(episodes - 1));
    report.ci95 = 1.96 * sample_std / std::sqrt(static_cast<double>(episodes));
  }
  return report;
}

}  // namespace mne
