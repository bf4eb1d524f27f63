#ifndef MNE_EVALMETRICS_HPP
#define MNE_EVALMETRICS_HPP

#include <cstdint>
#include <vector>

#include "mne/dataset.hpp"
#include "mne/model.hpp"
#include "mne/parallel.hpp"

namespace mne {

// One scored query: gallery ids ordered by descending similarity plus the
// aligned relevance mask.
struct RankingResult {
  std::int64_t query_id = 0;
  std::vector<std::int64_t> ranked;
  std::vector<char> relevance;
};

// AP = (1/R) * sum over relevant ranks k of precision@k. Requires at least
// one relevant item.
double average_precision(const RankingResult& ranking);

struct RetrievalOptions {
  int k = 12;
  int depth = 2;
  AggMode mode = AggMode::attention;
  double memory_sample_ratio = 1.0;  // fraction of the gallery added to memory
  std::uint64_t sample_seed = 0;
  bool queries_are_gallery = false;  // drop the i-th gallery item for query i
  // Optional camera tags; when both are set, gallery items sharing the
  // query's class and camera are dropped from that query's ranking.
  const std::vector<int>* query_cameras = nullptr;
  const std::vector<int>* gallery_cameras = nullptr;
  Exec exec = Exec::parallel;
};

struct RetrievalMetrics {
  double map = 0.0;
  double rank1 = 0.0;
  std::size_t queries_scored = 0;
  std::size_t queries_skipped = 0;  // no relevant gallery item
};

// Builds the evaluation memory (train encoder outputs plus an optionally
// subsampled gallery), embeds every query and gallery item and ranks the
// gallery by cosine similarity, ties broken by ascending gallery position.
// Queries without a single relevant candidate come back with an empty
// ranking and are skipped by the metrics.
std::vector<RankingResult> retrieval_rankings(const Dataset& train, const Dataset& queries,
                                              const Dataset& gallery,
                                              const ModelParams& params,
                                              const RetrievalOptions& options);

// Averages AP / rank-1 over the scoreable queries of retrieval_rankings.
RetrievalMetrics evaluate_retrieval(const Dataset& train, const Dataset& queries,
                                    const Dataset& gallery, const ModelParams& params,
                                    const RetrievalOptions& options);

struct EpisodeShape {
  int n_way = 5;
  int m_shot = 1;
  int q_queries = 15;
};

struct FewShotOptions {
  int k = 10;
  int depth = 2;
  AggMode mode = AggMode::attention;
  Exec exec = Exec::parallel;
};

struct FewShotReport {
  std::size_t episodes = 0;
  double mean_accuracy = 0.0;
  double ci95 = 0.0;  // 1.96 * sample std / sqrt(episodes)
};

// Transductive few-shot evaluation: per episode, support and query features
// form an unlabeled memory, every item is neighbourhood-embedded, class
// prototypes are the mean support embeddings and queries take the prototype
// with the highest cosine (ties to the lowest class id). Episode e draws
// from seed + e, so episodes are independent of execution order.
FewShotReport evaluate_fewshot(const Dataset& test, const ModelParams& params,
                               const EpisodeShape& shape, std::size_t episodes,
                               std::uint64_t seed, const FewShotOptions& options);

}  // namespace mne

#endif  // MNE_EVALMETRICS_HPP
