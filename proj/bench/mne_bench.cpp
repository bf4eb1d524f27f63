// Timing comparison of the serial reference loops against the OpenMP
// kernels: batched knn, batched neighbourhood embedding and few-shot
// episode evaluation.

#include <cstdio>
#include <random>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mne/embed.hpp"
#include "mne/evalmetrics.hpp"
#include "mne/synthetic.hpp"
#include "mne/trainer.hpp"

namespace {

double now() {
#ifdef _OPENMP
  return omp_get_wtime();
#else
  return static_cast<double>(clock()) / CLOCKS_PER_SEC;
#endif
}

template <typename Fn>
double time_best_of(int reps, Fn&& fn) {
  double best = 1e100;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now();
    fn();
    best = std::min(best, now() - t0);
  }
  return best;
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-24s serial %8.3f ms   parallel %8.3f ms   speedup %.2fx\n", name,
              serial * 1e3, parallel * 1e3, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t memory_size = 20000;
  std::size_t dim = 64;
  std::size_t queries = 256;
  int k = 12;
  int depth = 2;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    const double v = std::stod(argv[i + 1]);
    if (flag == "--memory") memory_size = static_cast<std::size_t>(v);
    else if (flag == "--dim") dim = static_cast<std::size_t>(v);
    else if (flag == "--queries") queries = static_cast<std::size_t>(v);
    else if (flag == "--k") k = static_cast<int>(v);
    else if (flag == "--depth") depth = static_cast<int>(v);
  }
  std::printf("memory %zu  dim %zu  queries %zu  k %d  depth %d  threads %d\n", memory_size,
              dim, queries, k, depth, mne::max_threads());

  std::mt19937_64 rng(1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random_vec = [&]() {
    mne::Vec v(dim);
    for (double& x : v) x = gauss(rng);
    return v;
  };

  std::vector<mne::Vec> features(memory_size);
  std::vector<int> labels(memory_size);
  for (std::size_t i = 0; i < memory_size; ++i) {
    features[i] = random_vec();
    labels[i] = static_cast<int>(i % 97);
  }
  const auto mem = mne::EpisodicMemory::init(features, labels);

  std::vector<mne::Vec> query_feats(queries);
  for (auto& q : query_feats) q = random_vec();

  // batched exact knn
  {
    std::vector<std::vector<std::int64_t>> serial_out, parallel_out;
    const double ts = time_best_of(3, [&] {
      serial_out = mem.knn_batch(query_feats, static_cast<std::size_t>(k), {},
                                 mne::Exec::serial);
    });
    const double tp = time_best_of(3, [&] {
      parallel_out = mem.knn_batch(query_feats, static_cast<std::size_t>(k), {},
                                   mne::Exec::parallel);
    });
    if (serial_out != parallel_out) {
      std::printf("knn_batch: MISMATCH between serial and parallel results\n");
      return 1;
    }
    report("knn_batch", ts, tp);
  }

  // batched neighbourhood embedding over a smaller memory (tree cost grows
  // with k^depth, the knn inside dominates for large memories)
  {
    const std::size_t small = std::min<std::size_t>(memory_size, 2000);
    std::vector<mne::Vec> f2(features.begin(),
                             features.begin() + static_cast<std::ptrdiff_t>(small));
    std::vector<int> l2(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(small));
    const auto small_mem = mne::EpisodicMemory::init(f2, l2);

    mne::ModelDims dims;
    dims.feature_dim = dim;
    dims.rounds = depth;
    dims.classes = 97;
    const auto params = mne::init_model(dims, 7);

    std::vector<std::pair<mne::Vec, std::optional<std::int64_t>>> targets;
    targets.reserve(queries);
    for (const auto& q : query_feats) targets.emplace_back(q, std::nullopt);

    std::vector<mne::EmbedOutput> serial_out, parallel_out;
    const double ts = time_best_of(3, [&] {
      serial_out = mne::batch_embed(targets, small_mem, params.asa, k, depth,
                                    mne::AggMode::attention, mne::Exec::serial);
    });
    const double tp = time_best_of(3, [&] {
      parallel_out = mne::batch_embed(targets, small_mem, params.asa, k, depth,
                                      mne::AggMode::attention, mne::Exec::parallel);
    });
    for (std::size_t i = 0; i < serial_out.size(); ++i) {
      if (serial_out[i].embedding != parallel_out[i].embedding) {
        std::printf("batch_embed: MISMATCH between serial and parallel results\n");
        return 1;
      }
    }
    report("batch_embed", ts, tp);
  }

  // few-shot episode evaluation
  {
    mne::SyntheticSpec spec;
    spec.classes = 20;
    spec.per_class = 20;
    spec.dim = dim;
    spec.sigma = 0.2;
    spec.seed = 3;
    const auto data = mne::generate_synthetic(spec);

    mne::ModelDims dims;
    dims.feature_dim = dim;
    dims.rounds = depth;
    dims.classes = 20;
    const auto params = mne::init_model(dims, 7);

    mne::FewShotOptions options;
    options.k = std::min(k, 10);
    options.depth = depth;

    mne::FewShotReport serial_report, parallel_report;
    const double ts = time_best_of(2, [&] {
      options.exec = mne::Exec::serial;
      serial_report = mne::evaluate_fewshot(data.data, params, {}, 50, 11, options);
    });
    const double tp = time_best_of(2, [&] {
      options.exec = mne::Exec::parallel;
      parallel_report = mne::evaluate_fewshot(data.data, params, {}, 50, 11, options);
    });
    if (serial_report.mean_accuracy != parallel_report.mean_accuracy) {
      std::printf("evaluate_fewshot: MISMATCH between serial and parallel results\n");
      return 1;
    }
    report("evaluate_fewshot", ts, tp);
  }
  return 0;
}
