#ifndef MNE_MEMORY_HPP
#define MNE_MEMORY_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "mne/numeric.hpp"
#include "mne/parallel.hpp"

namespace mne {

struct MemoryEntry {
  std::int64_t id = 0;
  Vec feature;               // stored with unit L2 norm
  std::optional<int> label;  // absent for test-time augmented entries
};

// Episodic feature store: id-indexed entries supporting exact kNN, feature
// replacement and uniform subsampling. Features are L2-normalized on every
// insertion and update, so Euclidean ordering on stored entries matches
// descending-cosine ordering.
//
// Thread contract: any number of concurrent knn() readers OR one exclusive
// writer (augment/update); no internal locking.
class EpisodicMemory {
 public:
  EpisodicMemory() = default;

  // Labeled construction; ids are assigned 0..N-1 in input order.
  static EpisodicMemory init(const std::vector<Vec>& features,
                             const std::vector<int>& labels);

  // Unlabeled test-time augmentation. Returns the ids assigned to the new
  // entries, in input order.
  std::vector<std::int64_t> augment(const std::vector<Vec>& features);

  // Ids of the k nearest stored entries to the (internally unit-normalized)
  // query, excluding `exclude`, sorted by ascending distance with ties broken
  // by ascending id.
  std::vector<std::int64_t> knn(const Vec& query, std::size_t k,
                                std::span<const std::int64_t> exclude = {}) const;

  // One knn call per query; the parallel path distributes queries over
  // threads and is bitwise identical to the serial one.
  std::vector<std::vector<std::int64_t>> knn_batch(
      const std::vector<Vec>& queries, std::size_t k,
      std::span<const std::int64_t> exclude = {},
      Exec exec = Exec::parallel) const;

  // Replaces the features of existing entries (re-normalized); ids and
  // labels are untouched.
  void update(std::span<const std::int64_t> ids, const std::vector<Vec>& features);

  // Uniform subsample of round(ratio * size()) entries, deterministic per
  // seed; preserves ids, labels and relative order.
  EpisodicMemory sample(double ratio, std::uint64_t seed) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t dim() const { return dim_; }
  bool contains(std::int64_t id) const { return index_.count(id) != 0; }
  const MemoryEntry& entry(std::int64_t id) const;
  const std::vector<MemoryEntry>& entries() const { return entries_; }
  std::size_t labeled_count() const;

 private:
  void insert(Vec feature, std::optional<int> label);

  std::vector<MemoryEntry> entries_;
  std::unordered_map<std::int64_t, std::size_t> index_;
  std::size_t dim_ = 0;
  std::int64_t next_id_ = 0;
};

}  // namespace mne

#endif  // MNE_MEMORY_HPP
