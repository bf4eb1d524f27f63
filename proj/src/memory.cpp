#include "mne/memory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace mne {

void EpisodicMemory::insert(Vec feature, std::optional<int> label) {
  if (dim_ == 0 && entries_.empty()) {
    dim_ = feature.size();
  }
  if (feature.size() != dim_) {
    throw ShapeError("memory: feature dim " + std::to_string(feature.size()) +
                     " != memory dim " + std::to_string(dim_));
  }
  MemoryEntry e;
  e.id = next_id_++;
  e.feature = l2_normalize(feature);
  e.label = label;
  index_[e.id] = entries_.size();
  entries_.push_back(std::move(e));
}

EpisodicMemory EpisodicMemory::init(const std::vector<Vec>& features,
                                    const std::vector<int>& labels) {
  if (features.size() != labels.size()) {
    throw ShapeError("memory_init: " + std::to_string(features.size()) + " features vs " +
                     std::to_string(labels.size()) + " labels");
  }
  EpisodicMemory mem;
  for (std::size_t i = 0; i < features.size(); ++i) {
    mem.insert(features[i], labels[i]);
  }
  return mem;
}

std::vector<std::int64_t> EpisodicMemory::augment(const std::vector<Vec>& features) {
  std::vector<std::int64_t> ids;
  ids.reserve(features.size());
  for (const Vec& f : features) {
    insert(f, std::nullopt);
    ids.push_back(entries_.back().id);
  }
  return ids;
}

const MemoryEntry& EpisodicMemory::entry(std::int64_t id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw LookupError("memory: unknown id " + std::to_string(id));
  return entries_[it->second];
}

std::size_t EpisodicMemory::labeled_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.label.has_value() ? 1 : 0;
  return n;
}

std::vector<std::int64_t> EpisodicMemory::knn(const Vec& query, std::size_t k,
                                              std::span<const std::int64_t> exclude) const {
  if (k < 1) throw DegenerateInputError("knn: k must be >= 1");
  if (entries_.empty()) throw CapacityError("knn: memory is empty");
  if (query.size() != dim_) {
    throw ShapeError("knn: query dim " + std::to_string(query.size()) + " != memory dim " +
                     std::to_string(dim_));
  }
  const Vec q = l2_normalize(query);

  auto excluded = [&](std::int64_t id) {
    for (std::int64_t e : exclude)
      if (e == id) return true;
    return false;
  };

  std::vector<std::pair<double, std::int64_t>> cand;
  cand.reserve(entries_.size());
  for (const auto& e : entries_) {
    if (excluded(e.id)) continue;
    double d2 = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double diff = q[j] - e.feature[j];
      d2 += diff * diff;
    }
    cand.emplace_back(d2, e.id);
  }
  if (cand.size() < k) {
    throw CapacityError("knn: need " + std::to_string(k) + " candidates, have " +
                        std::to_string(cand.size()));
  }
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());

  std::vector<std::int64_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = cand[i].second;
  return out;
}

std::vector<std::vector<std::int64_t>> EpisodicMemory::knn_batch(
    const std::vector<Vec>& queries, std::size_t k,
    std::span<const std::int64_t> exclude, Exec exec) const {
  std::vector<std::vector<std::int64_t>> out(queries.size());
  parallel_for(queries.size(), exec, [&](std::size_t i) { out[i] = knn(queries[i], k, exclude); });
  return out;
}

void EpisodicMemory::update(std::span<const std::int64_t> ids,
                            const std::vector<Vec>& features) {
  if (ids.size() != features.size()) {
    throw ShapeError("memory_update: ids/features length mismatch");
  }
  // validate everything before mutating anything
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!contains(ids[i])) {
      throw LookupError("memory_update: unknown id " + std::to_string(ids[i]));
    }
    if (features[i].size() != dim_) throw ShapeError("memory_update: feature dim mismatch");
    if (norm(features[i]) == 0.0) {
      throw DegenerateInputError("memory_update: zero feature for id " + std::to_string(ids[i]));
    }
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    entries_[index_.at(ids[i])].feature = l2_normalize(features[i]);
  }
}

EpisodicMemory EpisodicMemory::sample(double ratio, std::uint64_t seed) const {
  if (!(ratio > 0.0) || ratio > 1.0) {
    throw DegenerateInputError("memory_sample: ratio must be in (0, 1]");
  }
  const auto n = static_cast<std::size_t>(
      std::llround(ratio * static_cast<double>(entries_.size())));
  if (n == 0) throw CapacityError("memory_sample: sample would be empty");

  std::vector<std::size_t> order(entries_.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(n);
  std::sort(order.begin(), order.end());

  EpisodicMemory out;
  out.dim_ = dim_;
  out.next_id_ = next_id_;
  out.entries_.reserve(n);
  for (std::size_t pos : order) {
    out.index_[entries_[pos].id] = out.entries_.size();
    out.entries_.push_back(entries_[pos]);
  }
  return out;
}

}  // namespace mne
