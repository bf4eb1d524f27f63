#ifndef MNE_LOSSES_HPP
#define MNE_LOSSES_HPP

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "mne/embed.hpp"
#include "mne/numeric.hpp"

namespace mne {

// Bias-free linear classifier, one row per class.
struct Classifier {
  Matrix weight;  // classes x dim

  std::size_t classes() const { return weight.rows; }
  std::size_t dim() const { return weight.cols; }
};

struct CeLossResult {
  double loss = 0.0;
  Vec g_embedding;
  Matrix g_weight;
};

// Softmax cross-entropy over class logits w_i . f, stabilized by max
// subtraction; analytic gradients for both the embedding and the weights.
CeLossResult ce_loss(const Vec& embedding, int label, const Classifier& clf);

struct BceLossResult {
  double loss = 0.0;              // summed, not averaged
  std::vector<double> g_prob;     // dL/dp per record
  std::size_t pairs = 0;
};

// Binary cross-entropy over pair probabilities; every record must carry its
// same_class ground truth.
BceLossResult bce_loss(std::span<const PairProbRecord> records);

struct LossBreakdown {
  double ce = 0.0;
  double bce = 0.0;
  double total = 0.0;  // ce + lambda * bce
  std::size_t pair_count = 0;
};

struct TotalLossResult {
  LossBreakdown breakdown;
  EmbedGrads embed_grads;  // per-round params + root state
  Matrix g_classifier;
};

// Classification loss on the embedding plus lambda times the pair loss, with
// gradients propagated through the whole aggregation. Fills same_class on
// output.records from node labels: the root takes `label`, every other node
// the label of its memory entry (missing label -> StateError).
TotalLossResult total_loss(EmbedOutput& output, const NeighbourhoodTree& tree,
                           std::span<const AsaParams> params, int label,
                           const Classifier& clf,
                           const std::unordered_map<std::int64_t, int>& node_labels,
                           double lambda);

// Loss value only (no tape or gradients needed); used by the
// finite-difference checks where the forward pass dominates the cost.
LossBreakdown total_loss_value(const EmbedOutput& output, const NeighbourhoodTree& tree,
                               int label, const Classifier& clf,
                               const std::unordered_map<std::int64_t, int>& node_labels,
                               double lambda);

}  // namespace mne

#endif  // MNE_LOSSES_HPP
