#ifndef MNE_ASA_HPP
#define MNE_ASA_HPP

#include <optional>
#include <span>
#include <vector>

#include "mne/numeric.hpp"

namespace mne {

// Per-round parameters of the attentive aggregation module.
//   agg:   D x D transform applied to parent + weighted child sum
//   diff:  Dd x D projection of the parent-child feature difference
//   score: 1 x Dd map from the squared difference vector to a logit
struct AsaParams {
  AffineMap agg;
  AffineMap diff;
  AffineMap score;

  std::size_t feature_dim() const { return agg.weight.rows; }
  std::size_t diff_dim() const { return diff.weight.rows; }
};

// Gradients have exactly the parameter shapes.
using AsaGrads = AsaParams;

AsaParams zeros_like(const AsaParams& p);
void accumulate(AsaGrads& acc, const AsaGrads& g);

// Same-class probability for one (parent, child) pair recorded during an
// aggregation round; same_class is filled in by the loss once node labels
// are known.
struct PairProbRecord {
  std::int32_t parent = 0;  // node indices in the tree
  std::int32_t child = 0;
  int round = 0;  // 1-based aggregation round
  double p = 0.5;
  std::optional<bool> same_class;
};

// sigmoid(score(diff(f_u - f_v) elementwise-squared)); strictly inside (0,1).
double pairwise_prob(const Vec& f_u, const Vec& f_v, const AsaParams& params);

// probs / sum(probs); requires a nonempty, positive prob vector.
std::vector<double> normalize_weights(std::span<const double> probs);

// Pairwise probabilities against each child normalized to sum to one.
std::vector<double> attention_weights(const Vec& parent_state,
                                      const std::vector<Vec>& child_states,
                                      const AsaParams& params);

// Everything the backward pass needs, cached by the forward pass.
struct AsaTape {
  Vec parent_in;
  std::vector<Vec> child_in;
  std::vector<Vec> dvec;       // diff-projected difference per child
  std::vector<double> prob;    // sigmoid outputs
  std::vector<double> weight;  // normalized attention weights
  double prob_sum = 0.0;
  Vec agg_in;  // parent_in + sum of weighted children
};

struct AsaForwardResult {
  Vec out;
  std::vector<double> probs;  // one per child, in child order
};

// out = agg(parent + sum_v weight_v * child_v). An empty child set is
// allowed (the sum term is zero and no probabilities are produced).
AsaForwardResult asa_forward(const Vec& parent_state, std::span<const Vec> child_states,
                             const AsaParams& params, AsaTape* tape = nullptr);

struct AsaBackwardResult {
  Vec g_parent;
  std::vector<Vec> g_children;
};

// Exact reverse pass through the aggregation, including the dependence of
// the attention weights on both features via the pairwise probabilities.
// g_out is the upstream gradient at the aggregated output; g_probs holds one
// upstream gradient per recorded probability (pass zeros when unused).
// Parameter gradients are accumulated into acc.
AsaBackwardResult asa_backward(const AsaTape& tape, const AsaParams& params,
                               const Vec& g_out, std::span<const double> g_probs,
                               AsaGrads& acc);

}  // namespace mne

#endif  // MNE_ASA_HPP
