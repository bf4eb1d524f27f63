#include "mne/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mne {

CeLossResult ce_loss(const Vec& embedding, int label, const Classifier& clf) {
  if (clf.weight.cols != embedding.size()) {
    throw ShapeError("ce_loss: classifier dim " + std::to_string(clf.weight.cols) +
                     " != embedding dim " + std::to_string(embedding.size()));
  }
  if (label < 0 || static_cast<std::size_t>(label) >= clf.classes()) {
    throw LookupError("ce_loss: label " + std::to_string(label) + " out of range for " +
                      std::to_string(clf.classes()) + " classes");
  }
  const std::size_t n = clf.classes();
  Vec logits = matvec(clf.weight, embedding);
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double expsum = 0.0;
  Vec softmax(n);
  for (std::size_t i = 0; i < n; ++i) {
    softmax[i] = std::exp(logits[i] - zmax);
    expsum += softmax[i];
  }
  for (std::size_t i = 0; i < n; ++i) softmax[i] /= expsum;

  CeLossResult result;
  result.loss = -(logits[static_cast<std::size_t>(label)] - zmax - std::log(expsum));
  Vec g_logits = softmax;
  g_logits[static_cast<std::size_t>(label)] -= 1.0;
  result.g_embedding = matvec_transposed(clf.weight, g_logits);
  result.g_weight = Matrix(n, embedding.size());
  add_outer(result.g_weight, g_logits, embedding);
  return result;
}

BceLossResult bce_loss(std::span<const PairProbRecord> records) {
  BceLossResult result;
  result.g_prob.resize(records.size(), 0.0);
  result.pairs = records.size();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (!rec.same_class.has_value()) {
      throw StateError("bce_loss: record " + std::to_string(i) + " has no ground truth");
    }
    const double p = rec.p;
    if (!(p > 0.0) || !(p < 1.0)) {
      throw NumericError("bce_loss: probability outside (0,1)");
    }
    if (*rec.same_class) {
      result.loss -= std::log(p);
      result.g_prob[i] = -1.0 / p;
    } else {
      result.loss -= std::log1p(-p);
      result.g_prob[i] = 1.0 / (1.0 - p);
    }
  }
  return result;
}

namespace {

int node_label(const NeighbourhoodTree& tree, std::int32_t index, int root_label,
               const std::unordered_map<std::int64_t, int>& node_labels) {
  if (index == tree.root_index) return root_label;
  const TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
  if (!node.memory_id.has_value()) {
    throw StateError("total_loss: non-root node without memory id");
  }
  auto it = node_labels.find(*node.memory_id);
  if (it == node_labels.end()) {
    throw StateError("total_loss: memory entry " + std::to_string(*node.memory_id) +
                     " has no label");
  }
  return it->second;
}

void fill_same_class(std::vector<PairProbRecord>& records, const NeighbourhoodTree& tree,
                     int root_label,
                     const std::unordered_map<std::int64_t, int>& node_labels) {
  for (auto& rec : records) {
    const int lu = node_label(tree, rec.parent, root_label, node_labels);
    const int lv = node_label(tree, rec.child, root_label, node_labels);
    rec.same_class = (lu == lv);
  }
}

}  // namespace

TotalLossResult total_loss(EmbedOutput& output, const NeighbourhoodTree& tree,
                           std::span<const AsaParams> params, int label,
                           const Classifier& clf,
                           const std::unordered_map<std::int64_t, int>& node_labels,
                           double lambda) {
  if (lambda < 0.0) throw DegenerateInputError("total_loss: lambda must be >= 0");
  fill_same_class(output.records, tree, label, node_labels);

  const CeLossResult ce = ce_loss(output.embedding, label, clf);
  const BceLossResult bce = bce_loss(output.records);

  std::vector<double> g_probs(bce.g_prob.size());
  for (std::size_t i = 0; i < g_probs.size(); ++i) g_probs[i] = lambda * bce.g_prob[i];

  TotalLossResult result;
  result.breakdown.ce = ce.loss;
  result.breakdown.bce = bce.loss;
  result.breakdown.total = ce.loss + lambda * bce.loss;
  result.breakdown.pair_count = bce.pairs;
  result.embed_grads = embed_backward(output, tree, params, ce.g_embedding, g_probs);
  result.g_classifier = ce.g_weight;
  return result;
}

LossBreakdown total_loss_value(const EmbedOutput& output, const NeighbourhoodTree& tree,
                               int label, const Classifier& clf,
                               const std::unordered_map<std::int64_t, int>& node_labels,
                               double lambda) {
  std::vector<PairProbRecord> records = output.records;
  fill_same_class(records, tree, label, node_labels);
  const CeLossResult ce = ce_loss(output.embedding, label, clf);
  const BceLossResult bce = bce_loss(records);
  LossBreakdown b;
  b.ce = ce.loss;
  b.bce = bce.loss;
  b.total = ce.loss + lambda * bce.loss;
  b.pair_count = bce.pairs;
  return b;
}

}  // namespace mne
