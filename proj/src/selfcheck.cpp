#include "mne/selfcheck.hpp"

#include <random>

#include "mne/embed.hpp"
#include "mne/losses.hpp"
#include "mne/treegraph.hpp"

namespace mne {

SelfCheckOutcome run_selfcheck(const SelfCheckConfig& config) {
  if (config.memory_size < static_cast<std::size_t>(config.k) + 1) {
    throw CapacityError("selfcheck: memory too small for k");
  }

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random_vec = [&](std::size_t n) {
    Vec v(n);
    for (double& x : v) x = gauss(rng);
    return v;
  };

  std::vector<Vec> features;
  std::vector<int> labels;
  std::uniform_int_distribution<int> label_dist(0, static_cast<int>(config.classes) - 1);
  for (std::size_t i = 0; i < config.memory_size; ++i) {
    features.push_back(random_vec(config.dim));
    labels.push_back(label_dist(rng));
  }
  const EpisodicMemory mem = EpisodicMemory::init(features, labels);
  std::unordered_map<std::int64_t, int> node_labels;
  for (const auto& e : mem.entries()) node_labels[e.id] = *e.label;

  const Vec target = random_vec(config.dim);
  const int target_label = label_dist(rng);

  ModelDims dims;
  dims.feature_dim = config.dim;
  dims.diff_dim = config.diff_dim;
  dims.rounds = config.depth;
  dims.classes = config.classes;
  ModelParams params = init_model(dims, config.seed + 1);

  // the tree is built once and held fixed: gradients are taken through the
  // aggregation, not through the discrete neighbour selection
  const NeighbourhoodTree tree = build_tree(target, std::nullopt, mem, config.k, config.depth);

  const std::size_t model_count = param_count(params);
  Vec flat = flatten(params);
  flat.insert(flat.end(), target.begin(), target.end());
  std::vector<GradCheckBlock> blocks = param_layout(params);
  blocks.push_back({"root.state", model_count, config.dim});

  auto loss_at = [&](const Vec& theta) {
    ModelParams p = params;
    unflatten(p, std::span<const double>(theta.data(), model_count));
    NeighbourhoodTree t = tree;
    t.nodes[static_cast<std::size_t>(t.root_index)].state.assign(
        theta.begin() + static_cast<std::ptrdiff_t>(model_count), theta.end());
    const EmbedOutput out = neighbourhood_embed(t, p.asa, AggMode::attention);
    return total_loss_value(out, t, target_label, p.classifier, node_labels, config.lambda)
        .total;
  };

  // analytic gradient at the base point
  EmbedOutput out = neighbourhood_embed(tree, params.asa, AggMode::attention, true);
  auto loss = total_loss(out, tree, params.asa, target_label, params.classifier, node_labels,
                         config.lambda);
  ModelGrads grads = zeros_like(params);
  accumulate(grads, loss.embed_grads, loss.g_classifier);
  Vec flat_grads = flatten(grads);
  flat_grads.insert(flat_grads.end(), loss.embed_grads.root.begin(),
                    loss.embed_grads.root.end());

  SelfCheckOutcome outcome;
  outcome.config = config;
  // bracket the configured step: coordinates with tiny gradients of a large
  // pair-loss sum need a coarser step (rounding), high-curvature ones a
  // finer step (truncation)
  const double steps[] = {config.step, 0.5 * config.step, 4.0 * config.step};
  outcome.report = finite_diff_check(loss_at, flat, flat_grads, blocks, config.tolerance,
                                     std::span<const double>(steps, 3), config.exec);
  return outcome;
}

std::vector<SelfCheckConfig> selfcheck_sweep(std::uint64_t base_seed) {
  // spans dim x k x depth without running the full cross product
  const struct {
    std::size_t dim;
    int k;
    int depth;
  } grid[] = {
      {2, 1, 1}, {2, 3, 2}, {8, 1, 2}, {8, 8, 1}, {32, 3, 1}, {32, 8, 2},
  };
  std::vector<SelfCheckConfig> configs;
  for (std::size_t i = 0; i < std::size(grid); ++i) {
    SelfCheckConfig c;
    c.dim = grid[i].dim;
    c.k = grid[i].k;
    c.depth = grid[i].depth;
    // wide trees sum hundreds of pair losses, so the objective is O(100)
    // and a 1e-5 step leaves tiny gradients below the rounding noise of
    // the central difference; a coarser step keeps the check conditioned
    c.step = c.dim >= 32 ? 1e-4 : 1e-5;
    c.seed = base_seed + i;
    configs.push_back(c);
  }
  return configs;
}

}  // namespace mne
