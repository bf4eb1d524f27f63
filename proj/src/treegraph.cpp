#include "mne/treegraph.hpp"

#include <ostream>
#include <string>

namespace mne {

std::size_t full_tree_size(int k, int h) {
  std::size_t total = 0;
  std::size_t level = 1;
  for (int d = 0; d <= h; ++d) {
    total += level;
    level *= static_cast<std::size_t>(k);
  }
  return total;
}

NeighbourhoodTree build_tree(const Vec& target, std::optional<std::int64_t> target_id,
                             const EpisodicMemory& mem, int k, int h) {
  if (k < 1) throw DegenerateInputError("build_tree: k must be >= 1");
  if (h < 0) throw DegenerateInputError("build_tree: depth must be >= 0");
  if (h > 0) {
    if (mem.size() < static_cast<std::size_t>(k) + 1) {
      throw CapacityError("build_tree: memory has " + std::to_string(mem.size()) +
                          " entries, need at least " + std::to_string(k + 1));
    }
    if (target.size() != mem.dim()) {
      throw ShapeError("build_tree: target dim != memory dim");
    }
  }
  const std::size_t total = full_tree_size(k, h);
  if (total > (std::size_t{1} << 24)) {
    throw CapacityError("build_tree: tree of " + std::to_string(total) + " nodes is too large");
  }

  NeighbourhoodTree tree;
  tree.k = k;
  tree.depth = h;
  tree.nodes.reserve(total);

  TreeNode root;
  root.index = 0;
  root.parent = -1;
  root.depth = 0;
  root.memory_id = target_id;
  root.state = target;
  tree.nodes.push_back(std::move(root));

  std::vector<std::int32_t> frontier{0};
  for (int d = 1; d <= h; ++d) {
    std::vector<std::int32_t> next;
    next.reserve(frontier.size() * static_cast<std::size_t>(k));
    for (std::int32_t idx : frontier) {
      std::int64_t own[1];
      std::span<const std::int64_t> exclude;
      if (tree.nodes[static_cast<std::size_t>(idx)].memory_id.has_value()) {
        own[0] = *tree.nodes[static_cast<std::size_t>(idx)].memory_id;
        exclude = std::span<const std::int64_t>(own, 1);
      }
      const auto ids =
          mem.knn(tree.nodes[static_cast<std::size_t>(idx)].state, static_cast<std::size_t>(k),
                  exclude);
      for (std::int64_t id : ids) {
        TreeNode child;
        child.index = static_cast<std::int32_t>(tree.nodes.size());
        child.parent = idx;
        child.depth = d;
        child.memory_id = id;
        child.state = mem.entry(id).feature;
        tree.nodes[static_cast<std::size_t>(idx)].children.push_back(child.index);
        next.push_back(child.index);
        tree.nodes.push_back(std::move(child));
      }
    }
    frontier = std::move(next);
  }
  return tree;
}

std::unordered_map<std::int64_t, int> node_frequency(const NeighbourhoodTree& tree) {
  std::unordered_map<std::int64_t, int> counts;
  for (const TreeNode& n : tree.nodes) {
    if (n.parent < 0) continue;
    counts[*n.memory_id] += 1;
  }
  return counts;
}

void dump_tree(const NeighbourhoodTree& tree, std::ostream& os) {
  for (const TreeNode& n : tree.nodes) {
    os << n.index << ' ' << n.depth << ' ' << n.parent << ' '
       << (n.memory_id ? *n.memory_id : std::int64_t{-1}) << '\n';
  }
}

}  // namespace mne
