#ifndef MNE_TREEGRAPH_HPP
#define MNE_TREEGRAPH_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <unordered_map>
#include <vector>

#include "mne/memory.hpp"
#include "mne/numeric.hpp"

namespace mne {

struct TreeNode {
  std::int32_t index = 0;
  std::int32_t parent = -1;  // -1 for the root
  std::int32_t depth = 0;
  std::optional<std::int64_t> memory_id;  // absent only for a root not stored in memory
  std::vector<std::int32_t> children;
  Vec state;  // feature snapshot at construction time (f at round 0)
};

// Rooted k-ary neighbourhood tree of depth h: 1 + k + k^2 + ... + k^h nodes,
// nodes stored in breadth-first order (depths are contiguous). The same
// memory id may appear at several nodes. Immutable once built; embedding
// passes keep their per-round states outside the tree.
struct NeighbourhoodTree {
  std::vector<TreeNode> nodes;
  std::int32_t root_index = 0;
  int k = 0;
  int depth = 0;

  const TreeNode& root() const { return nodes[static_cast<std::size_t>(root_index)]; }
  std::size_t size() const { return nodes.size(); }
};

// Grows the tree by h expansion rounds: every current leaf gains its k
// nearest memory entries as children, excluding the leaf's own memory id.
// Child states are copies of the memory features at construction time.
// Requires mem.size() >= k + 1 whenever h >= 1.
NeighbourhoodTree build_tree(const Vec& target, std::optional<std::int64_t> target_id,
                             const EpisodicMemory& mem, int k, int h);

// Occurrence count of each memory id over all non-root nodes.
std::unordered_map<std::int64_t, int> node_frequency(const NeighbourhoodTree& tree);

// One node per line: "index depth parent memory_id" (-1 for absent values).
void dump_tree(const NeighbourhoodTree& tree, std::ostream& os);

// 1 + k + ... + k^h
std::size_t full_tree_size(int k, int h);

}  // namespace mne

#endif  // MNE_TREEGRAPH_HPP
