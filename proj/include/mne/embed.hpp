#ifndef MNE_EMBED_HPP
#define MNE_EMBED_HPP

#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mne/asa.hpp"
#include "mne/parallel.hpp"
#include "mne/treegraph.hpp"

namespace mne {

enum class AggMode { attention, mean, max };

const char* to_string(AggMode mode);
AggMode agg_mode_from_string(const std::string& s);

// Forward cache for the reverse pass: the per-round node states plus one
// attention tape per aggregation. Round r reads states[r-1] and writes
// states[r]; branch tapes are stored in the same order the records were
// emitted.
struct EmbedTape {
  AggMode mode = AggMode::attention;
  std::vector<std::vector<Vec>> states;  // [round][node], round 0 = tree snapshots
  struct BranchTape {
    std::int32_t node = 0;
    int round = 0;
    std::size_t record_offset = 0;  // slice of EmbedOutput.records
    std::size_t record_count = 0;
    AsaTape asa;
    std::vector<int> max_winner;  // max mode: winning input per component (0 = parent)
  };
  std::vector<std::vector<BranchTape>> rounds;  // [round-1][branch]
  Vec prenorm_root;
};

struct EmbedOutput {
  Vec embedding;  // unit norm
  std::vector<PairProbRecord> records;
  std::shared_ptr<const EmbedTape> tape;  // present iff requested
};

// Runs tree.depth aggregation rounds bottom-up: every branch node of the
// current tree folds its children into its state, then the leaf level is
// dropped; the surviving root state is L2-normalized. Attention mode needs
// one AsaParams per round and records every pair probability; mean and max
// ignore params and record nothing.
EmbedOutput neighbourhood_embed(const NeighbourhoodTree& tree,
                                std::span<const AsaParams> params, AggMode mode,
                                bool want_tape = false);

struct EmbedGrads {
  std::vector<AsaGrads> asa;  // one per round (empty for mean/max)
  Vec root;                   // gradient at the root's round-0 state
};

// Reverse pass including the final L2 normalization. Child round-0 states
// are memory snapshots and receive no output gradient; only the root's
// round-0 gradient is returned. g_probs must align with output.records.
EmbedGrads embed_backward(const EmbedOutput& output, const NeighbourhoodTree& tree,
                          std::span<const AsaParams> params, const Vec& g_embedding,
                          std::span<const double> g_probs);

// build_tree + neighbourhood_embed per target, order preserving; the
// parallel path is bitwise identical to the serial one.
std::vector<EmbedOutput> batch_embed(
    const std::vector<std::pair<Vec, std::optional<std::int64_t>>>& targets,
    const EpisodicMemory& mem, std::span<const AsaParams> params, int k, int h,
    AggMode mode, Exec exec = Exec::parallel);

}  // namespace mne

#endif  // MNE_EMBED_HPP
