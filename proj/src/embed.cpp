#include "mne/embed.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mne {

const char* to_string(AggMode mode) {
  switch (mode) {
    case AggMode::attention: return "attention";
    case AggMode::mean: return "mean";
    case AggMode::max: return "max";
  }
  return "?";
}

AggMode agg_mode_from_string(const std::string& s) {
  if (s == "attention") return AggMode::attention;
  if (s == "mean") return AggMode::mean;
  if (s == "max") return AggMode::max;
  throw DegenerateInputError("unknown aggregation mode '" + s + "'");
}

EmbedOutput neighbourhood_embed(const NeighbourhoodTree& tree,
                                std::span<const AsaParams> params, AggMode mode,
                                bool want_tape) {
  const int h = tree.depth;
  if (mode == AggMode::attention && static_cast<int>(params.size()) != h) {
    throw ShapeError("neighbourhood_embed: tree depth " + std::to_string(h) + " needs " +
                     std::to_string(h) + " parameter rounds, got " +
                     std::to_string(params.size()));
  }

  auto tape = want_tape ? std::make_shared<EmbedTape>() : nullptr;
  if (tape) {
    tape->mode = mode;
    tape->rounds.resize(static_cast<std::size_t>(h));
  }

  std::vector<Vec> states;
  states.reserve(tree.size());
  for (const TreeNode& n : tree.nodes) states.push_back(n.state);

  EmbedOutput out;
  for (int round = 1; round <= h; ++round) {
    const std::vector<Vec> prev = states;
    if (tape) tape->states.push_back(prev);
    const int max_branch_depth = h - round;
    for (const TreeNode& node : tree.nodes) {
      if (node.depth > max_branch_depth) continue;
      const std::size_t u = static_cast<std::size_t>(node.index);

      if (mode == AggMode::attention) {
        std::vector<Vec> child_states;
        child_states.reserve(node.children.size());
        for (std::int32_t c : node.children) {
          child_states.push_back(prev[static_cast<std::size_t>(c)]);
        }
        AsaTape* node_tape = nullptr;
        if (tape) {
          tape->rounds[static_cast<std::size_t>(round - 1)].push_back({});
          auto& bt = tape->rounds[static_cast<std::size_t>(round - 1)].back();
          bt.node = node.index;
          bt.round = round;
          bt.record_offset = out.records.size();
          bt.record_count = node.children.size();
          node_tape = &bt.asa;
        }
        auto fwd = asa_forward(prev[u], child_states, params[static_cast<std::size_t>(round - 1)],
                               node_tape);
        states[u] = std::move(fwd.out);
        for (std::size_t i = 0; i < node.children.size(); ++i) {
          PairProbRecord rec;
          rec.parent = node.index;
          rec.child = node.children[i];
          rec.round = round;
          rec.p = fwd.probs[i];
          out.records.push_back(rec);
        }
      } else if (mode == AggMode::mean) {
        Vec next = prev[u];
        if (!node.children.empty()) {
          const double inv = 1.0 / static_cast<double>(node.children.size());
          for (std::int32_t c : node.children) axpy(inv, prev[static_cast<std::size_t>(c)], next);
        }
        states[u] = std::move(next);
        if (tape) {
          tape->rounds[static_cast<std::size_t>(round - 1)].push_back(
              {node.index, round, 0, 0, {}, {}});
        }
      } else {  // max: elementwise max over the node and its children
        Vec next = prev[u];
        std::vector<int> winner(next.size(), 0);
        for (std::size_t i = 0; i < node.children.size(); ++i) {
          const Vec& cs = prev[static_cast<std::size_t>(node.children[i])];
          for (std::size_t j = 0; j < next.size(); ++j) {
            if (cs[j] > next[j]) {
              next[j] = cs[j];
              winner[j] = static_cast<int>(i) + 1;
            }
          }
        }
        states[u] = std::move(next);
        if (tape) {
          tape->rounds[static_cast<std::size_t>(round - 1)].push_back(
              {node.index, round, 0, 0, {}, std::move(winner)});
        }
      }
    }
  }

  const Vec& root_state = states[static_cast<std::size_t>(tree.root_index)];
  out.embedding = l2_normalize(root_state);
  if (tape) {
    tape->states.push_back(states);
    tape->prenorm_root = root_state;
    out.tape = std::move(tape);
  }
  return out;
}

EmbedGrads embed_backward(const EmbedOutput& output, const NeighbourhoodTree& tree,
                          std::span<const AsaParams> params, const Vec& g_embedding,
                          std::span<const double> g_probs) {
  if (!output.tape) throw StateError("embed_backward: forward pass was run without a tape");
  const EmbedTape& tape = *output.tape;
  if (g_probs.size() != output.records.size()) {
    throw ShapeError("embed_backward: expected one gradient per recorded probability");
  }
  const int h = tree.depth;
  const std::size_t dim = g_embedding.size();
  if (dim != output.embedding.size()) {
    throw ShapeError("embed_backward: upstream gradient dim mismatch");
  }

  EmbedGrads grads;
  if (tape.mode == AggMode::attention) {
    grads.asa.reserve(static_cast<std::size_t>(h));
    for (int r = 0; r < h; ++r) grads.asa.push_back(zeros_like(params[static_cast<std::size_t>(r)]));
  }

  // through the final normalization: y = x / |x|, dx = (g - <g,y> y) / |x|
  const Vec& x = tape.prenorm_root;
  const double xn = norm(x);
  const double gy = dot(g_embedding, output.embedding);
  Vec g_root(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    g_root[i] = (g_embedding[i] - gy * output.embedding[i]) / xn;
  }

  std::vector<Vec> node_grad(tree.size(), Vec(dim, 0.0));
  node_grad[static_cast<std::size_t>(tree.root_index)] = g_root;

  for (int round = h; round >= 1; --round) {
    std::vector<Vec> prev_grad(tree.size(), Vec(dim, 0.0));
    for (const auto& bt : tape.rounds[static_cast<std::size_t>(round - 1)]) {
      const TreeNode& node = tree.nodes[static_cast<std::size_t>(bt.node)];
      const std::size_t u = static_cast<std::size_t>(bt.node);
      const Vec& g_out = node_grad[u];

      if (tape.mode == AggMode::attention) {
        std::span<const double> up(g_probs.data() + bt.record_offset, bt.record_count);
        auto back = asa_backward(bt.asa, params[static_cast<std::size_t>(round - 1)], g_out, up,
                                 grads.asa[static_cast<std::size_t>(round - 1)]);
        axpy(1.0, back.g_parent, prev_grad[u]);
        for (std::size_t i = 0; i < node.children.size(); ++i) {
          axpy(1.0, back.g_children[i],
               prev_grad[static_cast<std::size_t>(node.children[i])]);
        }
      } else if (tape.mode == AggMode::mean) {
        axpy(1.0, g_out, prev_grad[u]);
        if (!node.children.empty()) {
          const double inv = 1.0 / static_cast<double>(node.children.size());
          for (std::int32_t c : node.children) {
            axpy(inv, g_out, prev_grad[static_cast<std::size_t>(c)]);
          }
        }
      } else {  // max: route each component to its winning input
        for (std::size_t j = 0; j < dim; ++j) {
          const int w = bt.max_winner[j];
          if (w == 0) {
            prev_grad[u][j] += g_out[j];
          } else {
            prev_grad[static_cast<std::size_t>(node.children[static_cast<std::size_t>(w - 1)])][j] +=
                g_out[j];
          }
        }
      }
    }
    node_grad = std::move(prev_grad);
  }

  grads.root = std::move(node_grad[static_cast<std::size_t>(tree.root_index)]);
  return grads;
}

std::vector<EmbedOutput> batch_embed(
    const std::vector<std::pair<Vec, std::optional<std::int64_t>>>& targets,
    const EpisodicMemory& mem, std::span<const AsaParams> params, int k, int h,
    AggMode mode, Exec exec) {
  std::vector<EmbedOutput> out(targets.size());
  parallel_for(targets.size(), exec, [&](std::size_t i) {
    const auto tree = build_tree(targets[i].first, targets[i].second, mem, k, h);
    out[i] = neighbourhood_embed(tree, params, mode);
  });
  return out;
}

}  // namespace mne
