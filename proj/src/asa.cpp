#include "mne/asa.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mne {

namespace {

// keeps probabilities strictly inside (0,1) even when the logit saturates
constexpr double kProbFloor = 1e-12;

double sigmoid(double x) {
  const double p = 1.0 / (1.0 + std::exp(-x));
  return std::clamp(p, kProbFloor, 1.0 - kProbFloor);
}

void check_dims(const Vec& f, const AsaParams& params, const char* who) {
  const std::size_t d = params.agg.weight.rows;
  if (params.agg.weight.cols != d) throw ShapeError(std::string(who) + ": agg weight not square");
  if (params.agg.bias.size() != d) throw ShapeError(std::string(who) + ": agg bias size mismatch");
  if (params.diff.weight.cols != d || params.diff.bias.size() != params.diff.weight.rows) {
    throw ShapeError(std::string(who) + ": diff map shape mismatch");
  }
  if (params.score.weight.rows != 1 || params.score.weight.cols != params.diff.weight.rows ||
      params.score.bias.size() != 1) {
    throw ShapeError(std::string(who) + ": score map shape mismatch");
  }
  if (f.size() != d) {
    throw ShapeError(std::string(who) + ": feature dim " + std::to_string(f.size()) +
                     " != parameter dim " + std::to_string(d));
  }
}

}  // namespace

AsaParams zeros_like(const AsaParams& p) {
  AsaParams z;
  z.agg.weight = Matrix(p.agg.weight.rows, p.agg.weight.cols);
  z.agg.bias = Vec(p.agg.bias.size(), 0.0);
  z.diff.weight = Matrix(p.diff.weight.rows, p.diff.weight.cols);
  z.diff.bias = Vec(p.diff.bias.size(), 0.0);
  z.score.weight = Matrix(1, p.score.weight.cols);
  z.score.bias = Vec(1, 0.0);
  return z;
}

void accumulate(AsaGrads& acc, const AsaGrads& g) {
  auto add = [](Vec& a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  };
  add(acc.agg.weight.data, g.agg.weight.data);
  add(acc.agg.bias, g.agg.bias);
  add(acc.diff.weight.data, g.diff.weight.data);
  add(acc.diff.bias, g.diff.bias);
  add(acc.score.weight.data, g.score.weight.data);
  add(acc.score.bias, g.score.bias);
}

double pairwise_prob(const Vec& f_u, const Vec& f_v, const AsaParams& params) {
  check_dims(f_u, params, "pairwise_prob");
  if (f_v.size() != f_u.size()) throw ShapeError("pairwise_prob: feature dims differ");
  Vec delta(f_u.size());
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = f_u[i] - f_v[i];
  const Vec d = affine_apply(params.diff, delta);
  double s = params.score.bias[0];
  for (std::size_t j = 0; j < d.size(); ++j) s += params.score.weight(0, j) * d[j] * d[j];
  return sigmoid(s);
}

std::vector<double> normalize_weights(std::span<const double> probs) {
  if (probs.empty()) throw DegenerateInputError("normalize_weights: empty probability set");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p > 0.0)) throw DegenerateInputError("normalize_weights: non-positive probability");
    sum += p;
  }
  std::vector<double> w(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) w[i] = probs[i] / sum;
  return w;
}

std::vector<double> attention_weights(const Vec& parent_state,
                                      const std::vector<Vec>& child_states,
                                      const AsaParams& params) {
  if (child_states.empty()) throw DegenerateInputError("attention_weights: no children");
  std::vector<double> probs(child_states.size());
  for (std::size_t i = 0; i < child_states.size(); ++i) {
    probs[i] = pairwise_prob(parent_state, child_states[i], params);
  }
  return normalize_weights(probs);
}

AsaForwardResult asa_forward(const Vec& parent_state, std::span<const Vec> child_states,
                             const AsaParams& params, AsaTape* tape) {
  check_dims(parent_state, params, "asa_forward");
  const std::size_t n = child_states.size();

  std::vector<Vec> dvecs(n);
  std::vector<double> probs(n);
  double prob_sum = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    if (child_states[v].size() != parent_state.size()) {
      throw ShapeError("asa_forward: child dim mismatch");
    }
    Vec delta(parent_state.size());
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = parent_state[i] - child_states[v][i];
    dvecs[v] = affine_apply(params.diff, delta);
    double s = params.score.bias[0];
    for (std::size_t j = 0; j < dvecs[v].size(); ++j) {
      s += params.score.weight(0, j) * dvecs[v][j] * dvecs[v][j];
    }
    probs[v] = sigmoid(s);
    prob_sum += probs[v];
  }

  Vec agg_in = parent_state;
  std::vector<double> weights(n);
  for (std::size_t v = 0; v < n; ++v) {
    weights[v] = probs[v] / prob_sum;
    axpy(weights[v], child_states[v], agg_in);
  }

  AsaForwardResult result;
  result.out = affine_apply(params.agg, agg_in);
  result.probs = probs;

  if (tape != nullptr) {
    tape->parent_in = parent_state;
    tape->child_in.assign(child_states.begin(), child_states.end());
    tape->dvec = std::move(dvecs);
    tape->prob = std::move(probs);
    tape->weight = std::move(weights);
    tape->prob_sum = prob_sum;
    tape->agg_in = std::move(agg_in);
  }
  return result;
}

AsaBackwardResult asa_backward(const AsaTape& tape, const AsaParams& params,
                               const Vec& g_out, std::span<const double> g_probs,
                               AsaGrads& acc) {
  const std::size_t n = tape.child_in.size();
  const std::size_t d = tape.parent_in.size();
  if (g_out.size() != d) throw ShapeError("asa_backward: upstream gradient dim mismatch");
  if (g_probs.size() != n) throw ShapeError("asa_backward: expected one prob gradient per child");

  // agg transform: out = W agg_in + b
  add_outer(acc.agg.weight, g_out, tape.agg_in);
  for (std::size_t i = 0; i < d; ++i) acc.agg.bias[i] += g_out[i];
  const Vec g_agg_in = matvec_transposed(params.agg.weight, g_out);

  AsaBackwardResult result;
  result.g_parent = g_agg_in;
  result.g_children.assign(n, Vec(d, 0.0));
  if (n == 0) return result;

  // attention weights: a_v = p_v / S with S = sum of probs. With
  // c_v = dL/da_v = <g_agg_in, child_v>,
  //   dL/dp_v = c_v / S - (sum_w c_w p_w) / S^2
  // plus whatever gradient arrives on p_v directly (the pair loss).
  std::vector<double> c(n);
  double weighted_c = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    c[v] = dot(g_agg_in, tape.child_in[v]);
    weighted_c += c[v] * tape.prob[v];
  }
  const double s_inv = 1.0 / tape.prob_sum;

  for (std::size_t v = 0; v < n; ++v) {
    const double gp = g_probs[v] + c[v] * s_inv - weighted_c * s_inv * s_inv;
    const double p = tape.prob[v];
    const double gs = gp * p * (1.0 - p);  // through the sigmoid

    // score map over the squared diff vector
    const Vec& dv = tape.dvec[v];
    Vec g_dv(dv.size());
    for (std::size_t j = 0; j < dv.size(); ++j) {
      acc.score.weight(0, j) += gs * dv[j] * dv[j];
      g_dv[j] = 2.0 * dv[j] * gs * params.score.weight(0, j);
    }
    acc.score.bias[0] += gs;

    // diff map over (parent - child)
    Vec delta(d);
    for (std::size_t i = 0; i < d; ++i) delta[i] = tape.parent_in[i] - tape.child_in[v][i];
    add_outer(acc.diff.weight, g_dv, delta);
    for (std::size_t j = 0; j < g_dv.size(); ++j) acc.diff.bias[j] += g_dv[j];
    const Vec g_delta = matvec_transposed(params.diff.weight, g_dv);

    for (std::size_t i = 0; i < d; ++i) {
      result.g_parent[i] += g_delta[i];
      result.g_children[v][i] += tape.weight[v] * g_agg_in[i] - g_delta[i];
    }
  }
  return result;
}

}  // namespace mne
