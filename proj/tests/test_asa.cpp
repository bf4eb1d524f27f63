#include <cmath>
#include <random>

#include "doctest.h"
#include "mne/asa.hpp"
#include "mne/gradcheck.hpp"

using namespace mne;

namespace {

// fan-in scaled random parameters; hotter scales saturate the sigmoid
// (the score logit is a sum of squares) and leave gradients too small for
// finite differences to resolve
AsaParams random_params(std::mt19937_64& rng, std::size_t d, std::size_t dd) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double ws = 0.5 / std::sqrt(static_cast<double>(d));
  const double ss = 0.5 / std::sqrt(static_cast<double>(dd));
  AsaParams p;
  p.agg.weight = Matrix(d, d);
  for (double& v : p.agg.weight.data) v = ws * gauss(rng);
  p.agg.bias = Vec(d);
  for (double& v : p.agg.bias) v = 0.1 * gauss(rng);
  p.diff.weight = Matrix(dd, d);
  for (double& v : p.diff.weight.data) v = ws * gauss(rng);
  p.diff.bias = Vec(dd);
  for (double& v : p.diff.bias) v = 0.1 * gauss(rng);
  p.score.weight = Matrix(1, dd);
  for (double& v : p.score.weight.data) v = ss * gauss(rng);
  p.score.bias = Vec(1);
  p.score.bias[0] = 0.1 * gauss(rng);
  return p;
}

AsaParams zero_params(std::size_t d, std::size_t dd) {
  AsaParams p;
  p.agg.weight = Matrix(d, d);
  p.agg.bias = Vec(d, 0.0);
  p.diff.weight = Matrix(dd, d);
  p.diff.bias = Vec(dd, 0.0);
  p.score.weight = Matrix(1, dd);
  p.score.bias = Vec(1, 0.0);
  return p;
}

Vec random_vec(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec v(n);
  for (double& x : v) x = gauss(rng);
  return v;
}

// straight-line recomputation of the probability chain, written against the
// definitions rather than the library loops
double oracle_prob(const Vec& fu, const Vec& fv, const AsaParams& p) {
  const std::size_t d = fu.size(), dd = p.diff.weight.rows;
  Vec diff(dd, 0.0);
  for (std::size_t i = 0; i < dd; ++i) {
    for (std::size_t j = 0; j < d; ++j) diff[i] += p.diff.weight(i, j) * (fu[j] - fv[j]);
    diff[i] += p.diff.bias[i];
  }
  double s = p.score.bias[0];
  for (std::size_t i = 0; i < dd; ++i) s += p.score.weight(0, i) * diff[i] * diff[i];
  return 1.0 / (1.0 + std::exp(-s));
}

// flatten an AsaParams block for the finite-difference driver
Vec flatten_asa(const AsaParams& p) {
  Vec flat;
  auto push = [&](const Vec& v) { flat.insert(flat.end(), v.begin(), v.end()); };
  push(p.agg.weight.data);
  push(p.agg.bias);
  push(p.diff.weight.data);
  push(p.diff.bias);
  push(p.score.weight.data);
  push(p.score.bias);
  return flat;
}

void unflatten_asa(AsaParams& p, const Vec& flat) {
  std::size_t at = 0;
  auto pull = [&](Vec& v) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(at),
              flat.begin() + static_cast<std::ptrdiff_t>(at + v.size()), v.begin());
    at += v.size();
  };
  pull(p.agg.weight.data);
  pull(p.agg.bias);
  pull(p.diff.weight.data);
  pull(p.diff.bias);
  pull(p.score.weight.data);
  pull(p.score.bias);
}

std::vector<GradCheckBlock> asa_blocks(const AsaParams& p, std::size_t extra_offset) {
  std::vector<GradCheckBlock> blocks;
  std::size_t off = extra_offset;
  auto add = [&](const char* name, std::size_t n) {
    blocks.push_back({name, off, n});
    off += n;
  };
  add("agg.weight", p.agg.weight.data.size());
  add("agg.bias", p.agg.bias.size());
  add("diff.weight", p.diff.weight.data.size());
  add("diff.bias", p.diff.bias.size());
  add("score.weight", p.score.weight.data.size());
  add("score.bias", p.score.bias.size());
  return blocks;
}

// checks d(scalar objective)/d(params, parent, children) against central
// differences, where the objective is a fixed random projection of the
// output plus a weighted sum of the probabilities
void check_asa_gradients(std::mt19937_64& rng, std::size_t d, std::size_t dd,
                         std::size_t children) {
  const AsaParams base = random_params(rng, d, dd);
  const Vec parent = random_vec(rng, d);
  std::vector<Vec> childs;
  for (std::size_t i = 0; i < children; ++i) childs.push_back(random_vec(rng, d));
  const Vec proj = random_vec(rng, d);
  const Vec prob_weights = random_vec(rng, children);

  const std::size_t np = flatten_asa(base).size();
  Vec theta = flatten_asa(base);
  theta.insert(theta.end(), parent.begin(), parent.end());
  for (const Vec& c : childs) theta.insert(theta.end(), c.begin(), c.end());

  const LossFn objective = [&](const Vec& t) {
    AsaParams p = base;
    unflatten_asa(p, t);
    Vec pa(t.begin() + static_cast<std::ptrdiff_t>(np),
           t.begin() + static_cast<std::ptrdiff_t>(np + d));
    std::vector<Vec> cs(children);
    for (std::size_t i = 0; i < children; ++i) {
      const std::size_t at = np + d + i * d;
      cs[i].assign(t.begin() + static_cast<std::ptrdiff_t>(at),
                   t.begin() + static_cast<std::ptrdiff_t>(at + d));
    }
    const auto fwd = asa_forward(pa, cs, p);
    double obj = dot(proj, fwd.out);
    for (std::size_t i = 0; i < children; ++i) obj += prob_weights[i] * fwd.probs[i];
    return obj;
  };

  AsaTape tape;
  asa_forward(parent, childs, base, &tape);
  AsaGrads acc = zeros_like(base);
  std::vector<double> g_probs(prob_weights.begin(), prob_weights.end());
  const auto back = asa_backward(tape, base, proj, g_probs, acc);

  Vec analytic = flatten_asa(acc);
  analytic.insert(analytic.end(), back.g_parent.begin(), back.g_parent.end());
  for (const Vec& g : back.g_children) analytic.insert(analytic.end(), g.begin(), g.end());

  auto blocks = asa_blocks(base, 0);
  blocks.push_back({"parent", np, d});
  blocks.push_back({"children", np + d, children * d});

  const auto report = finite_diff_check(objective, theta, analytic, blocks, 1e-4);
  CHECK_MESSAGE(report.passed(), "max relative error ", report.max_rel_err, " at d=", d,
                " children=", children);
}

}  // namespace

TEST_SUITE("asa") {

TEST_CASE("all-zero parameters give probability one half") {
  std::mt19937_64 rng(3);
  const auto p = zero_params(4, 4);
  for (int trial = 0; trial < 5; ++trial) {
    CHECK(pairwise_prob(random_vec(rng, 4), random_vec(rng, 4), p) == 0.5);
  }
}

TEST_CASE("probability is symmetric in its arguments when the diff bias is zero") {
  std::mt19937_64 rng(5);
  AsaParams p = random_params(rng, 6, 3);
  p.diff.bias = Vec(3, 0.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec u = random_vec(rng, 6);
    const Vec v = random_vec(rng, 6);
    CHECK(pairwise_prob(u, v, p) == pairwise_prob(v, u, p));  // exact
  }
}

TEST_CASE("hand-evaluated scalar chain") {
  // diff weight 2, score weight 1: d = 2(fu - fv), p = sigmoid(d^2)
  AsaParams p = zero_params(1, 1);
  p.diff.weight(0, 0) = 2.0;
  p.score.weight(0, 0) = 1.0;
  const double prob = pairwise_prob({1.0}, {0.0}, p);
  CHECK(prob == doctest::Approx(1.0 / (1.0 + std::exp(-4.0))).epsilon(1e-9));
  CHECK(prob == doctest::Approx(0.98201).epsilon(1e-4));
}

TEST_CASE("probability matches the straight-line oracle") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_params(rng, 5, 4);
    const Vec u = random_vec(rng, 5);
    const Vec v = random_vec(rng, 5);
    CHECK(pairwise_prob(u, v, p) == doctest::Approx(oracle_prob(u, v, p)).epsilon(1e-12));
  }
}

TEST_CASE("attention weights: equal probabilities give a uniform split") {
  const auto p = zero_params(3, 3);  // all pairs get p = 0.5
  std::mt19937_64 rng(9);
  const auto w = attention_weights(random_vec(rng, 3), {random_vec(rng, 3), random_vec(rng, 3)},
                                   p);
  CHECK(w[0] == doctest::Approx(0.5));
  CHECK(w[1] == doctest::Approx(0.5));
}

TEST_CASE("normalize_weights fixes points that already sum to one") {
  const auto w = normalize_weights(std::vector<double>{0.6, 0.2, 0.2});
  CHECK(w[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(w[2] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("normalize_weights is invariant to a common positive scale") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> probs(4);
    for (double& p : probs) p = unif(rng);
    const double c = scale(rng);
    std::vector<double> scaled = probs;
    for (double& p : scaled) p *= c;
    const auto a = normalize_weights(probs);
    const auto b = normalize_weights(scaled);
    for (std::size_t i = 0; i < 4; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
}

TEST_CASE("attention weights sum to one and match the two-step oracle") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_params(rng, 4, 4);
    const Vec parent = random_vec(rng, 4);
    std::vector<Vec> children;
    for (int i = 0; i < 3; ++i) children.push_back(random_vec(rng, 4));
    const auto w = attention_weights(parent, children, p);

    double sum = 0.0;
    for (double x : w) {
      CHECK(x > 0.0);
      sum += x;
    }
    CHECK(std::fabs(sum - 1.0) < 1e-10);

    // independent recomputation: probabilities first, then the normalization
    double psum = 0.0;
    std::vector<double> probs;
    for (const Vec& c : children) {
      probs.push_back(oracle_prob(parent, c, p));
      psum += probs.back();
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK(w[i] == doctest::Approx(probs[i] / psum).epsilon(1e-10));
    }
  }
  CHECK_THROWS_AS(attention_weights({1.0}, {}, zero_params(1, 1)), DegenerateInputError);
}

TEST_CASE("forward with a single child forces weight one") {
  std::mt19937_64 rng(17);
  AsaParams p = random_params(rng, 4, 4);
  p.agg.weight = Matrix::identity(4);
  p.agg.bias = Vec(4, 0.0);
  const Vec parent = random_vec(rng, 4);
  const Vec child = random_vec(rng, 4);
  const auto fwd = asa_forward(parent, std::vector<Vec>{child}, p);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(fwd.out[i] == doctest::Approx(parent[i] + child[i]).epsilon(1e-12));
  }
}

TEST_CASE("forward with no children is the bare parent transform") {
  std::mt19937_64 rng(19);
  AsaParams p = random_params(rng, 3, 3);
  p.agg.weight = Matrix::identity(3);
  p.agg.bias = Vec(3, 0.0);
  const Vec parent = random_vec(rng, 3);
  const auto fwd = asa_forward(parent, std::vector<Vec>{}, p);
  CHECK(fwd.out == parent);
  CHECK(fwd.probs.empty());
}

TEST_CASE("forward matches a straight-line recomputation of the whole chain") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_params(rng, 4, 4);
    const Vec parent = random_vec(rng, 4);
    std::vector<Vec> children;
    for (int i = 0; i < 3; ++i) children.push_back(random_vec(rng, 4));

    const auto fwd = asa_forward(parent, children, p);

    double psum = 0.0;
    std::vector<double> probs;
    for (const Vec& c : children) {
      probs.push_back(oracle_prob(parent, c, p));
      psum += probs.back();
    }
    Vec agg = parent;
    for (std::size_t i = 0; i < children.size(); ++i) {
      for (std::size_t j = 0; j < 4; ++j) agg[j] += probs[i] / psum * children[i][j];
    }
    for (std::size_t i = 0; i < 4; ++i) {
      double want = p.agg.bias[i];
      for (std::size_t j = 0; j < 4; ++j) want += p.agg.weight(i, j) * agg[j];
      CHECK(fwd.out[i] == doctest::Approx(want).epsilon(1e-10));
    }
    for (std::size_t i = 0; i < children.size(); ++i) {
      CHECK(fwd.probs[i] == doctest::Approx(probs[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("backward with zero upstream gradients is zero") {
  std::mt19937_64 rng(29);
  const auto p = random_params(rng, 4, 3);
  const Vec parent = random_vec(rng, 4);
  std::vector<Vec> children{random_vec(rng, 4), random_vec(rng, 4)};
  AsaTape tape;
  asa_forward(parent, children, p, &tape);
  AsaGrads acc = zeros_like(p);
  const auto back = asa_backward(tape, p, Vec(4, 0.0), std::vector<double>{0.0, 0.0}, acc);
  for (double g : back.g_parent) CHECK(g == 0.0);
  for (const Vec& gc : back.g_children)
    for (double g : gc) CHECK(g == 0.0);
  for (double g : flatten_asa(acc)) CHECK(g == 0.0);
}

TEST_CASE("gradients match finite differences for a single child") {
  std::mt19937_64 rng(31);
  check_asa_gradients(rng, 4, 4, 1);
}

TEST_CASE("gradients match finite differences across k and d") {
  // ten configurations spanning child counts {1,3,8} and dims {2,8,32}
  std::mt19937_64 rng(37);
  check_asa_gradients(rng, 2, 2, 1);
  check_asa_gradients(rng, 2, 2, 3);
  check_asa_gradients(rng, 2, 4, 8);
  check_asa_gradients(rng, 8, 8, 3);
  check_asa_gradients(rng, 8, 4, 8);
  check_asa_gradients(rng, 8, 8, 1);
  check_asa_gradients(rng, 32, 32, 8);
  check_asa_gradients(rng, 32, 16, 1);
  check_asa_gradients(rng, 32, 32, 3);
  check_asa_gradients(rng, 32, 8, 8);
}

}  // TEST_SUITE
