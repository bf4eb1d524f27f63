#include "mne/model.hpp"

#include <cmath>
#include <random>

#include "mne/dataset.hpp"

namespace mne {

void Dataset::validate() const {
  if (!labels.empty() && labels.size() != features.size()) {
    throw ShapeError("dataset: labels/features length mismatch");
  }
  const std::size_t d = dim();
  for (const Vec& f : features) {
    if (f.size() != d) throw ShapeError("dataset: inconsistent feature dimensions");
  }
  for (int l : labels) {
    if (l < 0) throw DegenerateInputError("dataset: negative label");
  }
}

int Dataset::num_classes() const {
  int m = 0;
  for (int l : labels) m = std::max(m, l + 1);
  return m;
}

const char* to_string(EncoderKind kind) {
  return kind == EncoderKind::identity ? "identity" : "mlp";
}

EncoderKind encoder_kind_from_string(const std::string& s) {
  if (s == "identity") return EncoderKind::identity;
  if (s == "mlp") return EncoderKind::mlp;
  throw DegenerateInputError("unknown encoder kind '" + s + "'");
}

Vec encoder_forward(const Encoder& enc, const Vec& x, EncoderTape* tape) {
  if (x.size() != enc.input_dim) {
    throw ShapeError("encoder: input dim " + std::to_string(x.size()) + " != " +
                     std::to_string(enc.input_dim));
  }
  if (enc.kind == EncoderKind::identity) {
    if (tape) tape->input = x;
    return x;
  }
  Vec pre = affine_apply(enc.hidden, x);
  Vec act(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i) act[i] = pre[i] > 0.0 ? pre[i] : 0.0;
  Vec y = affine_apply(enc.out, act);
  if (tape) {
    tape->input = x;
    tape->preact = std::move(pre);
    tape->activated = std::move(act);
  }
  return y;
}

void encoder_backward(const Encoder& enc, const EncoderTape& tape, const Vec& g_out,
                      Encoder& acc) {
  if (enc.kind == EncoderKind::identity) return;
  add_outer(acc.out.weight, g_out, tape.activated);
  for (std::size_t i = 0; i < g_out.size(); ++i) acc.out.bias[i] += g_out[i];
  Vec g_act = matvec_transposed(enc.out.weight, g_out);
  for (std::size_t i = 0; i < g_act.size(); ++i) {
    if (tape.preact[i] <= 0.0) g_act[i] = 0.0;
  }
  add_outer(acc.hidden.weight, g_act, tape.input);
  for (std::size_t i = 0; i < g_act.size(); ++i) acc.hidden.bias[i] += g_act[i];
}

ModelDims dims_of(const ModelParams& params) {
  ModelDims d;
  d.feature_dim = params.classifier.dim();
  d.diff_dim = params.asa.empty() ? d.feature_dim : params.asa.front().diff_dim();
  d.rounds = params.rounds();
  d.classes = params.classifier.classes();
  d.encoder = params.encoder.kind;
  d.encoder_in = params.encoder.input_dim;
  d.encoder_hidden = params.encoder.kind == EncoderKind::mlp ? params.encoder.hidden_dim() : 0;
  return d;
}

namespace {

Matrix uniform_fan_in(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : m.data) v = dist(rng);
  return m;
}

}  // namespace

ModelParams init_model(const ModelDims& dims, std::uint64_t seed) {
  if (dims.feature_dim == 0) throw ShapeError("init_model: feature_dim must be positive");
  if (dims.classes < 2) throw CapacityError("init_model: need at least 2 classes");
  const std::size_t d = dims.feature_dim;
  const std::size_t dd = dims.diff_dim == 0 ? d : dims.diff_dim;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.01);

  ModelParams params;
  params.asa.reserve(static_cast<std::size_t>(dims.rounds));
  for (int r = 0; r < dims.rounds; ++r) {
    AsaParams p;
    p.agg.weight = Matrix::identity(d);
    for (double& v : p.agg.weight.data) v += noise(rng);
    p.agg.bias = Vec(d, 0.0);
    p.diff.weight = uniform_fan_in(dd, d, rng);
    p.diff.bias = Vec(dd, 0.0);
    p.score.weight = uniform_fan_in(1, dd, rng);
    p.score.bias = Vec(1, 0.0);
    params.asa.push_back(std::move(p));
  }
  params.classifier.weight = uniform_fan_in(dims.classes, d, rng);

  params.encoder.kind = dims.encoder;
  params.encoder.input_dim = dims.encoder_in == 0 ? d : dims.encoder_in;
  params.encoder.output_dim = d;
  if (dims.encoder == EncoderKind::identity) {
    if (params.encoder.input_dim != d) {
      throw ShapeError("init_model: identity encoder needs input dim == feature dim");
    }
  } else {
    if (dims.encoder_hidden == 0) throw ShapeError("init_model: mlp encoder needs a hidden size");
    params.encoder.hidden.weight = uniform_fan_in(dims.encoder_hidden, params.encoder.input_dim, rng);
    params.encoder.hidden.bias = Vec(dims.encoder_hidden, 0.0);
    params.encoder.out.weight = uniform_fan_in(d, dims.encoder_hidden, rng);
    params.encoder.out.bias = Vec(d, 0.0);
  }
  return params;
}

ModelGrads zeros_like(const ModelParams& params) {
  ModelGrads g;
  g.asa.reserve(params.asa.size());
  for (const auto& p : params.asa) g.asa.push_back(zeros_like(p));
  g.classifier.weight = Matrix(params.classifier.weight.rows, params.classifier.weight.cols);
  g.encoder.kind = params.encoder.kind;
  g.encoder.input_dim = params.encoder.input_dim;
  g.encoder.output_dim = params.encoder.output_dim;
  if (params.encoder.kind == EncoderKind::mlp) {
    g.encoder.hidden.weight = Matrix(params.encoder.hidden.weight.rows,
                                     params.encoder.hidden.weight.cols);
    g.encoder.hidden.bias = Vec(params.encoder.hidden.bias.size(), 0.0);
    g.encoder.out.weight = Matrix(params.encoder.out.weight.rows, params.encoder.out.weight.cols);
    g.encoder.out.bias = Vec(params.encoder.out.bias.size(), 0.0);
  }
  return g;
}

void accumulate(ModelGrads& acc, const EmbedGrads& g, const Matrix& g_classifier) {
  for (std::size_t r = 0; r < g.asa.size(); ++r) accumulate(acc.asa[r], g.asa[r]);
  for (std::size_t i = 0; i < g_classifier.data.size(); ++i) {
    acc.classifier.weight.data[i] += g_classifier.data[i];
  }
}

namespace {

template <typename Visit>
void walk_params(const ModelParams& params, Visit&& visit) {
  for (std::size_t r = 0; r < params.asa.size(); ++r) {
    const std::string base = "asa" + std::to_string(r + 1);
    const auto& p = params.asa[r];
    visit(base + ".agg.weight", p.agg.weight.data);
    visit(base + ".agg.bias", p.agg.bias);
    visit(base + ".diff.weight", p.diff.weight.data);
    visit(base + ".diff.bias", p.diff.bias);
    visit(base + ".score.weight", p.score.weight.data);
    visit(base + ".score.bias", p.score.bias);
  }
  visit("classifier.weight", params.classifier.weight.data);
  if (params.encoder.kind == EncoderKind::mlp) {
    visit("encoder.hidden.weight", params.encoder.hidden.weight.data);
    visit("encoder.hidden.bias", params.encoder.hidden.bias);
    visit("encoder.out.weight", params.encoder.out.weight.data);
    visit("encoder.out.bias", params.encoder.out.bias);
  }
}

template <typename Visit>
void walk_params_mut(ModelParams& params, Visit&& visit) {
  for (std::size_t r = 0; r < params.asa.size(); ++r) {
    auto& p = params.asa[r];
    visit(p.agg.weight.data);
    visit(p.agg.bias);
    visit(p.diff.weight.data);
    visit(p.diff.bias);
    visit(p.score.weight.data);
    visit(p.score.bias);
  }
  visit(params.classifier.weight.data);
  if (params.encoder.kind == EncoderKind::mlp) {
    visit(params.encoder.hidden.weight.data);
    visit(params.encoder.hidden.bias);
    visit(params.encoder.out.weight.data);
    visit(params.encoder.out.bias);
  }
}

}  // namespace

std::vector<GradCheckBlock> param_layout(const ModelParams& params) {
  std::vector<GradCheckBlock> blocks;
  std::size_t offset = 0;
  walk_params(params, [&](const std::string& name, const std::vector<double>& v) {
    blocks.push_back({name, offset, v.size()});
    offset += v.size();
  });
  return blocks;
}

std::size_t param_count(const ModelParams& params) {
  std::size_t n = 0;
  walk_params(params, [&](const std::string&, const std::vector<double>& v) { n += v.size(); });
  return n;
}

Vec flatten(const ModelParams& params) {
  Vec flat;
  flat.reserve(param_count(params));
  walk_params(params, [&](const std::string&, const std::vector<double>& v) {
    flat.insert(flat.end(), v.begin(), v.end());
  });
  return flat;
}

void unflatten(ModelParams& params, std::span<const double> flat) {
  if (flat.size() != param_count(params)) {
    throw ShapeError("unflatten: expected " + std::to_string(param_count(params)) +
                     " values, got " + std::to_string(flat.size()));
  }
  std::size_t offset = 0;
  walk_params_mut(params, [&](std::vector<double>& v) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offset),
              flat.begin() + static_cast<std::ptrdiff_t>(offset + v.size()), v.begin());
    offset += v.size();
  });
}

}  // namespace mne
