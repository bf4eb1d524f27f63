#ifndef MNE_MODEL_HPP
#define MNE_MODEL_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mne/asa.hpp"
#include "mne/gradcheck.hpp"
#include "mne/losses.hpp"

namespace mne {

enum class EncoderKind { identity, mlp };

const char* to_string(EncoderKind kind);
EncoderKind encoder_kind_from_string(const std::string& s);

// Stand-in for a feature backbone: either a pass-through or a single hidden
// layer (affine, relu, affine).
struct Encoder {
  EncoderKind kind = EncoderKind::identity;
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  AffineMap hidden;  // mlp only
  AffineMap out;     // mlp only

  std::size_t hidden_dim() const { return hidden.weight.rows; }
};

struct EncoderTape {
  Vec input;
  Vec preact;
  Vec activated;
};

Vec encoder_forward(const Encoder& enc, const Vec& x, EncoderTape* tape = nullptr);

// Accumulates parameter gradients into acc (shaped like the encoder's maps);
// no gradient w.r.t. the input is needed anywhere in the pipeline.
void encoder_backward(const Encoder& enc, const EncoderTape& tape, const Vec& g_out,
                      Encoder& acc);

// Everything learnable: one AsaParams per aggregation round, the classifier
// and the encoder. Doubles as the gradient accumulator (same shapes).
struct ModelParams {
  std::vector<AsaParams> asa;
  Classifier classifier;
  Encoder encoder;

  int rounds() const { return static_cast<int>(asa.size()); }
};

using ModelGrads = ModelParams;

struct ModelDims {
  std::size_t feature_dim = 0;  // embedding dimension D
  std::size_t diff_dim = 0;     // 0 means feature_dim
  int rounds = 0;               // tree depth H
  std::size_t classes = 0;
  EncoderKind encoder = EncoderKind::identity;
  std::size_t encoder_in = 0;      // 0 means feature_dim
  std::size_t encoder_hidden = 0;  // mlp only
};

ModelDims dims_of(const ModelParams& params);

// Aggregation transforms start near the identity (plus N(0, 0.01) noise) so
// an untrained model is close to mean pooling; the projection and score maps
// use uniform fan-in scaling; all biases start at zero.
ModelParams init_model(const ModelDims& dims, std::uint64_t seed);

ModelGrads zeros_like(const ModelParams& params);
void accumulate(ModelGrads& acc, const EmbedGrads& g, const Matrix& g_classifier);

// Fixed flattening order shared by the optimizer, the gradient checks and
// the checkpoint format: per round agg/diff/score (weights row-major, then
// bias), then the classifier, then the encoder maps.
std::vector<GradCheckBlock> param_layout(const ModelParams& params);
std::size_t param_count(const ModelParams& params);
Vec flatten(const ModelParams& params);
void unflatten(ModelParams& params, std::span<const double> flat);

}  // namespace mne

#endif  // MNE_MODEL_HPP
