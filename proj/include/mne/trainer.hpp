#ifndef MNE_TRAINER_HPP
#define MNE_TRAINER_HPP

#include <cstdint>
#include <vector>

#include "mne/dataset.hpp"
#include "mne/memory.hpp"
#include "mne/model.hpp"

namespace mne {

struct TrainConfig {
  int k = 12;
  int depth = 2;
  double lambda = 1.0;
  AggMode mode = AggMode::attention;
  double lr_encoder = 1e-5;
  double lr_model = 1e-4;
  double lr_decay = 0.1;   // multiplies both rates
  long decay_every = 20;   // epochs (retrieval) or episodes (episodic)
  long epochs = 40;        // retrieval training length
  long episodes = 2000;    // episodic training length
  int batch_size = 16;
  std::uint64_t seed = 0;
  int n_way = 5;
  int m_shot = 1;
  int q_queries = 15;
  bool memory_update = true;
  std::size_t diff_dim = 0;  // 0 -> feature dim
  EncoderKind encoder = EncoderKind::identity;
  std::size_t encoder_hidden = 64;
  Exec exec = Exec::parallel;
};

struct TrainLogRecord {
  long step = 0;     // 1-based epoch or episode
  double ce = 0.0;   // mean per item
  double bce = 0.0;  // mean per supervised pair (the loss itself is summed)
  double total = 0.0;  // mean per item of ce + lambda * summed bce
  double lr_model = 0.0;
  double lr_encoder = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<TrainLogRecord> log;
  EpisodicMemory memory;  // final training memory (retrieval mode only)
};

std::vector<Vec> encode_all(const Encoder& enc, const std::vector<Vec>& features,
                            Exec exec = Exec::parallel);

// Whole-set memory training: per batch, embed every item against the shared
// memory (own entry excluded at the root), sum the gradients, take one Adam
// step with separate encoder/model rates, then overwrite the batch's memory
// rows with fresh encoder outputs (unless memory updates are disabled).
TrainResult train_retrieval(const Dataset& train, const TrainConfig& config,
                            const ModelParams* init = nullptr);

// Episodic training: each episode samples n_way classes with m_shot support
// and q_queries query items, builds a fresh memory from their encoder
// outputs, embeds every item transductively and optimizes the classification
// loss over the base classes plus the pair loss.
TrainResult train_episodic(const Dataset& train, const TrainConfig& config,
                           const ModelParams* init = nullptr);

struct PretrainConfig {
  long epochs = 20;
  double lr = 1e-3;
  int batch_size = 32;
  std::uint64_t seed = 0;
  std::size_t hidden = 64;
  std::size_t out_dim = 0;  // 0 -> input dim
  EncoderKind kind = EncoderKind::mlp;
  Exec exec = Exec::parallel;
};

struct PretrainResult {
  Encoder encoder;
  Classifier classifier;
  double train_accuracy = 0.0;
};

// Plain softmax classification on encoder outputs; the identity kind
// returns immediately without taking a step.
PretrainResult pretrain_encoder(const Dataset& train, const PretrainConfig& config);

}  // namespace mne

#endif  // MNE_TRAINER_HPP
