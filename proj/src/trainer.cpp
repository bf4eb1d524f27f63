#include "mne/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "mne/embed.hpp"
#include "mne/treegraph.hpp"

namespace mne {

std::vector<Vec> encode_all(const Encoder& enc, const std::vector<Vec>& features, Exec exec) {
  std::vector<Vec> out(features.size());
  parallel_for(features.size(), exec, [&](std::size_t i) {
    out[i] = encoder_forward(enc, features[i]);
  });
  return out;
}

namespace {

void check_config(const TrainConfig& c) {
  if (c.k < 1) throw DegenerateInputError("train: k must be >= 1");
  if (c.depth < 0) throw DegenerateInputError("train: depth must be >= 0");
  if (c.lambda < 0.0) throw DegenerateInputError("train: lambda must be >= 0");
  if (!(c.lr_encoder > 0.0) || !(c.lr_model > 0.0)) {
    throw DegenerateInputError("train: learning rates must be positive");
  }
  if (!(c.lr_decay > 0.0) || c.lr_decay > 1.0) {
    throw DegenerateInputError("train: decay factor must be in (0, 1]");
  }
  if (c.batch_size < 1) throw DegenerateInputError("train: batch size must be >= 1");
  if (c.decay_every < 1) throw DegenerateInputError("train: decay interval must be >= 1");
}

ModelParams make_params(const Dataset& data, const TrainConfig& c, const ModelParams* init) {
  if (init != nullptr) return *init;
  ModelDims dims;
  dims.feature_dim = data.dim();
  dims.diff_dim = c.diff_dim;
  dims.rounds = c.depth;
  dims.classes = static_cast<std::size_t>(data.num_classes());
  dims.encoder = c.encoder;
  dims.encoder_in = data.dim();
  dims.encoder_hidden = c.encoder == EncoderKind::mlp ? c.encoder_hidden : 0;
  return init_model(dims, c.seed);
}

// per-parameter learning rates: encoder blocks train at the encoder rate
Vec lr_vector(const ModelParams& params, double lr_model, double lr_encoder) {
  Vec lr(param_count(params), lr_model);
  for (const auto& block : param_layout(params)) {
    if (block.name.rfind("encoder.", 0) == 0) {
      std::fill(lr.begin() + static_cast<std::ptrdiff_t>(block.offset),
                lr.begin() + static_cast<std::ptrdiff_t>(block.offset + block.size), lr_encoder);
    }
  }
  return lr;
}

std::unordered_map<std::int64_t, int> memory_labels(const EpisodicMemory& mem) {
  std::unordered_map<std::int64_t, int> labels;
  labels.reserve(mem.size());
  for (const auto& e : mem.entries()) {
    if (e.label) labels[e.id] = *e.label;
  }
  return labels;
}

struct ItemResult {
  LossBreakdown breakdown;
  EmbedGrads embed_grads;
  Matrix g_classifier;
  EncoderTape encoder_tape;
};

// forward + backward for one training item against a fixed memory
ItemResult item_pass(const ModelParams& params, const TrainConfig& c, const Vec& raw_feature,
                     std::int64_t memory_id, int label, const EpisodicMemory& mem,
                     const std::unordered_map<std::int64_t, int>& node_labels) {
  ItemResult r;
  const Vec feat = encoder_forward(params.encoder, raw_feature, &r.encoder_tape);
  const auto tree = build_tree(feat, memory_id, mem, c.k, c.depth);
  EmbedOutput out = neighbourhood_embed(tree, params.asa, c.mode, /*want_tape=*/true);
  auto loss = total_loss(out, tree, params.asa, label, params.classifier, node_labels, c.lambda);
  r.breakdown = loss.breakdown;
  r.embed_grads = std::move(loss.embed_grads);
  r.g_classifier = std::move(loss.g_classifier);
  return r;
}

}  // namespace

TrainResult train_retrieval(const Dataset& train, const TrainConfig& config,
                            const ModelParams* init) {
  check_config(config);
  train.validate();
  if (!train.labeled() || train.size() == 0) {
    throw DegenerateInputError("train_retrieval: labeled training data required");
  }
  if (config.depth >= 1 && train.size() < static_cast<std::size_t>(config.k) + 1) {
    throw CapacityError("train_retrieval: memory of " + std::to_string(train.size()) +
                        " entries cannot serve k=" + std::to_string(config.k));
  }

  TrainResult result;
  result.params = make_params(train, config, init);
  result.memory = EpisodicMemory::init(encode_all(result.params.encoder, train.features,
                                                  config.exec),
                                       train.labels);
  const auto node_labels = memory_labels(result.memory);

  Vec flat = flatten(result.params);
  AdamState adam(flat.size());
  double scale = 1.0;

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (long epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const Vec lr = lr_vector(result.params, config.lr_model * scale, config.lr_encoder * scale);
    double ce_sum = 0.0, bce_sum = 0.0, total_sum = 0.0;
    std::size_t pair_sum = 0;

    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const std::size_t n = end - start;

      std::vector<ItemResult> items(n);
      parallel_for(n, config.exec, [&](std::size_t i) {
        const std::size_t item = order[start + i];
        items[i] = item_pass(result.params, config, train.features[item],
                             static_cast<std::int64_t>(item), train.labels[item], result.memory,
                             node_labels);
      });

      ModelGrads grads = zeros_like(result.params);
      for (std::size_t i = 0; i < n; ++i) {
        accumulate(grads, items[i].embed_grads, items[i].g_classifier);
        encoder_backward(result.params.encoder, items[i].encoder_tape,
                         items[i].embed_grads.root, grads.encoder);
        ce_sum += items[i].breakdown.ce;
        bce_sum += items[i].breakdown.bce;
        total_sum += items[i].breakdown.total;
        pair_sum += items[i].breakdown.pair_count;
      }

      const Vec flat_grads = flatten(grads);
      adam_step(flat, flat_grads, adam, lr);
      unflatten(result.params, flat);

      if (config.memory_update) {
        std::vector<std::int64_t> ids(n);
        std::vector<Vec> fresh(n);
        parallel_for(n, config.exec, [&](std::size_t i) {
          const std::size_t item = order[start + i];
          ids[i] = static_cast<std::int64_t>(item);
          fresh[i] = encoder_forward(result.params.encoder, train.features[item]);
        });
        result.memory.update(ids, fresh);
      }
    }

    const auto count = static_cast<double>(train.size());
    const double bce_per_pair = pair_sum == 0 ? 0.0 : bce_sum / static_cast<double>(pair_sum);
    result.log.push_back({epoch + 1, ce_sum / count, bce_per_pair, total_sum / count,
                          config.lr_model * scale, config.lr_encoder * scale});
    if ((epoch + 1) % config.decay_every == 0) scale *= config.lr_decay;
  }
  return result;
}

TrainResult train_episodic(const Dataset& train, const TrainConfig& config,
                           const ModelParams* init) {
  check_config(config);
  train.validate();
  if (!train.labeled() || train.size() == 0) {
    throw DegenerateInputError("train_episodic: labeled training data required");
  }
  if (config.n_way < 2 || config.m_shot < 1 || config.q_queries < 0) {
    throw DegenerateInputError("train_episodic: bad episode shape");
  }

  const int per_class = config.m_shot + config.q_queries;
  std::vector<std::vector<std::size_t>> by_class(
      static_cast<std::size_t>(train.num_classes()));
  for (std::size_t i = 0; i < train.size(); ++i) {
    by_class[static_cast<std::size_t>(train.labels[i])].push_back(i);
  }
  std::vector<int> eligible;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() >= static_cast<std::size_t>(per_class)) {
      eligible.push_back(static_cast<int>(c));
    }
  }
  if (eligible.size() < static_cast<std::size_t>(config.n_way)) {
    throw CapacityError("train_episodic: only " + std::to_string(eligible.size()) +
                        " classes have " + std::to_string(per_class) + " items, need " +
                        std::to_string(config.n_way));
  }
  const std::size_t episode_size =
      static_cast<std::size_t>(config.n_way) * static_cast<std::size_t>(per_class);
  if (config.depth >= 1 && episode_size < static_cast<std::size_t>(config.k) + 1) {
    throw CapacityError("train_episodic: episode memory of " + std::to_string(episode_size) +
                        " entries cannot serve k=" + std::to_string(config.k));
  }

  TrainResult result;
  result.params = make_params(train, config, init);

  Vec flat = flatten(result.params);
  AdamState adam(flat.size());
  double scale = 1.0;
  std::mt19937_64 rng(config.seed);

  for (long episode = 0; episode < config.episodes; ++episode) {
    // sample n_way classes, then m_shot + q_queries items within each
    std::vector<int> classes = eligible;
    std::shuffle(classes.begin(), classes.end(), rng);
    classes.resize(static_cast<std::size_t>(config.n_way));

    std::vector<std::size_t> support, queries;
    for (int c : classes) {
      std::vector<std::size_t> pool = by_class[static_cast<std::size_t>(c)];
      std::shuffle(pool.begin(), pool.end(), rng);
      for (int j = 0; j < config.m_shot; ++j) support.push_back(pool[static_cast<std::size_t>(j)]);
      for (int j = 0; j < config.q_queries; ++j) {
        queries.push_back(pool[static_cast<std::size_t>(config.m_shot + j)]);
      }
    }
    std::vector<std::size_t> items = support;
    items.insert(items.end(), queries.begin(), queries.end());

    std::vector<EncoderTape> tapes(items.size());
    std::vector<Vec> encoded(items.size());
    parallel_for(items.size(), config.exec, [&](std::size_t i) {
      encoded[i] = encoder_forward(result.params.encoder, train.features[items[i]], &tapes[i]);
    });
    std::vector<int> labels(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) labels[i] = train.labels[items[i]];

    const EpisodicMemory mem = EpisodicMemory::init(encoded, labels);
    const auto node_labels = memory_labels(mem);

    struct EpisodeItem {
      LossBreakdown breakdown;
      EmbedGrads grads;
      Matrix g_classifier;
    };
    std::vector<EpisodeItem> results(items.size());
    parallel_for(items.size(), config.exec, [&](std::size_t i) {
      const auto tree = build_tree(encoded[i], static_cast<std::int64_t>(i), mem, config.k,
                                   config.depth);
      EmbedOutput out = neighbourhood_embed(tree, result.params.asa, config.mode, true);
      auto loss = total_loss(out, tree, result.params.asa, labels[i], result.params.classifier,
                             node_labels, config.lambda);
      results[i] = {loss.breakdown, std::move(loss.embed_grads), std::move(loss.g_classifier)};
    });

    ModelGrads grads = zeros_like(result.params);
    double ce_sum = 0.0, bce_sum = 0.0, total_sum = 0.0;
    std::size_t pair_sum = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      accumulate(grads, results[i].grads, results[i].g_classifier);
      encoder_backward(result.params.encoder, tapes[i], results[i].grads.root, grads.encoder);
      ce_sum += results[i].breakdown.ce;
      bce_sum += results[i].breakdown.bce;
      total_sum += results[i].breakdown.total;
      pair_sum += results[i].breakdown.pair_count;
    }

    const Vec lr = lr_vector(result.params, config.lr_model * scale, config.lr_encoder * scale);
    const Vec flat_grads = flatten(grads);
    adam_step(flat, flat_grads, adam, lr);
    unflatten(result.params, flat);

    const auto count = static_cast<double>(items.size());
    const double bce_per_pair = pair_sum == 0 ? 0.0 : bce_sum / static_cast<double>(pair_sum);
    result.log.push_back({episode + 1, ce_sum / count, bce_per_pair, total_sum / count,
                          config.lr_model * scale, config.lr_encoder * scale});
    if ((episode + 1) % config.decay_every == 0) scale *= config.lr_decay;
  }
  return result;
}

PretrainResult pretrain_encoder(const Dataset& train, const PretrainConfig& config) {
  train.validate();
  if (!train.labeled() || train.size() == 0) {
    throw DegenerateInputError("pretrain_encoder: labeled training data required");
  }

  PretrainResult result;
  if (config.kind == EncoderKind::identity) {
    result.encoder.kind = EncoderKind::identity;
    result.encoder.input_dim = train.dim();
    result.encoder.output_dim = train.dim();
    return result;
  }

  ModelDims dims;
  dims.feature_dim = config.out_dim == 0 ? train.dim() : config.out_dim;
  dims.rounds = 0;
  dims.classes = static_cast<std::size_t>(train.num_classes());
  dims.encoder = EncoderKind::mlp;
  dims.encoder_in = train.dim();
  dims.encoder_hidden = config.hidden;
  ModelParams params = init_model(dims, config.seed);

  Vec flat = flatten(params);
  AdamState adam(flat.size());
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (long epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const std::size_t n = end - start;

      struct Item {
        EncoderTape tape;
        CeLossResult ce;
        Vec g_root;
      };
      std::vector<Item> items(n);
      parallel_for(n, config.exec, [&](std::size_t i) {
        const std::size_t item = order[start + i];
        const Vec out = encoder_forward(params.encoder, train.features[item], &items[i].tape);
        items[i].ce = ce_loss(out, train.labels[item], params.classifier);
      });

      ModelGrads grads = zeros_like(params);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < grads.classifier.weight.data.size(); ++j) {
          grads.classifier.weight.data[j] += items[i].ce.g_weight.data[j];
        }
        encoder_backward(params.encoder, items[i].tape, items[i].ce.g_embedding, grads.encoder);
      }
      adam_step(flat, flatten(grads), adam, config.lr);
      unflatten(params, flat);
    }
  }

  // training-set accuracy of the finished encoder + classifier
  std::size_t correct = 0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const Vec out = encoder_forward(params.encoder, train.features[i]);
    const Vec logits = matvec(params.classifier.weight, out);
    const auto best = static_cast<int>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (best == train.labels[i]) ++correct;
  }
  result.encoder = params.encoder;
  result.classifier = params.classifier;
  result.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
  return result;
}

}  // namespace mne
