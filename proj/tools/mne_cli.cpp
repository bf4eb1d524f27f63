// Command line front end: synthetic data generation, training, evaluation,
// ablation sweeps and the gradient self-check.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mne/checkpoint.hpp"
#include "mne/embedding_io.hpp"
#include "mne/evalmetrics.hpp"
#include "mne/selfcheck.hpp"
#include "mne/synthetic.hpp"
#include "mne/trainer.hpp"

namespace {

using namespace mne;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

Dataset load_labeled(const std::string& path, const char* what) {
  Dataset d = read_embeddings(path);
  if (!d.labeled()) {
    throw DegenerateInputError(std::string(what) + " '" + path + "' has no labels");
  }
  return d;
}

void write_train_log(const std::string& path, const std::vector<TrainLogRecord>& log,
                     const char* step_name) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open log file '" + path + "'");
  for (const auto& rec : log) {
    os << step_name << '=' << rec.step << " ce=" << fmt(rec.ce) << " bce=" << fmt(rec.bce)
       << " total=" << fmt(rec.total) << " lr_model=" << rec.lr_model
       << " lr_encoder=" << rec.lr_encoder << '\n';
  }
}

struct TrainFlags {
  std::string data;
  std::string init;
  std::string checkpoint;
  std::string log;
  TrainConfig config;
  std::string mode = "attention";
  std::string encoder = "identity";
  bool no_memory_update = false;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f, bool episodic) {
  cmd->add_option("--data", f.data, "labeled training embedding file")->required();
  cmd->add_option("--k", f.config.k, "neighbours per expansion");
  cmd->add_option("--depth", f.config.depth, "tree depth / aggregation rounds");
  cmd->add_option("--lambda-bce", f.config.lambda, "pair-loss weight");
  cmd->add_option("--mode", f.mode, "aggregation: attention|mean|max");
  cmd->add_option("--lr-encoder", f.config.lr_encoder, "encoder learning rate");
  cmd->add_option("--lr-model", f.config.lr_model, "model learning rate");
  cmd->add_option("--decay", f.config.lr_decay, "learning-rate decay factor");
  cmd->add_option("--decay-every", f.config.decay_every,
                  episodic ? "decay interval in episodes" : "decay interval in epochs");
  if (episodic) {
    cmd->add_option("--episodes", f.config.episodes, "training episodes");
    cmd->add_option("--n-way", f.config.n_way, "classes per episode");
    cmd->add_option("--m-shot", f.config.m_shot, "support items per class");
    cmd->add_option("--q-queries", f.config.q_queries, "query items per class");
  } else {
    cmd->add_option("--epochs", f.config.epochs, "training epochs");
    cmd->add_option("--batch", f.config.batch_size, "batch size");
    cmd->add_flag("--no-memory-update", f.no_memory_update,
                  "keep the initial memory features");
  }
  cmd->add_option("--seed", f.config.seed, "random seed");
  cmd->add_option("--encoder", f.encoder, "encoder kind: identity|mlp");
  cmd->add_option("--enc-hidden", f.config.encoder_hidden, "mlp hidden width");
  cmd->add_option("--diff-dim", f.config.diff_dim, "difference-projection size (0 = dim)");
  cmd->add_option("--init", f.init, "checkpoint to initialize matching blocks from");
  cmd->add_option("--checkpoint", f.checkpoint, "output checkpoint path");
  cmd->add_option("--log", f.log, "training log path");
}

// adopt whatever blocks of a loaded checkpoint fit the fresh model
ModelParams merged_init(const ModelParams& fresh, const ModelParams& loaded) {
  ModelParams out = fresh;
  if (loaded.encoder.kind == fresh.encoder.kind &&
      loaded.encoder.input_dim == fresh.encoder.input_dim &&
      loaded.encoder.output_dim == fresh.encoder.output_dim &&
      (loaded.encoder.kind == EncoderKind::identity ||
       loaded.encoder.hidden_dim() == fresh.encoder.hidden_dim())) {
    out.encoder = loaded.encoder;
    std::cout << "init: adopted encoder\n";
  }
  if (!loaded.asa.empty() && loaded.asa.size() == fresh.asa.size() &&
      loaded.asa.front().feature_dim() == fresh.asa.front().feature_dim() &&
      loaded.asa.front().diff_dim() == fresh.asa.front().diff_dim()) {
    out.asa = loaded.asa;
    std::cout << "init: adopted aggregation rounds\n";
  }
  if (loaded.classifier.weight.rows == fresh.classifier.weight.rows &&
      loaded.classifier.weight.cols == fresh.classifier.weight.cols) {
    out.classifier = loaded.classifier;
    std::cout << "init: adopted classifier\n";
  }
  return out;
}

int run_train(const TrainFlags& f, bool episodic) {
  TrainConfig config = f.config;
  config.mode = agg_mode_from_string(f.mode);
  config.encoder = encoder_kind_from_string(f.encoder);
  config.memory_update = !f.no_memory_update;

  const Dataset train = load_labeled(f.data, "training set");

  std::optional<ModelParams> init;
  if (!f.init.empty()) {
    TrainConfig probe = config;
    probe.epochs = 0;
    probe.episodes = 0;
    const ModelParams fresh =
        episodic ? train_episodic(train, probe).params : train_retrieval(train, probe).params;
    init = merged_init(fresh, checkpoint_load(f.init, train.dim()).params);
  }

  const TrainResult result = episodic
                                 ? train_episodic(train, config, init ? &*init : nullptr)
                                 : train_retrieval(train, config, init ? &*init : nullptr);

  if (!result.log.empty()) {
    const auto& last = result.log.back();
    std::cout << (episodic ? "episodes " : "epochs ") << last.step << "\n"
              << "final_ce " << fmt(last.ce) << "\n"
              << "final_bce " << fmt(last.bce) << "\n"
              << "final_total " << fmt(last.total) << "\n";
  }
  if (!f.log.empty()) write_train_log(f.log, result.log, episodic ? "episode" : "epoch");
  if (!f.checkpoint.empty()) {
    CheckpointMeta meta;
    meta.k = config.k;
    meta.lambda = config.lambda;
    meta.mode = config.mode;
    checkpoint_save(f.checkpoint, result.params, meta);
    std::cout << "checkpoint " << f.checkpoint << "\n";
  }
  return 0;
}

// Evaluation-side model: either a checkpoint or the bare identity pipeline.
struct EvalModel {
  ModelParams params;
  int k = 12;
  int depth = 0;
  AggMode mode = AggMode::attention;
};

EvalModel load_eval_model(const std::string& checkpoint, std::size_t data_dim,
                          std::optional<int> k, std::optional<int> depth,
                          const std::optional<std::string>& mode) {
  EvalModel m;
  if (!checkpoint.empty()) {
    Checkpoint ckpt = checkpoint_load(checkpoint, data_dim);
    m.params = std::move(ckpt.params);
    m.k = ckpt.meta.k;
    m.mode = ckpt.meta.mode;
    m.depth = m.params.rounds();
  } else {
    ModelDims dims;
    dims.feature_dim = data_dim;
    dims.rounds = 0;
    dims.classes = 2;  // evaluation never touches the classifier
    m.params = init_model(dims, 0);
    m.depth = 0;
  }
  if (k) m.k = *k;
  if (depth) m.depth = *depth;
  if (mode) m.mode = agg_mode_from_string(*mode);
  if (m.mode == AggMode::attention && m.depth > m.params.rounds()) {
    throw ShapeError("eval: depth " + std::to_string(m.depth) + " exceeds the checkpoint's " +
                     std::to_string(m.params.rounds()) + " aggregation rounds");
  }
  return m;
}

int run_eval_retrieval(const std::string& checkpoint, const std::string& train_path,
                       const std::string& query_path, const std::string& gallery_path,
                       std::optional<int> k, std::optional<int> depth,
                       const std::optional<std::string>& mode, double ratio,
                       std::uint64_t sample_seed, bool queries_are_gallery,
                       const std::string& csv_out) {
  const Dataset train = load_labeled(train_path, "training set");
  const Dataset queries = load_labeled(query_path, "query set");
  const Dataset gallery = load_labeled(gallery_path, "gallery set");

  EvalModel m = load_eval_model(checkpoint, train.dim(), k, depth, mode);
  ModelParams eval_params = m.params;
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(m.depth),
                                          m.params.asa.size());
  eval_params.asa.assign(m.params.asa.begin(),
                         m.params.asa.begin() + static_cast<std::ptrdiff_t>(take));

  RetrievalOptions options;
  options.k = m.k;
  options.depth = m.depth;
  options.mode = m.mode;
  options.memory_sample_ratio = ratio;
  options.sample_seed = sample_seed;
  options.queries_are_gallery = queries_are_gallery;
  const RetrievalMetrics metrics = evaluate_retrieval(train, queries, gallery, eval_params,
                                                      options);

  std::cout << "map " << fmt(metrics.map) << "\n"
            << "rank1 " << fmt(metrics.rank1) << "\n"
            << "queries_scored " << metrics.queries_scored << "\n"
            << "queries_skipped " << metrics.queries_skipped << "\n";
  if (!csv_out.empty()) {
    std::ofstream os(csv_out);
    os << "k,depth,mode,mem_ratio,map,rank1\n"
       << m.k << ',' << m.depth << ',' << to_string(m.mode) << ',' << ratio << ','
       << fmt(metrics.map) << ',' << fmt(metrics.rank1) << '\n';
  }
  return 0;
}

int run_eval_fewshot(const std::string& checkpoint, const std::string& data_path,
                     std::optional<int> k, std::optional<int> depth,
                     const std::optional<std::string>& mode, const EpisodeShape& shape,
                     std::size_t episodes, std::uint64_t seed, const std::string& csv_out) {
  const Dataset test = load_labeled(data_path, "test set");
  EvalModel m = load_eval_model(checkpoint, test.dim(), k, depth, mode);
  ModelParams eval_params = m.params;
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(m.depth),
                                          m.params.asa.size());
  eval_params.asa.assign(m.params.asa.begin(),
                         m.params.asa.begin() + static_cast<std::ptrdiff_t>(take));

  FewShotOptions options;
  options.k = m.k;
  options.depth = m.depth;
  options.mode = m.mode;
  const FewShotReport report = evaluate_fewshot(test, eval_params, shape, episodes, seed,
                                                options);

  std::cout << "episodes " << report.episodes << "\n"
            << "accuracy " << fmt(report.mean_accuracy) << "\n"
            << "ci95 " << fmt(report.ci95) << "\n";
  if (!csv_out.empty()) {
    std::ofstream os(csv_out);
    os << "k,depth,mode,n_way,m_shot,q_queries,episodes,accuracy,ci95\n"
       << m.k << ',' << m.depth << ',' << to_string(m.mode) << ',' << shape.n_way << ','
       << shape.m_shot << ',' << shape.q_queries << ',' << report.episodes << ','
       << fmt(report.mean_accuracy) << ',' << fmt(report.ci95) << '\n';
  }
  return 0;
}

struct AblateFlags {
  std::string task = "retrieval";
  std::string sweep;
  std::string train_path;
  std::string query_path;
  std::string gallery_path;
  std::string out;
  TrainFlags train;
  std::size_t eval_episodes = 500;
  EpisodeShape shape;
  double mem_ratio = 1.0;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

int run_ablate(const AblateFlags& f) {
  const auto eq = f.sweep.find('=');
  if (f.sweep.empty() || eq == std::string::npos) {
    throw DegenerateInputError("ablate: --sweep must look like axis=v1,v2,...");
  }
  const std::string axis = f.sweep.substr(0, eq);
  const std::vector<std::string> values = split(f.sweep.substr(eq + 1), ',');
  if (values.empty()) throw DegenerateInputError("ablate: empty sweep value list");

  const bool fewshot = f.task == "fewshot";
  if (!fewshot && f.task != "retrieval") {
    throw DegenerateInputError("ablate: task must be retrieval or fewshot");
  }

  const Dataset train = load_labeled(f.train_path, "training set");
  Dataset queries, gallery, test;
  if (fewshot) {
    test = load_labeled(f.query_path.empty() ? f.gallery_path : f.query_path, "test set");
  } else {
    queries = load_labeled(f.query_path, "query set");
    gallery = load_labeled(f.gallery_path, "gallery set");
  }

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!f.out.empty()) {
    file.open(f.out);
    if (!file) throw FormatError("cannot open '" + f.out + "'");
    os = &file;
  }
  *os << "sweep,value,task,k,depth,mode,lambda,mem_ratio,mem_update,seed,map,rank1,accuracy,ci95\n";

  for (const std::string& value : values) {
    TrainConfig config = f.train.config;
    config.mode = agg_mode_from_string(f.train.mode);
    config.encoder = encoder_kind_from_string(f.train.encoder);
    config.memory_update = !f.train.no_memory_update;
    config.n_way = f.shape.n_way;
    config.m_shot = f.shape.m_shot;
    config.q_queries = f.shape.q_queries;
    double mem_ratio = f.mem_ratio;

    if (axis == "depth") {
      config.depth = std::stoi(value);
    } else if (axis == "k") {
      config.k = std::stoi(value);
    } else if (axis == "mode") {
      config.mode = agg_mode_from_string(value);
    } else if (axis == "lambda") {
      config.lambda = std::stod(value);
    } else if (axis == "memratio") {
      mem_ratio = std::stod(value);
    } else if (axis == "memupdate") {
      if (value != "on" && value != "off") {
        throw DegenerateInputError("ablate: memupdate values are on/off");
      }
      config.memory_update = value == "on";
    } else {
      throw DegenerateInputError("ablate: unknown axis '" + axis + "'");
    }

    const TrainResult trained =
        fewshot ? train_episodic(train, config) : train_retrieval(train, config);

    *os << axis << ',' << value << ',' << f.task << ',' << config.k << ',' << config.depth << ','
        << to_string(config.mode) << ',' << config.lambda << ',' << mem_ratio << ','
        << (config.memory_update ? "on" : "off") << ',' << config.seed << ',';
    if (fewshot) {
      FewShotOptions options;
      options.k = config.k;
      options.depth = config.depth;
      options.mode = config.mode;
      const auto report = evaluate_fewshot(test, trained.params, f.shape, f.eval_episodes,
                                           config.seed, options);
      *os << ",," << fmt(report.mean_accuracy) << ',' << fmt(report.ci95) << '\n';
    } else {
      RetrievalOptions options;
      options.k = config.k;
      options.depth = config.depth;
      options.mode = config.mode;
      options.memory_sample_ratio = mem_ratio;
      options.sample_seed = config.seed;
      const auto metrics = evaluate_retrieval(train, queries, gallery, trained.params, options);
      *os << fmt(metrics.map) << ',' << fmt(metrics.rank1) << ",,\n";
    }
  }
  return 0;
}

int run_gradcheck(std::uint64_t seed, int seeds, std::optional<std::size_t> dim,
                  std::optional<int> k, std::optional<int> depth, double lambda, double tol,
                  std::optional<double> step) {
  bool all_pass = true;
  double worst = 0.0;
  for (int s = 0; s < seeds; ++s) {
    std::vector<SelfCheckConfig> configs;
    if (dim || k || depth) {
      SelfCheckConfig c;
      if (dim) c.dim = *dim;
      if (k) c.k = *k;
      if (depth) c.depth = *depth;
      c.seed = seed + static_cast<std::uint64_t>(s);
      configs.push_back(c);
    } else {
      configs = selfcheck_sweep(seed + static_cast<std::uint64_t>(s) * 1000);
    }
    for (SelfCheckConfig& c : configs) {
      c.lambda = lambda;
      c.tolerance = tol;
      if (step) c.step = *step;
      const SelfCheckOutcome outcome = run_selfcheck(c);
      worst = std::max(worst, outcome.report.max_rel_err);
      all_pass = all_pass && outcome.report.passed();
      char line[160];
      std::snprintf(line, sizeof(line),
                    "config dim=%zu k=%d depth=%d seed=%llu max_rel_err %.3e",
                    c.dim, c.k, c.depth, static_cast<unsigned long long>(c.seed),
                    outcome.report.max_rel_err);
      std::cout << line << "\n";
    }
  }
  char line[128];
  std::snprintf(line, sizeof(line), "overall_max_rel_err %.3e tolerance %.1e status %s", worst,
                tol, all_pass ? "PASS" : "FAIL");
  std::cout << line << "\n";
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memory-based neighbourhood embedding toolkit"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = library default)");

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic embedding file");
  SyntheticSpec spec;
  std::string gen_out, gen_query_out, gen_gallery_out;
  gen->add_option("--classes", spec.classes, "number of classes");
  gen->add_option("--per-class", spec.per_class, "items per class");
  gen->add_option("--dim", spec.dim, "feature dimension");
  gen->add_option("--sigma", spec.sigma, "within-class noise");
  gen->add_option("--bimodal", spec.bimodal_offset, "two-mode offset (0 = unimodal)");
  gen->add_option("--seed", spec.seed, "random seed");
  gen->add_option("--out", gen_out, "output embedding file");
  gen->add_option("--query-out", gen_query_out, "odd items (mode 1) output");
  gen->add_option("--gallery-out", gen_gallery_out, "even items (mode 0) output");

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "train an mlp encoder on raw features");
  std::string pre_data, pre_checkpoint;
  PretrainConfig pre_config;
  pre->add_option("--data", pre_data, "labeled embedding file")->required();
  pre->add_option("--hidden", pre_config.hidden, "hidden width");
  pre->add_option("--out-dim", pre_config.out_dim, "encoder output dim (0 = input dim)");
  pre->add_option("--epochs", pre_config.epochs, "training epochs");
  pre->add_option("--lr", pre_config.lr, "learning rate");
  pre->add_option("--batch", pre_config.batch_size, "batch size");
  pre->add_option("--seed", pre_config.seed, "random seed");
  pre->add_option("--checkpoint", pre_checkpoint, "output checkpoint path");

  // train-retrieval / train-fewshot
  auto* tr = app.add_subcommand("train-retrieval", "whole-set memory training");
  TrainFlags tr_flags;
  add_train_flags(tr, tr_flags, /*episodic=*/false);

  auto* tf = app.add_subcommand("train-fewshot", "episodic training");
  TrainFlags tf_flags;
  tf_flags.config.k = 10;
  tf_flags.config.lr_encoder = 1e-4;
  tf_flags.config.lr_model = 1e-3;
  tf_flags.config.decay_every = 1000;
  add_train_flags(tf, tf_flags, /*episodic=*/true);

  // eval-retrieval
  auto* er = app.add_subcommand("eval-retrieval", "rank a gallery per query");
  std::string er_checkpoint, er_train, er_queries, er_gallery, er_csv;
  std::optional<int> er_k, er_depth;
  std::optional<std::string> er_mode;
  double er_ratio = 1.0;
  std::uint64_t er_sample_seed = 0;
  bool er_self = false;
  er->add_option("--checkpoint", er_checkpoint, "trained model (omit for identity baseline)");
  er->add_option("--train", er_train, "labeled training embedding file")->required();
  er->add_option("--queries", er_queries, "labeled query embedding file")->required();
  er->add_option("--gallery", er_gallery, "labeled gallery embedding file")->required();
  er->add_option("--k", er_k, "override neighbour count");
  er->add_option("--depth", er_depth, "override tree depth");
  er->add_option("--mode", er_mode, "override aggregation mode");
  er->add_option("--memory-sample-ratio", er_ratio, "gallery fraction added to memory");
  er->add_option("--sample-seed", er_sample_seed, "gallery sampling seed");
  er->add_flag("--queries-are-gallery", er_self, "exclude the i-th gallery item for query i");
  er->add_option("--out", er_csv, "also write a CSV row");

  // eval-fewshot
  auto* ef = app.add_subcommand("eval-fewshot", "episodic n-way m-shot evaluation");
  std::string ef_checkpoint, ef_data, ef_csv;
  std::optional<int> ef_k, ef_depth;
  std::optional<std::string> ef_mode;
  EpisodeShape ef_shape;
  std::size_t ef_episodes = 1000;
  std::uint64_t ef_seed = 0;
  ef->add_option("--checkpoint", ef_checkpoint, "trained model (omit for identity baseline)");
  ef->add_option("--data", ef_data, "labeled test embedding file")->required();
  ef->add_option("--k", ef_k, "override neighbour count");
  ef->add_option("--depth", ef_depth, "override tree depth");
  ef->add_option("--mode", ef_mode, "override aggregation mode");
  ef->add_option("--n-way", ef_shape.n_way, "classes per episode");
  ef->add_option("--m-shot", ef_shape.m_shot, "support items per class");
  ef->add_option("--q-queries", ef_shape.q_queries, "query items per class");
  ef->add_option("--episodes", ef_episodes, "evaluation episodes");
  ef->add_option("--seed", ef_seed, "episode sampling seed");
  ef->add_option("--out", ef_csv, "also write a CSV row");

  // ablate
  auto* ab = app.add_subcommand("ablate", "train+eval sweep over one axis, CSV per row");
  AblateFlags ab_flags;
  ab->add_option("--task", ab_flags.task, "retrieval|fewshot");
  ab->add_option("--sweep", ab_flags.sweep,
                 "axis=v1,v2,... (depth|k|mode|lambda|memratio|memupdate)")
      ->required();
  ab->add_option("--train", ab_flags.train_path, "labeled training embedding file")->required();
  ab->add_option("--queries", ab_flags.query_path,
                 "query file (retrieval) or test file (fewshot)");
  ab->add_option("--gallery", ab_flags.gallery_path, "gallery file (retrieval)");
  ab->add_option("--k", ab_flags.train.config.k, "neighbours per expansion");
  ab->add_option("--depth", ab_flags.train.config.depth, "tree depth");
  ab->add_option("--lambda-bce", ab_flags.train.config.lambda, "pair-loss weight");
  ab->add_option("--mode", ab_flags.train.mode, "aggregation mode");
  ab->add_option("--epochs", ab_flags.train.config.epochs, "retrieval training epochs");
  ab->add_option("--episodes", ab_flags.train.config.episodes, "episodic training episodes");
  ab->add_option("--batch", ab_flags.train.config.batch_size, "batch size");
  ab->add_option("--lr-encoder", ab_flags.train.config.lr_encoder, "encoder learning rate");
  ab->add_option("--lr-model", ab_flags.train.config.lr_model, "model learning rate");
  ab->add_option("--decay", ab_flags.train.config.lr_decay, "decay factor");
  ab->add_option("--decay-every", ab_flags.train.config.decay_every, "decay interval");
  ab->add_option("--seed", ab_flags.train.config.seed, "random seed");
  ab->add_option("--encoder", ab_flags.train.encoder, "encoder kind");
  ab->add_option("--enc-hidden", ab_flags.train.config.encoder_hidden, "mlp hidden width");
  ab->add_option("--n-way", ab_flags.shape.n_way, "classes per episode");
  ab->add_option("--m-shot", ab_flags.shape.m_shot, "support items per class");
  ab->add_option("--q-queries", ab_flags.shape.q_queries, "query items per class");
  ab->add_option("--eval-episodes", ab_flags.eval_episodes, "few-shot evaluation episodes");
  ab->add_option("--memory-sample-ratio", ab_flags.mem_ratio, "gallery fraction in memory");
  ab->add_flag("--no-memory-update", ab_flags.train.no_memory_update, "freeze memory features");
  ab->add_option("--out", ab_flags.out, "CSV output path (default stdout)");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the training loss");
  std::uint64_t gc_seed = 0;
  int gc_seeds = 1;
  std::optional<std::size_t> gc_dim;
  std::optional<int> gc_k, gc_depth;
  double gc_lambda = 1.0, gc_tol = 1e-4;
  std::optional<double> gc_step;
  gc->add_option("--seed", gc_seed, "base seed");
  gc->add_option("--seeds", gc_seeds, "number of seeds to run");
  gc->add_option("--dim", gc_dim, "fixed feature dimension (default: sweep)");
  gc->add_option("--k", gc_k, "fixed neighbour count (default: sweep)");
  gc->add_option("--depth", gc_depth, "fixed depth (default: sweep)");
  gc->add_option("--lambda-bce", gc_lambda, "pair-loss weight");
  gc->add_option("--tol", gc_tol, "max relative error to pass");
  gc->add_option("--step", gc_step, "finite-difference step (default: per config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
        e.get_name() == "CallForVersion") {
      return app.exit(e);
    }
    std::cerr << e.what() << "\n";
    return 2;
  }

  set_thread_count(threads);

  try {
    if (gen->parsed()) {
      if (gen_out.empty() && (gen_query_out.empty() || gen_gallery_out.empty())) {
        std::cerr << "gen: need --out and/or both --query-out and --gallery-out\n";
        return 2;
      }
      const SyntheticData data = generate_synthetic(spec);
      if (!gen_out.empty()) {
        write_embeddings(gen_out, data.data);
        std::cout << "wrote " << gen_out << " n " << data.data.size() << " dim "
                  << data.data.dim() << "\n";
      }
      if (!gen_query_out.empty() && !gen_gallery_out.empty()) {
        Dataset q, g;
        for (std::size_t i = 0; i < data.data.size(); ++i) {
          Dataset& side = (i % 2 == 1) ? q : g;
          side.features.push_back(data.data.features[i]);
          side.labels.push_back(data.data.labels[i]);
        }
        write_embeddings(gen_query_out, q);
        write_embeddings(gen_gallery_out, g);
        std::cout << "wrote " << gen_query_out << " n " << q.size() << "\n"
                  << "wrote " << gen_gallery_out << " n " << g.size() << "\n";
      }
      return 0;
    }
    if (pre->parsed()) {
      const Dataset data = load_labeled(pre_data, "training set");
      const PretrainResult result = pretrain_encoder(data, pre_config);
      std::cout << "train_accuracy " << fmt(result.train_accuracy) << "\n";
      if (!pre_checkpoint.empty()) {
        ModelParams params;
        params.encoder = result.encoder;
        params.classifier = result.classifier;
        checkpoint_save(pre_checkpoint, params, {});
        std::cout << "checkpoint " << pre_checkpoint << "\n";
      }
      return 0;
    }
    if (tr->parsed()) return run_train(tr_flags, /*episodic=*/false);
    if (tf->parsed()) return run_train(tf_flags, /*episodic=*/true);
    if (er->parsed()) {
      return run_eval_retrieval(er_checkpoint, er_train, er_queries, er_gallery, er_k, er_depth,
                                er_mode, er_ratio, er_sample_seed, er_self, er_csv);
    }
    if (ef->parsed()) {
      return run_eval_fewshot(ef_checkpoint, ef_data, ef_k, ef_depth, ef_mode, ef_shape,
                              ef_episodes, ef_seed, ef_csv);
    }
    if (ab->parsed()) return run_ablate(ab_flags);
    if (gc->parsed()) {
      return run_gradcheck(gc_seed, gc_seeds, gc_dim, gc_k, gc_depth, gc_lambda, gc_tol, gc_step);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
