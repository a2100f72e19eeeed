#include "relkit/training.hpp"

#include "relkit/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

namespace relkit {

std::string to_string(Optimizer opt) {
  switch (opt) {
    case Optimizer::SGD:
      return "sgd";
    case Optimizer::Adam:
      return "adam";
    case Optimizer::AdamW:
      return "adamw";
  }
  return "unknown";
}

Optimizer optimizer_from_string(const std::string& name) {
  if (name == "sgd") return Optimizer::SGD;
  if (name == "adam") return Optimizer::Adam;
  if (name == "adamw") return Optimizer::AdamW;
  throw std::invalid_argument("unknown optimizer '" + name + "' (expected sgd, adam or adamw)");
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be finite and >= 0");
  }
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (log_every < 0) throw std::invalid_argument("log_every must be >= 0");
  if (plateau_window < 0) throw std::invalid_argument("plateau_window must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must be in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
}

namespace {

/// First-order optimizer over flat parameter blocks.
class Stepper {
 public:
  explicit Stepper(const TrainConfig& cfg) : cfg_(cfg) {}

  void add(double* param, const double* grad, Index n) {
    slots_.push_back({param, grad, n, Eigen::VectorXd::Zero(cfg_.optimizer == Optimizer::SGD ? 0 : n),
                      Eigen::VectorXd::Zero(cfg_.optimizer == Optimizer::SGD ? 0 : n)});
  }

  void step() {
    ++t_;
    const double lr = cfg_.learning_rate;
    for (auto& s : slots_) {
      Eigen::Map<Eigen::VectorXd> p(s.param, s.n);
      Eigen::Map<const Eigen::VectorXd> g(s.grad, s.n);
      if (cfg_.optimizer == Optimizer::SGD) {
        p -= lr * g;
        continue;
      }
      s.m = cfg_.beta1 * s.m + (1.0 - cfg_.beta1) * g;
      s.v = cfg_.beta2 * s.v + (1.0 - cfg_.beta2) * g.cwiseAbs2();
      const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
      const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
      if (cfg_.optimizer == Optimizer::AdamW) p -= lr * cfg_.weight_decay * p;
      p.array() -= lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + cfg_.epsilon);
    }
  }

 private:
  struct Slot {
    double* param;
    const double* grad;
    Index n;
    Eigen::VectorXd m, v;
  };
  TrainConfig cfg_;
  std::vector<Slot> slots_;
  int t_ = 0;
};

/// Adds scale * dCE/dD for one sample to G and returns its cross-entropy.
double ce_sample(const EmbeddingStore& store, const Eigen::MatrixXd& D, const Eigen::VectorXd& subject,
                 std::uint32_t target, double scale, Eigen::MatrixXd* G) {
  const Index d = subject.size();
  Eigen::VectorXd s_aug(d + 1);
  s_aug << subject, 1.0;
  const Eigen::VectorXd x = D.transpose() * s_aug;
  Eigen::VectorXd logits = head_logits(store, x);
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  const double loss = lse - logits(target);
  if (G) {
    Eigen::VectorXd p = (logits.array() - lse).exp().matrix();
    p(target) -= 1.0;
    const Eigen::VectorXd gx = store.head_weights.transpose() * p;
    G->noalias() += scale * s_aug * gx.transpose();
  }
  return loss;
}

struct Pair {
  std::size_t relation;
  const Eigen::VectorXd* subject;
  std::uint32_t target;
};

std::vector<Pair> resolve_pairs(const EmbeddingStore& store, const RelationDataset& data) {
  std::vector<Pair> pairs;
  for (std::size_t r = 0; r < data.size(); ++r) {
    if (!store.relations.count(data[r].name)) {
      throw TrainingError("relation '" + data[r].name + "' has no embedding in the store", -1);
    }
    for (const auto& s : data[r].samples) {
      auto subj = store.entities.find(s.subject);
      if (subj == store.entities.end()) throw TrainingError("unknown subject entity '" + s.subject + "'", -1);
      auto obj = store.entities.find(s.object);
      if (obj == store.entities.end()) throw TrainingError("unknown object entity '" + s.object + "'", -1);
      if (subj->second.vector.size() != store.d) {
        throw TrainingError("subject '" + s.subject + "' has dimension " +
                                std::to_string(subj->second.vector.size()) + ", store d is " + std::to_string(store.d),
                            -1);
      }
      pairs.push_back({r, &subj->second.vector, obj->second.first_token_id});
    }
  }
  if (pairs.empty()) throw TrainingError("no training samples", -1);
  return pairs;
}

/// Shared minibatch loop. `batch_step` zeroes and fills the gradients for
/// the given pair indices and returns the mean loss.
template <class BatchStep>
TrainResult run_loop(const TrainConfig& cfg, std::size_t n_pairs, Stepper& opt, BatchStep&& batch_step,
                     const TrainObserver& observer) {
  TrainResult res;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n_pairs - 1);
  std::vector<std::size_t> batch(static_cast<std::size_t>(cfg.batch_size));
  double window_sum = 0.0;
  double prev_window = std::numeric_limits<double>::quiet_NaN();
  for (int it = 1; it <= cfg.iterations; ++it) {
    for (auto& b : batch) b = pick(rng);
    const double loss = batch_step(batch);
    if (!std::isfinite(loss)) {
      throw TrainingError("non-finite loss at iteration " + std::to_string(it), it);
    }
    opt.step();
    res.iterations_run = it;

    bool stop = false;
    if (cfg.plateau_window > 0) {
      window_sum += loss;
      if (it % cfg.plateau_window == 0) {
        const double mean = window_sum / cfg.plateau_window;
        if (std::isfinite(prev_window) && std::abs(prev_window - mean) < cfg.plateau_tolerance) stop = true;
        prev_window = mean;
        window_sum = 0.0;
      }
    }
    const bool last = stop || it == cfg.iterations;
    if (last || (cfg.log_every > 0 && it % cfg.log_every == 0)) {
      LossRecord rec{it, loss, {}};
      if (observer) observer(rec);
      res.losses.push_back(std::move(rec));
    }
    if (stop) {
      res.stopped_early = it < cfg.iterations;
      break;
    }
  }
  return res;
}

}  // namespace

TrainResult train(TensorNetworkModel& model, const EmbeddingStore& store, const RelationDataset& data,
                  const TrainConfig& cfg, const TrainObserver& observer) {
  cfg.validate();
  model.config.validate();
  if (model.config.d != store.d) {
    throw TrainingError("model d = " + std::to_string(model.config.d) + " but store d = " + std::to_string(store.d),
                        -1);
  }
  const auto pairs = resolve_pairs(store, data);

  std::map<std::string, Tensor> grads;
  for (const auto& [name, t] : model.parameters) grads.emplace(name, Tensor(t.legs()));
  Stepper opt(cfg);
  for (auto& [name, t] : model.parameters) opt.add(t.data().data(), grads.at(name).data().data(), t.size());

  const double inv_b = 1.0 / cfg.batch_size;
  auto step = [&](const std::vector<std::size_t>& batch) {
    for (auto& [name, g] : grads) g.data().setZero();
    std::map<std::size_t, std::vector<std::size_t>> by_relation;
    for (auto i : batch) by_relation[pairs[i].relation].push_back(i);
    double loss = 0.0;
    for (const auto& [r, members] : by_relation) {
      const Eigen::VectorXd& v = store.relation(data[r].name);
      const Eigen::MatrixXd D = materialize_decoder(model, v).augmented();
      Eigen::MatrixXd G = Eigen::MatrixXd::Zero(D.rows(), D.cols());
      for (auto i : members) loss += ce_sample(store, D, *pairs[i].subject, pairs[i].target, inv_b, &G) * inv_b;
      accumulate_decoder_gradient(model, v, G, grads);
    }
    return loss;
  };
  return run_loop(cfg, pairs.size(), opt, step, observer);
}

double dataset_loss(const TensorNetworkModel& model, const EmbeddingStore& store, const RelationDataset& data) {
  const auto pairs = resolve_pairs(store, data);
  std::map<std::size_t, Eigen::MatrixXd> decoders;
  double loss = 0.0;
  for (const auto& p : pairs) {
    auto it = decoders.find(p.relation);
    if (it == decoders.end()) {
      it = decoders.emplace(p.relation, materialize_decoder(model, store.relation(data[p.relation].name)).augmented())
               .first;
    }
    loss += ce_sample(store, it->second, *p.subject, p.target, 0.0, nullptr);
  }
  return loss / static_cast<double>(pairs.size());
}

namespace {

/// Relation names need no store embedding when a decoder is fitted to one
/// relation; only the entities must resolve.
std::vector<Pair> resolve_entities(const EmbeddingStore& store, const RelationRecord& relation) {
  std::vector<Pair> pairs;
  for (const auto& s : relation.samples) {
    auto subj = store.entities.find(s.subject);
    if (subj == store.entities.end()) throw TrainingError("unknown subject entity '" + s.subject + "'", -1);
    auto obj = store.entities.find(s.object);
    if (obj == store.entities.end()) throw TrainingError("unknown object entity '" + s.object + "'", -1);
    pairs.push_back({0, &subj->second.vector, obj->second.first_token_id});
  }
  if (pairs.empty()) throw TrainingError("relation '" + relation.name + "' has no samples", -1);
  return pairs;
}

}  // namespace

AffineDecoder train_affine_decoder(const RelationRecord& relation, const EmbeddingStore& store,
                                   const TrainConfig& cfg, double init_scale) {
  cfg.validate();
  const auto pairs = resolve_entities(store, relation);
  const Index d = store.d;
  std::mt19937_64 init_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, init_scale / std::sqrt(static_cast<double>(d)));
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(d + 1, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) D(i, j) = normal(init_rng);
  }
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d + 1, d);
  Stepper opt(cfg);
  opt.add(D.data(), G.data(), D.size());
  const double inv_b = 1.0 / cfg.batch_size;
  auto step = [&](const std::vector<std::size_t>& batch) {
    G.setZero();
    double loss = 0.0;
    for (auto i : batch) loss += ce_sample(store, D, *pairs[i].subject, pairs[i].target, inv_b, &G) * inv_b;
    return loss;
  };
  run_loop(cfg, pairs.size(), opt, step, {});
  return AffineDecoder::from_augmented(D);
}

std::int64_t low_rank_param_count(Index d, Index rank) { return 2 * d * rank + d; }

LowRankDecoder train_low_rank_decoder(const RelationRecord& relation, Index rank, const EmbeddingStore& store,
                                      const TrainConfig& cfg) {
  cfg.validate();
  const Index d = store.d;
  if (rank < 1 || rank > d) {
    throw std::invalid_argument("rank must be in [1, d = " + std::to_string(d) + "], got " + std::to_string(rank));
  }
  const auto pairs = resolve_entities(store, relation);
  std::mt19937_64 init_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const double scale = std::pow(static_cast<double>(d), -0.25) / std::pow(static_cast<double>(rank), 0.25);
  std::normal_distribution<double> normal(0.0, scale);
  LowRankDecoder dec;
  dec.U.resize(d, rank);
  dec.V.resize(d, rank);
  for (Index i = 0; i < dec.U.size(); ++i) dec.U.data()[i] = normal(init_rng);
  for (Index i = 0; i < dec.V.size(); ++i) dec.V.data()[i] = normal(init_rng);
  dec.b = Eigen::VectorXd::Zero(d);

  Eigen::MatrixXd gU(d, rank), gV(d, rank);
  Eigen::VectorXd gb(d);
  Stepper opt(cfg);
  opt.add(dec.U.data(), gU.data(), gU.size());
  opt.add(dec.V.data(), gV.data(), gV.size());
  opt.add(dec.b.data(), gb.data(), gb.size());
  const double inv_b = 1.0 / cfg.batch_size;
  auto step = [&](const std::vector<std::size_t>& batch) {
    const Eigen::MatrixXd D = dec.to_affine().augmented();
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d + 1, d);
    double loss = 0.0;
    for (auto i : batch) loss += ce_sample(store, D, *pairs[i].subject, pairs[i].target, inv_b, &G) * inv_b;
    const Eigen::MatrixXd gW = G.topRows(d).transpose();
    gU.noalias() = gW * dec.V;
    gV.noalias() = gW.transpose() * dec.U;
    gb = G.row(d).transpose();
    return loss;
  };
  run_loop(cfg, pairs.size(), opt, step, {});
  return dec;
}

AffineDecoder train_low_rank_baseline(const RelationRecord& relation, Index rank, const EmbeddingStore& store,
                                      const TrainConfig& cfg) {
  return train_low_rank_decoder(relation, rank, store, cfg).to_affine();
}

void GridSpec::validate() const {
  if (architectures.empty() || relation_dims.empty() || subject_object_dims.empty() || embedder.empty()) {
    throw std::invalid_argument("grid lists must be nonempty");
  }
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  train.validate();
}

std::vector<ArchitectureConfig> GridSpec::configs(Index d) const {
  std::vector<ArchitectureConfig> out;
  for (auto kind : architectures) {
    for (Index dr : relation_dims) {
      for (Index dso : subject_object_dims) {
        for (bool emb : embedder) {
          ArchitectureConfig c;
          c.kind = kind;
          c.d = d;
          c.relation_dim = dr;
          c.subject_dim = dso;
          c.object_dim = dso;
          if (kind == Architecture::Triangle) c.x_dim = c.y_dim = c.z_dim = triangle_inner_dim;
          c.use_relation_embedder = emb;
          out.push_back(c);
        }
      }
    }
  }
  return out;
}

std::vector<GridRow> grid_search(const GridSpec& grid, const EmbeddingStore& store, const RelationDataset& train_data,
                                 const RelationDataset* test_data) {
  grid.validate();
  const auto configs = grid.configs(store.d);
  std::vector<GridRow> rows(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      GridRow& row = rows[i];
      row.config = configs[i];
      row.seed = grid.train.seed;
      try {
        configs[i].validate();
        row.params = param_count(configs[i]);
        TensorNetworkModel model = init_model(configs[i], grid.model_seed);
        train(model, store, train_data, grid.train);
        row.mean_faithfulness = mean_score(evaluate_model(model, train_data, store));
        if (test_data) row.mean_test_faithfulness = mean_score(evaluate_model(model, *test_data, store));
      } catch (const std::exception& e) {
        row.status = e.what();
        row.mean_faithfulness = 0.0;
      }
    }
  };
  const int n_threads = std::min<int>(grid.jobs, static_cast<int>(configs.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const GridRow& a, const GridRow& b) { return a.params.actual() < b.params.actual(); });
  return rows;
}

namespace {

std::string f6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string grid_csv(const std::vector<GridRow>& rows) {
  std::ostringstream out;
  out << "arch,d_r',d_s',d_o',embedder,param_count_paper_formula,param_count_actual,mean_faithfulness,seed,"
         "mean_test_faithfulness,status\n";
  for (const auto& r : rows) {
    out << to_string(r.config.kind) << ',' << r.config.relation_dim << ',' << r.config.subject_dim << ','
        << r.config.object_dim << ',' << (r.config.use_relation_embedder ? "on" : "off") << ','
        << r.params.formula << ',' << r.params.actual() << ',' << f6(r.mean_faithfulness) << ',' << r.seed
        << ',' << (r.mean_test_faithfulness ? f6(*r.mean_test_faithfulness) : std::string()) << ','
        << csv_field(r.status) << '\n';
  }
  return out.str();
}

std::vector<LowRankRow> low_rank_sweep(const std::vector<Index>& ranks, const EmbeddingStore& store,
                                       const RelationDataset& train_data, const TrainConfig& cfg,
                                       const RelationDataset* test_data) {
  std::vector<LowRankRow> rows;
  for (Index rank : ranks) {
    LowRankRow row;
    row.rank = rank;
    row.params_per_relation = low_rank_param_count(store.d, rank);
    row.total_params = row.params_per_relation * static_cast<std::int64_t>(train_data.size());
    std::vector<FaithfulnessReport> train_reports, test_reports;
    for (const auto& rel : train_data) {
      const AffineDecoder dec = train_low_rank_baseline(rel, rank, store, cfg);
      train_reports.push_back(faithfulness(dec, rel, store));
      if (test_data) test_reports.push_back(faithfulness(dec, find_relation(*test_data, rel.name), store));
    }
    row.mean_faithfulness = mean_score(train_reports);
    if (test_data) row.mean_test_faithfulness = mean_score(test_reports);
    rows.push_back(row);
  }
  return rows;
}

std::string low_rank_csv(const std::vector<LowRankRow>& rows) {
  std::ostringstream out;
  out << "rank,params_per_relation,total_params,mean_faithfulness,mean_test_faithfulness\n";
  for (const auto& r : rows) {
    out << r.rank << ',' << r.params_per_relation << ',' << r.total_params << ',' << f6(r.mean_faithfulness) << ','
        << (r.mean_test_faithfulness ? f6(*r.mean_test_faithfulness) : std::string()) << '\n';
  }
  return out.str();
}

}  // namespace relkit
