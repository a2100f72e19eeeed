#pragma once

#include "relkit/dataset.hpp"
#include "relkit/model.hpp"
#include "relkit/store.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace relkit {

enum class Optimizer { SGD, Adam, AdamW };

std::string to_string(Optimizer opt);
Optimizer optimizer_from_string(const std::string& name);

struct TrainConfig {
  Optimizer optimizer = Optimizer::SGD;
  double learning_rate = 1e-3;
  int batch_size = 16;
  int iterations = 15000;
  std::uint64_t seed = 0;
  /// Loss is recorded every log_every iterations (and at the last one).
  int log_every = 100;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;  // AdamW only
  /// Early stop when the mean loss of two consecutive windows of this many
  /// iterations differs by less than plateau_tolerance. 0 disables.
  int plateau_window = 500;
  double plateau_tolerance = 1e-6;

  void validate() const;
};

struct LossRecord {
  int iteration = 0;
  double loss = 0.0;
  std::map<std::string, double> faithfulness;  // optional snapshot
};

/// Raised for unresolved names before training (iteration -1) and for a
/// non-finite loss (the iteration where it occurred, 1-based).
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, int iteration) : std::runtime_error(what), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

struct TrainResult {
  std::vector<LossRecord> losses;
  int iterations_run = 0;
  bool stopped_early = false;
};

/// Called after each logged iteration; may fill the faithfulness snapshot.
using TrainObserver = std::function<void(LossRecord&)>;

/// Mean cross-entropy over head logits of minibatches drawn uniformly with
/// replacement from all (relation, sample) pairs. Updates `model` in place;
/// the store is only read.
TrainResult train(TensorNetworkModel& model, const EmbeddingStore& store, const RelationDataset& data,
                  const TrainConfig& cfg, const TrainObserver& observer = {});

/// Mean cross-entropy of `model` over every sample of `data`.
double dataset_loss(const TensorNetworkModel& model, const EmbeddingStore& store, const RelationDataset& data);

/// Per-relation full affine decoder trained with the same loss. W starts
/// at init_scale/sqrt(d) Gaussian entries (seeded by cfg.seed), b at zero.
AffineDecoder train_affine_decoder(const RelationRecord& relation, const EmbeddingStore& store,
                                   const TrainConfig& cfg, double init_scale = 1.0);

/// W = U V^T with U, V of size d x rank, plus a free bias.
struct LowRankDecoder {
  Eigen::MatrixXd U;
  Eigen::MatrixXd V;
  Eigen::VectorXd b;

  Index rank() const { return U.cols(); }
  AffineDecoder to_affine() const { return {U * V.transpose(), b}; }
  std::int64_t stored_scalars() const { return U.size() + V.size() + b.size(); }
};

std::int64_t low_rank_param_count(Index d, Index rank);

LowRankDecoder train_low_rank_decoder(const RelationRecord& relation, Index rank, const EmbeddingStore& store,
                                      const TrainConfig& cfg);
AffineDecoder train_low_rank_baseline(const RelationRecord& relation, Index rank, const EmbeddingStore& store,
                                      const TrainConfig& cfg);

struct GridSpec {
  std::vector<Architecture> architectures{Architecture::Simple, Architecture::Triangle};
  std::vector<Index> relation_dims{2, 4, 6, 8, 30, 100};
  std::vector<Index> subject_object_dims{10, 50, 100, 300};
  std::vector<bool> embedder{false, true};
  Index triangle_inner_dim = 50;  // d_x = d_y = d_z
  std::uint64_t model_seed = 0;
  TrainConfig train;
  int jobs = 1;

  void validate() const;
  /// Cartesian product in the order architecture, d_r', d_s', embedder.
  std::vector<ArchitectureConfig> configs(Index d) const;
};

struct GridRow {
  ArchitectureConfig config;
  ParamCount params;
  double mean_faithfulness = 0.0;       // on the training relations
  std::optional<double> mean_test_faithfulness;
  std::uint64_t seed = 0;
  std::string status = "ok";            // error message when training failed
};

/// Trains every configuration independently; rows are sorted by actual
/// parameter count (stable for ties). A failing configuration yields a row
/// with its error in `status`.
std::vector<GridRow> grid_search(const GridSpec& grid, const EmbeddingStore& store, const RelationDataset& train_data,
                                 const RelationDataset* test_data = nullptr);

std::string grid_csv(const std::vector<GridRow>& rows);

struct LowRankRow {
  Index rank = 0;
  std::int64_t params_per_relation = 0;
  std::int64_t total_params = 0;
  double mean_faithfulness = 0.0;
  std::optional<double> mean_test_faithfulness;
};

/// One low-rank decoder per relation for each rank. When `test_data` is
/// given it must hold the same relation names.
std::vector<LowRankRow> low_rank_sweep(const std::vector<Index>& ranks, const EmbeddingStore& store,
                                       const RelationDataset& train_data, const TrainConfig& cfg,
                                       const RelationDataset* test_data = nullptr);

std::string low_rank_csv(const std::vector<LowRankRow>& rows);

}  // namespace relkit
