#pragma once

#include "relkit/network.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace relkit {

enum class Architecture { Simple, Triangle };

std::string to_string(Architecture kind);
Architecture architecture_from_string(const std::string& name);

/// Shape of a tensor-network decoder model. `d` is the embedding width;
/// subject/relation/object_dim are the inner (bond) dims d_s', d_r', d_o';
/// x/y/z_dim size the triangle's inner bonds.
struct ArchitectureConfig {
  Architecture kind = Architecture::Simple;
  Index d = 64;
  Index subject_dim = 32;
  Index relation_dim = 4;
  Index object_dim = 32;
  Index x_dim = 0;
  Index y_dim = 0;
  Index z_dim = 0;
  bool use_relation_embedder = false;
  /// Output widths of the embedder's dense layers; empty means (d, d, d).
  /// The last width must equal d since it feeds P2.
  std::vector<Index> embedder_widths;
  /// Multiplier on the per-tensor initialization scale.
  double init_gain = 1.0;

  std::vector<Index> resolved_embedder_widths() const;
  void validate() const;

  friend bool operator==(const ArchitectureConfig&, const ArchitectureConfig&) = default;
};

/// Parameter counts, split so that the published formula can be compared
/// against what is actually stored.
struct ParamCount {
  /// d(d_s' + d_r' + d_o') + c * d_s' d_r' d_o' with c = 1 (Simple) or 3 (Triangle).
  std::int64_t formula = 0;
  std::int64_t projections = 0;  // without the bias row of P1
  std::int64_t cores = 0;
  std::int64_t bias_augmentation = 0;
  std::int64_t embedder = 0;

  std::int64_t actual() const { return projections + cores + bias_augmentation + embedder; }
};

ParamCount param_count(const ArchitectureConfig& config);

/// Parameters of `n_relations` independent dense d x d decoders.
std::int64_t stacked_dense_param_count(std::int64_t n_relations, std::int64_t d);

/// W x + b with W of size d x d.
struct AffineDecoder {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;

  Index dim() const { return b.size(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& subject) const;
  /// (d+1) x d matrix D with x = D^T [s; 1]: rows 0..d-1 hold W^T, row d holds b.
  Eigen::MatrixXd augmented() const;
  static AffineDecoder from_augmented(const Eigen::MatrixXd& D);
};

Eigen::VectorXd apply_decoder(const AffineDecoder& dec, const Eigen::VectorXd& subject);

/// Trainable tensor-network decoder. Parameter names: P1, P2, P3 and T0
/// (Simple) or T1, T2, T3 (Triangle); embedder layers as embedder.<i>.weight
/// (legs out, in) and embedder.<i>.bias (leg out).
///
/// Leg labels: P1 (s, s'), P2 (r, r'), P3 (o, o'), T0 (s', r', o'),
/// T1 (s', y, z), T2 (x, r', z), T3 (x, y, o'). P1's s leg has d+1 entries,
/// the last one multiplying the constant 1 appended to subjects.
struct TensorNetworkModel {
  ArchitectureConfig config;
  std::map<std::string, Tensor> parameters;

  std::int64_t stored_scalars() const;
  const Tensor& param(const std::string& name) const { return parameters.at(name); }
};

/// Allocates every parameter tensor of `config` filled with zeros.
TensorNetworkModel allocate_model(const ArchitectureConfig& config);

/// Gaussian initialization, deterministic per seed: each tensor is scaled by
/// init_gain / sqrt(dim of its first leg); embedder weights use their fan-in
/// and embedder biases start at zero.
TensorNetworkModel init_model(const ArchitectureConfig& config, std::uint64_t seed);

/// Activations of the relation embedder, kept for backpropagation.
struct EmbedderTrace {
  std::vector<Eigen::VectorXd> inputs;       // input to each layer
  std::vector<Eigen::VectorXd> pre_activations;
  Eigen::VectorXd output;
};

EmbedderTrace embed_relation(const TensorNetworkModel& model, const Eigen::VectorXd& relation);

/// Network whose contraction is the augmented decoder D (legs s, o) for the
/// given relation-leg input (already passed through the embedder, if any).
/// The input vector is the node "rel" bonded to P2's r leg.
NetworkSpec decoder_network(const TensorNetworkModel& model, const Eigen::VectorXd& relation_input);

AffineDecoder materialize_decoder(const TensorNetworkModel& model, const Eigen::VectorXd& relation);

/// Gradients of a scalar loss with respect to all parameters, given the
/// gradient G_D with respect to the augmented decoder of one relation.
void accumulate_decoder_gradient(const TensorNetworkModel& model, const Eigen::VectorXd& relation,
                                 const Eigen::MatrixXd& grad_augmented,
                                 std::map<std::string, Tensor>& grads);

void save_model(const TensorNetworkModel& model, const std::filesystem::path& path);
TensorNetworkModel load_model(const std::filesystem::path& path);

}  // namespace relkit
