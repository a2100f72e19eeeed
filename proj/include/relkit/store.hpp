#pragma once

#include "relkit/binary_io.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace relkit {

struct Entity {
  Eigen::VectorXd vector;
  std::uint32_t first_token_id = 0;

  friend bool operator==(const Entity& a, const Entity& b) {
    return a.first_token_id == b.first_token_id && a.vector.size() == b.vector.size() && a.vector == b.vector;
  }
};

/// Frozen stand-in for a language model: subject/object representations,
/// relation embeddings and a linear output head over V tokens.
struct EmbeddingStore {
  Eigen::Index d = 0;
  std::uint32_t layer_index = 0;
  Eigen::MatrixXd head_weights;  // V x d
  Eigen::VectorXd head_bias;     // V, zeros when the head has no bias
  std::map<std::string, Entity> entities;
  std::map<std::string, Eigen::VectorXd> relations;

  Eigen::Index vocab_size() const { return head_weights.rows(); }

  const Entity& entity(const std::string& name) const;
  const Eigen::VectorXd& relation(const std::string& name) const;

  /// Throws StoreError::Kind::Invalid when a store invariant is violated.
  void validate() const;

  friend bool operator==(const EmbeddingStore&, const EmbeddingStore&);
};

/// Head logits head_weights * x + head_bias.
Eigen::VectorXd head_logits(const EmbeddingStore& store, const Eigen::VectorXd& x);

/// Argmax of the head logits; ties go to the lowest token id.
std::uint32_t head_decode(const EmbeddingStore& store, const Eigen::VectorXd& x);

/// Replaces every relation vector with an independent standard-normal
/// vector. Relations are visited in name order, so the result depends only
/// on the seed and the set of names.
EmbeddingStore randomize_relation_embeddings(const EmbeddingStore& store, std::uint64_t seed);

/// Replaces every entity vector with an independent standard-normal vector;
/// token ids and the head are kept.
EmbeddingStore randomize_entity_embeddings(const EmbeddingStore& store, std::uint64_t seed);

/// Little-endian LREC container with section tag 0:
///   "LREC" u32 version=1 u32 tag=0 u32 d u32 layer_index u32 V u8 has_head_bias
///   f64[V*d] head (row-major) [f64[V] bias]
///   u32 n_entities {u16 len, name, u32 first_token_id, f64[d]}*
///   u32 n_relations {u16 len, name, f64[d]}*
void save_store(const EmbeddingStore& store, const std::filesystem::path& path);
EmbeddingStore load_store(const std::filesystem::path& path);

}  // namespace relkit
