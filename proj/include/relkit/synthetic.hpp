#pragma once

#include "relkit/dataset.hpp"
#include "relkit/model.hpp"
#include "relkit/store.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace relkit {

enum class TeacherKind { MathRamp, Orthogonal, SharedProperty };

std::string to_string(TeacherKind kind);

/// Parameters of the synthetic stores. Random directions are Gaussian and
/// rescaled to exactly the stated norm.
struct SyntheticTeacherSpec {
  TeacherKind kind = TeacherKind::MathRamp;
  Index d = 64;
  std::uint64_t seed = 0;
  /// Per-entity jitter: sigma times a Gaussian vector of unit expected norm.
  double sigma = 0.0;

  // MathRamp: E(n) = n u + w (+ jitter), v(plus X) = q0 + X q1, v(minus X) = q0 - X q1.
  int number_min = 0;
  int number_max = 200;
  int vocab_min = -100;
  int vocab_max = 300;
  double ramp_step_norm = 0.1;     // |u|, the distance between consecutive numbers
  double ramp_offset_norm = 5.0;   // |w|
  double relation_base_norm = 1.0; // |q0|
  double relation_step_norm = 0.01;// |q1|

  // Orthogonal / SharedProperty.
  int n_relations = 8;                 // Orthogonal
  std::vector<int> group_sizes;        // SharedProperty: relations per group
  int samples_per_relation = 96;
  double subject_norm = 1.0;   // expected norm of subject vectors
  double object_gain = 4.0;    // operator scale of the ground-truth maps
  double offset_norm = 2.0;    // |c_R|

  void validate() const;
};

/// MathRamp store plus the directions it was built from.
struct MathRampStore {
  EmbeddingStore store;
  Eigen::VectorXd step;           // u
  Eigen::VectorXd offset;         // w
  Eigen::VectorXd relation_base;  // q0
  Eigen::VectorXd relation_step;  // q1
  int vocab_min = 0;

  Eigen::VectorXd relation_vector(int sign, int offset_value) const;
  /// Exact decoder for "number plus/minus X" when sigma = 0: W = I, b = +-X u.
  AffineDecoder ground_truth(int sign, int offset_value) const;
  std::uint32_t token(int number) const { return static_cast<std::uint32_t>(number - vocab_min); }
};

/// One vocabulary token per number in [vocab_min, vocab_max]; head row for
/// token m is 2 E(m) with bias -|E(m)|^2, so decoding is nearest-neighbour
/// over number embeddings. Relations: the 50 math dataset relations.
MathRampStore gen_math_store(const SyntheticTeacherSpec& spec);

/// Synthetic store with ground-truth affine maps per relation.
struct SyntheticBundle {
  EmbeddingStore store;
  RelationDataset dataset;
  std::map<std::string, AffineDecoder> ground_truth;
  std::map<std::string, int> group;  // relation name -> group index
};

/// K relations with disjoint subject and object entities and independent
/// ground-truth maps; object = A_R subject + c_R. Every entity is a token and
/// the head is nearest-neighbour over all entity embeddings.
SyntheticBundle gen_orthogonal_store(const SyntheticTeacherSpec& spec);

/// Relations grouped so that members of a group share one ground-truth map
/// while drawing their own subjects. Singleton groups give exactly
/// gen_orthogonal_store's output.
SyntheticBundle gen_shared_property_store(const SyntheticTeacherSpec& spec);

/// Parses "2x3" (2 groups of 3) or a comma list "3,2,4" of group sizes.
std::vector<int> parse_group_sizes(const std::string& text);

}  // namespace relkit
