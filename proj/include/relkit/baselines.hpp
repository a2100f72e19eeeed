#pragma once

#include "relkit/dataset.hpp"
#include "relkit/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace relkit {

/// Deterministic map from subject vectors to object vectors.
using TeacherFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Affine estimate from first-order Taylor expansions at the first
/// n_examples subjects: W_i by central differences with per-coordinate step
/// step * (1 + |s_ij|), b_i = F(s_i) - W_i s_i; returns the means.
AffineDecoder jacobian_lre(const TeacherFunction& teacher, const std::vector<Eigen::VectorXd>& subjects,
                           int n_examples = 8, double step = 1e-4);

/// Indices of the first n subjects after a seeded shuffle of 0..count-1.
std::vector<std::size_t> choose_subjects(std::size_t count, std::size_t n, std::uint64_t seed);

struct MajorityGuess {
  std::string object;
  double faithfulness = 0.0;
};

/// Most frequent object (ties to the lexicographically smallest) and its
/// frequency.
MajorityGuess majority_baseline(const RelationRecord& relation);

}  // namespace relkit
