#include "relkit/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

namespace relkit {

namespace {

Eigen::VectorXd call(const TeacherFunction& teacher, const Eigen::VectorXd& s, Index d) {
  Eigen::VectorXd y = teacher(s);
  if (y.size() != d) {
    throw std::invalid_argument("teacher returned dimension " + std::to_string(y.size()) + ", expected " +
                                std::to_string(d));
  }
  if (!y.allFinite()) throw std::domain_error("teacher produced a non-finite output");
  return y;
}

}  // namespace

AffineDecoder jacobian_lre(const TeacherFunction& teacher, const std::vector<Eigen::VectorXd>& subjects,
                           int n_examples, double step) {
  if (n_examples < 1) throw std::invalid_argument("n_examples must be >= 1");
  if (static_cast<std::size_t>(n_examples) > subjects.size()) {
    throw std::invalid_argument("n_examples = " + std::to_string(n_examples) + " exceeds the " +
                                std::to_string(subjects.size()) + " subjects given");
  }
  if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
  const Index d = subjects.front().size();
  AffineDecoder out{Eigen::MatrixXd::Zero(d, d), Eigen::VectorXd::Zero(d)};
  for (int i = 0; i < n_examples; ++i) {
    const Eigen::VectorXd& s = subjects[static_cast<std::size_t>(i)];
    if (s.size() != d) {
      throw std::invalid_argument("subject " + std::to_string(i) + " has dimension " + std::to_string(s.size()) +
                                  ", expected " + std::to_string(d));
    }
    Eigen::MatrixXd W(d, d);
    for (Index j = 0; j < d; ++j) {
      const double h = step * (1.0 + std::abs(s(j)));
      Eigen::VectorXd plus = s, minus = s;
      plus(j) += h;
      minus(j) -= h;
      W.col(j) = (call(teacher, plus, d) - call(teacher, minus, d)) / (2.0 * h);
    }
    out.W += W;
    out.b += call(teacher, s, d) - W * s;
  }
  out.W /= n_examples;
  out.b /= n_examples;
  return out;
}

std::vector<std::size_t> choose_subjects(std::size_t count, std::size_t n, std::uint64_t seed) {
  if (n > count) throw std::invalid_argument("cannot choose " + std::to_string(n) + " of " + std::to_string(count));
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(n);
  return idx;
}

MajorityGuess majority_baseline(const RelationRecord& relation) {
  if (relation.samples.empty()) throw std::invalid_argument("relation '" + relation.name + "' has no samples");
  std::map<std::string, std::size_t> counts;
  for (const auto& s : relation.samples) ++counts[s.object];
  // std::map iterates in lexicographic order, so the first maximum wins ties.
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return {best->first, static_cast<double>(best->second) / static_cast<double>(relation.samples.size())};
}

}  // namespace relkit
