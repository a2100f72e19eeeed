#pragma once

#include "relkit/dataset.hpp"
#include "relkit/model.hpp"
#include "relkit/store.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace relkit {

struct FaithfulnessReport {
  std::string relation;
  std::string decoder_id;
  std::size_t n_samples = 0;
  std::size_t n_correct = 0;

  double score() const {
    return n_samples == 0 ? 0.0 : static_cast<double>(n_correct) / static_cast<double>(n_samples);
  }
};

/// Top-1 first-token accuracy of `dec` on the relation's samples.
FaithfulnessReport faithfulness(const AffineDecoder& dec, const RelationRecord& relation, const EmbeddingStore& store,
                                std::string decoder_id = {});

/// Materializes the model's decoder for every relation and scores it on
/// that relation.
std::vector<FaithfulnessReport> evaluate_model(const TensorNetworkModel& model, const RelationDataset& data,
                                               const EmbeddingStore& store);

double mean_score(const std::vector<FaithfulnessReport>& reports);

/// k x k scores: row j is the decoder of relation j, column l the relation
/// it is evaluated on.
struct CrossEvalMatrix {
  std::vector<std::string> relations;
  Eigen::MatrixXd scores;
  /// Display order (a permutation of 0..k-1); identity unless reordered.
  std::vector<std::size_t> order;

  std::size_t size() const { return relations.size(); }
  /// Rows and columns permuted into display order.
  CrossEvalMatrix reordered() const;
};

using NamedDecoder = std::pair<std::string, AffineDecoder>;

CrossEvalMatrix cross_evaluate(const std::vector<NamedDecoder>& decoders, const RelationDataset& data,
                               const EmbeddingStore& store);

/// Leaf order of an average-linkage clustering of the matrix rows
/// (Euclidean distance), ties broken by lower index.
std::vector<std::size_t> cluster_order(const Eigen::MatrixXd& scores);

/// Header row "relation,<names>", then one row per decoder.
std::string cross_eval_csv(const CrossEvalMatrix& m);
void write_cross_eval_csv(const CrossEvalMatrix& m, const std::filesystem::path& path);

/// Colour ramp from #f7fbff (0) to #08306b (1), linear in RGB, clamped.
std::string heatmap_color(double value);
/// Two-decimal cell annotation.
std::string format_score(double value);
std::string cross_eval_svg(const CrossEvalMatrix& m);
void write_cross_eval_svg(const CrossEvalMatrix& m, const std::filesystem::path& path);

/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(const std::string& s);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace relkit
