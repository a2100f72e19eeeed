#include "relkit/evaluation.hpp"
#include "relkit/synthetic.hpp"
#include "relkit/training.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>

namespace relkit {
namespace {

SyntheticBundle orthogonal(std::uint64_t seed, int k) {
  SyntheticTeacherSpec s;
  s.kind = TeacherKind::Orthogonal;
  s.d = 16;
  s.seed = seed;
  s.n_relations = k;
  s.samples_per_relation = 20;
  return gen_orthogonal_store(s);
}

TEST(Faithfulness, GroundTruthIsExact) {
  SyntheticTeacherSpec spec;
  spec.seed = 2;
  const MathRampStore m = gen_math_store(spec);
  const RelationDataset data = generate_math_dataset();
  const FaithfulnessReport r = faithfulness(m.ground_truth(-1, 50), find_relation(data, "number minus 50"), m.store, "gt");
  EXPECT_EQ(r.n_samples, 151u);
  EXPECT_EQ(r.n_correct, 151u);
  EXPECT_EQ(r.score(), 1.0);
  EXPECT_EQ(r.decoder_id, "gt");
  EXPECT_EQ(r.relation, "number minus 50");
}

TEST(Faithfulness, ZeroDecoderPredictsTieBreakToken) {
  const SyntheticBundle b = orthogonal(1, 1);
  EmbeddingStore store = b.store;
  store.head_bias.setZero();
  const AffineDecoder zero{Eigen::MatrixXd::Zero(16, 16), Eigen::VectorXd::Zero(16)};
  RelationRecord rel = b.dataset[0];
  std::string token0;
  for (const auto& [name, e] : store.entities) {
    if (e.first_token_id == 0) token0 = name;
  }
  rel.samples[0].object = token0;
  rel.samples[1].object = token0;
  const FaithfulnessReport r = faithfulness(zero, rel, store);
  EXPECT_EQ(r.n_correct, 2u);
  EXPECT_DOUBLE_EQ(r.score(), 2.0 / 20.0);
}

TEST(Faithfulness, MatchesHandLoop) {
  const SyntheticBundle b = orthogonal(3, 2);
  TrainConfig cfg;
  cfg.optimizer = Optimizer::Adam;
  cfg.learning_rate = 0.01;
  cfg.iterations = 300;
  const AffineDecoder dec = train_low_rank_baseline(b.dataset[0], 3, b.store, cfg);
  for (const auto& rel : b.dataset) {
    std::size_t hits = 0;
    for (const auto& s : rel.samples) {
      const Eigen::VectorXd x = dec.W * b.store.entity(s.subject).vector + dec.b;
      const Eigen::VectorXd logits = b.store.head_weights * x + b.store.head_bias;
      Index best = 0;
      for (Index t = 1; t < logits.size(); ++t) {
        if (logits(t) > logits(best)) best = t;
      }
      if (static_cast<std::uint32_t>(best) == b.store.entity(s.object).first_token_id) ++hits;
    }
    EXPECT_EQ(faithfulness(dec, rel, b.store).n_correct, hits);
  }
}

TEST(Faithfulness, PermutationAndLogitScaleInvariant) {
  const SyntheticBundle b = orthogonal(4, 1);
  TrainConfig cfg;
  cfg.iterations = 50;
  const AffineDecoder dec = train_affine_decoder(b.dataset[0], b.store, cfg);
  const FaithfulnessReport base = faithfulness(dec, b.dataset[0], b.store);
  RelationRecord shuffled = b.dataset[0];
  std::mt19937_64 rng(1);
  std::shuffle(shuffled.samples.begin(), shuffled.samples.end(), rng);
  EXPECT_EQ(faithfulness(dec, shuffled, b.store).n_correct, base.n_correct);
  EmbeddingStore scaled = b.store;
  scaled.head_weights *= 3.0;
  scaled.head_bias *= 3.0;
  EXPECT_EQ(faithfulness(dec, b.dataset[0], scaled).n_correct, base.n_correct);
}

TEST(Faithfulness, UnresolvedEntity) {
  const SyntheticBundle b = orthogonal(5, 1);
  RelationRecord rel = b.dataset[0];
  rel.samples[0].object = "ghost";
  EXPECT_ANY_THROW(faithfulness(b.ground_truth.at(rel.name), rel, b.store));
}

std::vector<NamedDecoder> truths(const SyntheticBundle& b) {
  std::vector<NamedDecoder> out;
  for (const auto& [name, dec] : b.ground_truth) out.push_back({name, dec});
  return out;
}

TEST(CrossEval, DiagonalIsFaithfulness) {
  const SyntheticBundle b = orthogonal(6, 3);
  const CrossEvalMatrix m = cross_evaluate(truths(b), b.dataset, b.store);
  ASSERT_EQ(m.size(), 3u);
  for (std::size_t j = 0; j < 3; ++j) {
    const auto& rel = find_relation(b.dataset, m.relations[j]);
    EXPECT_EQ(m.scores(static_cast<Index>(j), static_cast<Index>(j)),
              faithfulness(b.ground_truth.at(rel.name), rel, b.store).score());
    for (std::size_t l = 0; l < 3; ++l) {
      const auto& other = find_relation(b.dataset, m.relations[l]);
      EXPECT_EQ(m.scores(static_cast<Index>(j), static_cast<Index>(l)),
                faithfulness(b.ground_truth.at(rel.name), other, b.store).score());
    }
  }
}

TEST(CrossEval, SingleRelation) {
  const SyntheticBundle b = orthogonal(7, 1);
  const CrossEvalMatrix m = cross_evaluate(truths(b), b.dataset, b.store);
  ASSERT_EQ(m.scores.rows(), 1);
  EXPECT_EQ(m.scores(0, 0), faithfulness(b.ground_truth.begin()->second, b.dataset[0], b.store).score());
}

TEST(CrossEval, NameMismatch) {
  const SyntheticBundle b = orthogonal(8, 2);
  auto decs = truths(b);
  decs[0].first = "other";
  EXPECT_THROW(cross_evaluate(decs, b.dataset, b.store), std::invalid_argument);
  decs = truths(b);
  decs.pop_back();
  EXPECT_THROW(cross_evaluate(decs, b.dataset, b.store), std::invalid_argument);
  decs = truths(b);
  decs[1] = decs[0];
  EXPECT_THROW(cross_evaluate(decs, b.dataset, b.store), std::invalid_argument);
}

CrossEvalMatrix two_by_two() {
  CrossEvalMatrix m;
  m.relations = {"a", "b"};
  m.scores = Eigen::Matrix2d::Identity();
  m.order = {0, 1};
  return m;
}

TEST(Report, Csv) {
  const std::string csv = cross_eval_csv(two_by_two());
  EXPECT_EQ(csv, "relation,a,b\na,1.000000,0.000000\nb,0.000000,1.000000\n");
  CrossEvalMatrix quoted = two_by_two();
  quoted.relations[0] = "x,y";
  EXPECT_EQ(cross_eval_csv(quoted).substr(0, 19), "relation,\"x,y\",b\n\"x");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("plain"), "plain");
}

TEST(Report, SvgIsDeterministicAndAnnotated) {
  CrossEvalMatrix m = two_by_two();
  m.scores(0, 1) = 2.0 / 3.0;
  const std::string svg = cross_eval_svg(m);
  EXPECT_EQ(svg, cross_eval_svg(m));
  EXPECT_NE(svg.find(">0.67<"), std::string::npos);
  EXPECT_NE(svg.find(">1.00<"), std::string::npos);
  EXPECT_EQ(std::count(svg.begin(), svg.end(), '\n') > 0, true);
  testing::TempDir dir("svg");
  write_cross_eval_svg(m, dir / "a.svg");
  write_cross_eval_svg(m, dir / "b.svg");
  std::ifstream a(dir / "a.svg"), b(dir / "b.svg");
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}), std::string(std::istreambuf_iterator<char>(b), {}));
  EXPECT_THROW(write_cross_eval_csv(m, dir / "missing" / "x.csv"), std::runtime_error);
}

TEST(Report, ColorRampAndFormatting) {
  EXPECT_EQ(heatmap_color(0.0), "#f7fbff");
  EXPECT_EQ(heatmap_color(1.0), "#08306b");
  EXPECT_EQ(heatmap_color(-3.0), "#f7fbff");
  EXPECT_EQ(heatmap_color(7.0), "#08306b");
  EXPECT_EQ(format_score(2.0 / 3.0), "0.67");
  EXPECT_EQ(format_score(0.125), "0.12");
  EXPECT_EQ(format_score(1.0), "1.00");
  auto red = [](const std::string& c) { return std::stoi(c.substr(1, 2), nullptr, 16); };
  for (int i = 1; i <= 10; ++i) EXPECT_LE(red(heatmap_color(i / 10.0)), red(heatmap_color((i - 1) / 10.0)));
}

TEST(Report, ClusterOrderGroupsBlocks) {
  // Rows 0, 2, 4 form one block and 1, 3 the other.
  Eigen::MatrixXd s(5, 5);
  s << 1, 0, 1, 0, 1,
       0, 1, 0, 1, 0,
       1, 0, 1, 0, 0.9,
       0, 1, 0, 1, 0,
       1, 0, 0.9, 0, 1;
  const auto order = cluster_order(s);
  ASSERT_EQ(order.size(), 5u);
  auto pos = [&](std::size_t i) { return std::find(order.begin(), order.end(), i) - order.begin(); };
  EXPECT_EQ(std::abs(pos(1) - pos(3)), 1);
  std::vector<std::ptrdiff_t> block{pos(0), pos(2), pos(4)};
  std::sort(block.begin(), block.end());
  EXPECT_EQ(block.back() - block.front(), 2);
  EXPECT_EQ(cluster_order(s), order);

  CrossEvalMatrix m;
  m.relations = {"r0", "r1", "r2", "r3", "r4"};
  m.scores = s;
  m.order = order;
  const CrossEvalMatrix r = m.reordered();
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(r.relations[i], m.relations[order[i]]);
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_EQ(r.scores(static_cast<Index>(i), static_cast<Index>(j)),
                s(static_cast<Index>(order[i]), static_cast<Index>(order[j])));
    }
  }
}

}  // namespace
}  // namespace relkit
