#include "relkit/evaluation.hpp"
#include "relkit/synthetic.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

namespace relkit {
namespace {

SyntheticTeacherSpec math_spec(std::uint64_t seed) {
  SyntheticTeacherSpec s;
  s.seed = seed;
  return s;
}

TEST(MathRamp, HeadRecoversEveryNumber) {
  const MathRampStore m = gen_math_store(math_spec(1));
  EXPECT_EQ(m.store.vocab_size(), 401);
  for (int n = -100; n <= 300; ++n) {
    const Entity& e = m.store.entity(std::to_string(n));
    EXPECT_EQ(e.first_token_id, m.token(n));
    EXPECT_EQ(head_decode(m.store, e.vector), m.token(n)) << n;
  }
}

TEST(MathRamp, PlusZeroAndMinusZeroShareBase) {
  const MathRampStore m = gen_math_store(math_spec(2));
  EXPECT_EQ(m.relation_vector(+1, 0), m.relation_base);
  EXPECT_EQ(m.relation_vector(-1, 0), m.relation_base);
  EXPECT_EQ(m.store.relation("number plus 0"), m.relation_base);
  EXPECT_TRUE(m.store.relation("number minus 5").isApprox(m.relation_base - 5 * m.relation_step, 1e-15));
}

TEST(MathRamp, ShiftedEmbeddingsDecodeToTheAnswer) {
  const MathRampStore m = gen_math_store(math_spec(3));
  const RelationDataset data = generate_math_dataset();
  for (const auto& r : data) {
    const int sign = r.relation_type == "addition" ? +1 : -1;
    const int x = std::stoi(r.name.substr(r.name.rfind(' ') + 1));
    for (const auto& s : r.samples) {
      const int n = std::stoi(s.subject);
      const Eigen::VectorXd shifted = m.store.entity(s.subject).vector + sign * x * m.step;
      EXPECT_EQ(head_decode(m.store, shifted), m.token(n + sign * x));
    }
    EXPECT_EQ(faithfulness(m.ground_truth(sign, x), r, m.store).score(), 1.0);
  }
}

// The decoder D(v) = [I; k u^T] is affine in k, and v = q0 + k q1 with k the
// signed offset. P2 = [q0 q1] (G^-1) sends v to (1, k), so a Simple network
// with d_r' = 2, d_s' = d + 1, d_o' = d reproduces D exactly.
TEST(MathRamp, SimpleNetworkWithTwoRelationDimsIsExact) {
  const MathRampStore m = gen_math_store(math_spec(4));
  const Index d = m.store.d;
  ArchitectureConfig c;
  c.d = d;
  c.subject_dim = d + 1;
  c.relation_dim = 2;
  c.object_dim = d;
  TensorNetworkModel model = allocate_model(c);

  Eigen::MatrixXd Q(d, 2);
  Q << m.relation_base, m.relation_step;
  const Eigen::MatrixXd P2 = Q * (Q.transpose() * Q).inverse();
  model.parameters.at("P2") = Tensor::matrix("r", "r'", P2);
  model.parameters.at("P1") = Tensor::matrix("s", "s'", Eigen::MatrixXd::Identity(d + 1, d + 1));
  model.parameters.at("P3") = Tensor::matrix("o", "o'", Eigen::MatrixXd::Identity(d, d));
  Tensor& T = model.parameters.at("T0");
  for (Index i = 0; i < d; ++i) T.at({i, 0, i}) = 1.0;
  for (Index o = 0; o < d; ++o) T.at({d, 1, o}) = m.step(o);

  const RelationDataset data = generate_math_dataset();
  for (const auto& r : data) {
    const int sign = r.relation_type == "addition" ? +1 : -1;
    const int x = std::stoi(r.name.substr(r.name.rfind(' ') + 1));
    const AffineDecoder got = materialize_decoder(model, m.store.relation(r.name));
    const AffineDecoder want = m.ground_truth(sign, x);
    EXPECT_LE((got.W - want.W).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((got.b - want.b).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_EQ(faithfulness(got, r, m.store).score(), 1.0);
  }
}

TEST(MathRamp, DeterministicAndValidated) {
  EXPECT_EQ(gen_math_store(math_spec(5)).store, gen_math_store(math_spec(5)).store);
  EXPECT_FALSE(gen_math_store(math_spec(5)).store == gen_math_store(math_spec(6)).store);
  SyntheticTeacherSpec bad = math_spec(1);
  bad.number_min = 10;
  bad.number_max = 5;
  EXPECT_THROW(gen_math_store(bad), std::invalid_argument);
  bad = math_spec(1);
  bad.sigma = -1;
  EXPECT_THROW(gen_math_store(bad), std::invalid_argument);
  bad = math_spec(1);
  bad.kind = TeacherKind::Orthogonal;
  EXPECT_THROW(gen_math_store(bad), std::invalid_argument);
}

SyntheticTeacherSpec grouped_spec(TeacherKind kind, std::uint64_t seed) {
  SyntheticTeacherSpec s;
  s.kind = kind;
  s.d = 16;
  s.seed = seed;
  s.samples_per_relation = 24;
  s.n_relations = 4;
  return s;
}

TEST(Orthogonal, GroundTruthIsFaithfulAndDoesNotTransfer) {
  const SyntheticBundle b = gen_orthogonal_store(grouped_spec(TeacherKind::Orthogonal, 1));
  ASSERT_EQ(b.dataset.size(), 4u);
  for (const auto& r : b.dataset) {
    EXPECT_EQ(faithfulness(b.ground_truth.at(r.name), r, b.store).score(), 1.0);
    for (const auto& other : b.dataset) {
      if (other.name == r.name) continue;
      EXPECT_LE(faithfulness(b.ground_truth.at(r.name), other, b.store).score(), 0.05);
    }
  }
}

TEST(Orthogonal, SingleRelation) {
  SyntheticTeacherSpec s = grouped_spec(TeacherKind::Orthogonal, 2);
  s.n_relations = 1;
  const SyntheticBundle b = gen_orthogonal_store(s);
  EXPECT_EQ(b.dataset.size(), 1u);
  EXPECT_EQ(b.store.relations.size(), 1u);
  EXPECT_EQ(b.store.entities.size(), 48u);
}

TEST(SharedProperty, SingletonGroupsReduceToOrthogonal) {
  const SyntheticBundle o = gen_orthogonal_store(grouped_spec(TeacherKind::Orthogonal, 3));
  SyntheticTeacherSpec s = grouped_spec(TeacherKind::SharedProperty, 3);
  s.group_sizes = {1, 1, 1, 1};
  const SyntheticBundle p = gen_shared_property_store(s);
  EXPECT_EQ(p.store, o.store);
  EXPECT_EQ(p.dataset, o.dataset);
}

TEST(SharedProperty, GroupsShareMaps) {
  SyntheticTeacherSpec s = grouped_spec(TeacherKind::SharedProperty, 4);
  s.group_sizes = parse_group_sizes("2x3");
  const SyntheticBundle b = gen_shared_property_store(s);
  ASSERT_EQ(b.dataset.size(), 6u);
  for (const auto& r : b.dataset) {
    for (const auto& l : b.dataset) {
      const bool same = b.group.at(r.name) == b.group.at(l.name);
      const double f = faithfulness(b.ground_truth.at(r.name), l, b.store).score();
      EXPECT_EQ(b.ground_truth.at(r.name).W == b.ground_truth.at(l.name).W, same);
      if (same) {
        EXPECT_EQ(f, 1.0);
      } else {
        EXPECT_LE(f, 0.05);
      }
    }
  }
  s.group_sizes = {2, 0};
  EXPECT_THROW(gen_shared_property_store(s), std::invalid_argument);
}

TEST(SharedProperty, ParseGroupSizes) {
  EXPECT_EQ(parse_group_sizes("2x3"), (std::vector<int>{3, 3}));
  EXPECT_EQ(parse_group_sizes("3,2,4"), (std::vector<int>{3, 2, 4}));
  EXPECT_EQ(parse_group_sizes("5"), (std::vector<int>{5}));
  for (const char* bad : {"", "x3", "2x", "a,b", "2,,3", "0x3", "2x-1"}) {
    EXPECT_THROW(parse_group_sizes(bad), std::invalid_argument) << bad;
  }
}

}  // namespace
}  // namespace relkit
