#include "relkit/tensor.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>

namespace relkit {
namespace {

using testing::random_tensor;

TEST(Tensor, ShapeAndIndexing) {
  Tensor t({{"a", 2}, {"b", 3}});
  EXPECT_EQ(t.order(), 2u);
  EXPECT_EQ(t.size(), 6);
  t.at({1, 2}) = 5.0;
  EXPECT_EQ(t.data()(5), 5.0);  // row-major: last leg fastest
  EXPECT_EQ(t.dim("b"), 3);
  EXPECT_THROW(t.at({2, 0}), std::out_of_range);
}

TEST(Tensor, RejectsBadShapes) {
  EXPECT_THROW(Tensor({{"a", 2}, {"a", 3}}), ContractionError);
  EXPECT_THROW(Tensor({{"a", 0}}), ContractionError);
  EXPECT_THROW(Tensor({{"a", 2}}, Eigen::VectorXd::Zero(3)), ContractionError);
}

TEST(Tensor, ScalarHasOrderZero) {
  const Tensor s = Tensor::scalar(2.5);
  EXPECT_EQ(s.order(), 0u);
  EXPECT_EQ(s.data()(0), 2.5);
}

TEST(ContractPair, MatrixProductThroughOneLeg) {
  Eigen::MatrixXd A(2, 3), B(3, 2);
  A << 1, 2, 3, 4, 5, 6;
  B << 7, 8, 9, 10, 11, 12;
  const Tensor a = Tensor::matrix("n", "k", A);
  const Tensor b = Tensor::matrix("k", "m", B);
  const Tensor c = contract_pair(a, b, {{"k", "k"}});
  ASSERT_EQ(c.order(), 2u);
  EXPECT_EQ(c.leg(0).label, "n");
  EXPECT_EQ(c.leg(1).label, "m");
  const Eigen::MatrixXd expected = A * B;
  EXPECT_TRUE(c.as_matrix().isApprox(expected, 1e-14));
}

TEST(ContractPair, AllOnesWithVector) {
  Tensor t({{"s", 2}, {"r", 2}, {"o", 2}});
  t.data().setOnes();
  const Tensor v = Tensor::vector("r", Eigen::Vector2d(1, 1));
  const Tensor m = contract_pair(t, v, {{"r", "r"}});
  ASSERT_EQ(m.order(), 2u);
  EXPECT_EQ(m.leg(0).label, "s");
  EXPECT_EQ(m.leg(1).label, "o");
  for (Index i = 0; i < m.size(); ++i) EXPECT_EQ(m.data()(i), 2.0);
}

TEST(ContractPair, ResultLegOrderIsLeftThenRight) {
  std::mt19937_64 rng(3);
  const Tensor a = random_tensor({{"x", 2}, {"k", 3}, {"y", 4}}, rng);
  const Tensor b = random_tensor({{"z", 5}, {"k", 3}}, rng);
  const Tensor c = contract_pair(a, b, {{"k", "k"}});
  std::vector<std::string> labels;
  for (const auto& l : c.legs()) labels.push_back(l.label);
  EXPECT_EQ(labels, (std::vector<std::string>{"x", "y", "z"}));
  for (Index x = 0; x < 2; ++x) {
    for (Index y = 0; y < 4; ++y) {
      for (Index z = 0; z < 5; ++z) {
        double sum = 0.0;
        for (Index k = 0; k < 3; ++k) sum += a.at({x, k, y}) * b.at({z, k});
        EXPECT_NEAR(c.at({x, y, z}), sum, 1e-12);
      }
    }
  }
}

TEST(ContractPair, MultipleLegsAtOnce) {
  std::mt19937_64 rng(4);
  const Tensor a = random_tensor({{"i", 3}, {"p", 2}, {"q", 4}}, rng);
  const Tensor b = random_tensor({{"q", 4}, {"j", 2}, {"p", 2}}, rng);
  const Tensor c = contract_pair(a, b, {{"p", "p"}, {"q", "q"}});
  for (Index i = 0; i < 3; ++i) {
    for (Index j = 0; j < 2; ++j) {
      double sum = 0.0;
      for (Index p = 0; p < 2; ++p) {
        for (Index q = 0; q < 4; ++q) sum += a.at({i, p, q}) * b.at({q, j, p});
      }
      EXPECT_NEAR(c.at({i, j}), sum, 1e-12);
    }
  }
}

TEST(ContractPair, Errors) {
  std::mt19937_64 rng(5);
  const Tensor a = random_tensor({{"i", 2}, {"k", 3}}, rng);
  const Tensor b = random_tensor({{"k", 4}, {"j", 3}}, rng);
  auto kind_of = [&](std::initializer_list<LegPair> pairs) {
    try {
      contract_pair(a, b, pairs);
    } catch (const ContractionError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "no error";
    return ContractionError::Kind::InvalidNetwork;
  };
  EXPECT_EQ(kind_of({{"k", "k"}}), ContractionError::Kind::DimensionMismatch);
  EXPECT_EQ(kind_of({{"zz", "j"}}), ContractionError::Kind::UnknownLeg);
  EXPECT_EQ(kind_of({{"k", "j"}, {"k", "j"}}), ContractionError::Kind::DuplicateLeg);
  EXPECT_EQ(kind_of({}), ContractionError::Kind::EmptyPairing);
}

// Y_ij = sum_klmno A_ik B_lno C_jklm D_mn E_o, checked against five nested loops.
class FiveTensorExample : public ::testing::TestWithParam<int> {};

TEST_P(FiveTensorExample, AnyPairwiseOrderMatchesNestedSum) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(GetParam()));
  const Index I = 2, J = 3, K = 2, L = 3, M = 2, N = 3, O = 2;
  const Tensor A = random_tensor({{"i", I}, {"k", K}}, rng);
  const Tensor B = random_tensor({{"l", L}, {"n", N}, {"o", O}}, rng);
  const Tensor C = random_tensor({{"j", J}, {"k", K}, {"l", L}, {"m", M}}, rng);
  const Tensor D = random_tensor({{"m", M}, {"n", N}}, rng);
  const Tensor E = random_tensor({{"o", O}}, rng);

  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(I, J);
  for (Index i = 0; i < I; ++i)
    for (Index j = 0; j < J; ++j)
      for (Index k = 0; k < K; ++k)
        for (Index l = 0; l < L; ++l)
          for (Index m = 0; m < M; ++m)
            for (Index n = 0; n < N; ++n)
              for (Index o = 0; o < O; ++o)
                Y(i, j) += A.at({i, k}) * B.at({l, n, o}) * C.at({j, k, l, m}) * D.at({m, n}) * E.at({o});

  // Order 1: ((A C) D) then B, then E.
  Tensor t1 = contract_pair(A, C, {{"k", "k"}});
  t1 = contract_pair(t1, D, {{"m", "m"}});
  t1 = contract_pair(t1, B, {{"l", "l"}, {"n", "n"}});
  t1 = contract_pair(t1, E, {{"o", "o"}});
  // Order 2: (B E), (D (B E)), then C, then A.
  Tensor t2 = contract_pair(B, E, {{"o", "o"}});
  t2 = contract_pair(D, t2, {{"n", "n"}});
  t2 = contract_pair(C, t2, {{"l", "l"}, {"m", "m"}});
  t2 = contract_pair(A, t2, {{"k", "k"}});

  const std::array<std::string, 2> order{"i", "j"};
  for (const Tensor* t : {&t1, &t2}) {
    const Tensor r = permute(*t, std::span<const std::string>(order));
    for (Index i = 0; i < I; ++i) {
      for (Index j = 0; j < J; ++j) EXPECT_NEAR(r.at({i, j}), Y(i, j), 1e-12);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, FiveTensorExample, ::testing::Values(0, 1, 2, 3, 4));

TEST(Permute, RoundTripAndEntries) {
  std::mt19937_64 rng(6);
  const Tensor t = random_tensor({{"a", 2}, {"b", 3}, {"c", 4}}, rng);
  const std::array<std::string, 3> p{"c", "a", "b"};
  const Tensor q = permute(t, std::span<const std::string>(p));
  for (Index a = 0; a < 2; ++a)
    for (Index b = 0; b < 3; ++b)
      for (Index c = 0; c < 4; ++c) EXPECT_EQ(q.at({c, a, b}), t.at({a, b, c}));
  const std::array<std::string, 3> back{"a", "b", "c"};
  EXPECT_EQ(permute(q, std::span<const std::string>(back)), t);
}

TEST(Inner, MatchesLegsByLabel) {
  std::mt19937_64 rng(7);
  const Tensor a = random_tensor({{"x", 3}, {"y", 2}}, rng);
  const std::array<std::string, 2> p{"y", "x"};
  const Tensor b = permute(a, std::span<const std::string>(p));
  EXPECT_NEAR(inner(a, b), a.data().squaredNorm(), 1e-12);
}

}  // namespace
}  // namespace relkit
