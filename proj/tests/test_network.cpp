#include "relkit/network.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>

namespace relkit {
namespace {

using testing::brute_force_contract;
using testing::entrywise_rel;
using testing::random_network;
using testing::random_tensor;

ContractionError::Kind error_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const ContractionError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a ContractionError";
  return ContractionError::Kind::ShapeMismatch;
}

TEST(ContractNetwork, SingleNodeIsReturnedUnchanged) {
  std::mt19937_64 rng(1);
  const Tensor t = random_tensor({{"a", 2}, {"b", 3}}, rng);
  NetworkSpec spec;
  spec.add_node("t", t).free("t", "a").free("t", "b");
  EXPECT_EQ(contract_network(spec), t);
}

TEST(ContractNetwork, FreeLegOrderFollowsSpec) {
  std::mt19937_64 rng(2);
  const Tensor t = random_tensor({{"a", 2}, {"b", 3}}, rng);
  NetworkSpec spec;
  spec.add_node("t", t).free("t", "b").free("t", "a");
  const Tensor r = contract_network(spec);
  EXPECT_EQ(r.leg(0).label, "b");
  EXPECT_EQ(r.at({2, 1}), t.at({1, 2}));
}

TEST(ContractNetwork, MatchesBruteForceOnRandomNetworks) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const NetworkSpec spec = random_network(rng, 5, 3);
    const Tensor got = contract_network(spec);
    const Tensor want = brute_force_contract(spec);
    ASSERT_EQ(got.legs(), want.legs());
    EXPECT_LE(testing::max_rel_diff(got.data(), want.data()), 1e-12) << "trial " << trial;
  }
}

TEST(ContractNetwork, ScheduleInvarianceOnSixNodes) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    NetworkSpec spec;
    do {
      spec = random_network(rng, 6, 4, 3);
    } while (spec.nodes.size() < 6);
    std::vector<std::size_t> order(spec.bonds.size());
    std::iota(order.begin(), order.end(), 0);
    const Tensor base = contract_network(spec);
    for (int s = 0; s < 3; ++s) {
      std::shuffle(order.begin(), order.end(), rng);
      const Tensor other = contract_network(spec, {}, order);
      EXPECT_LE(entrywise_rel(base.data(), other.data(), 1e-300), 1e-10);
    }
  }
}

TEST(ContractNetwork, BasisExtractionEqualsMaterialization) {
  std::mt19937_64 rng(13);
  NetworkSpec spec;
  spec.add_node("A", random_tensor({{"i", 2}, {"k", 3}}, rng))
      .add_node("B", random_tensor({{"k", 3}, {"j", 4}, {"l", 2}}, rng))
      .bond("A", "k", "B", "k")
      .free("A", "i")
      .free("B", "j")
      .free("B", "l");
  const Tensor full = contract_network(spec);
  for (Index i = 0; i < 2; ++i) {
    for (Index j = 0; j < 4; ++j) {
      for (Index l = 0; l < 2; ++l) {
        Bindings b;
        b[{"A", "i"}] = Tensor::vector("v", Eigen::VectorXd::Unit(2, i));
        b[{"B", "j"}] = Tensor::vector("v", Eigen::VectorXd::Unit(4, j));
        b[{"B", "l"}] = Tensor::vector("v", Eigen::VectorXd::Unit(2, l));
        const Tensor s = contract_network(spec, b);
        ASSERT_EQ(s.order(), 0u);
        EXPECT_NEAR(s.data()(0), full.at({i, j, l}), 1e-14);
      }
    }
  }
}

TEST(ContractNetwork, PartialBindingKeepsRemainingLegs) {
  std::mt19937_64 rng(14);
  const Tensor T = random_tensor({{"s", 3}, {"r", 2}, {"o", 4}}, rng);
  NetworkSpec spec;
  spec.add_node("T", T).free("T", "s").free("T", "r").free("T", "o");
  const Eigen::Vector2d v(0.5, -2.0);
  Bindings b;
  b[{"T", "r"}] = Tensor::vector("r", v);
  const Tensor m = contract_network(spec, b);
  ASSERT_EQ(m.order(), 2u);
  for (Index s = 0; s < 3; ++s) {
    for (Index o = 0; o < 4; ++o) EXPECT_NEAR(m.at({s, o}), v(0) * T.at({s, 0, o}) + v(1) * T.at({s, 1, o}), 1e-14);
  }
}

TEST(ContractNetwork, Multilinearity) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    NetworkSpec spec = random_network(rng, 5, 3);
    const Tensor base = contract_network(spec);
    Tensor& node = spec.nodes[static_cast<std::size_t>(trial) % spec.nodes.size()].second;
    const Tensor original = node;
    node.data() *= 2.5;
    const Tensor scaled = contract_network(spec);
    EXPECT_LE(testing::max_rel_diff(scaled.data(), 2.5 * base.data()), 1e-12);

    const Tensor delta = random_tensor(original.legs(), rng);
    node = delta;
    const Tensor from_delta = contract_network(spec);
    node.data() = original.data() + delta.data();
    const Tensor sum = contract_network(spec);
    EXPECT_LE(testing::max_rel_diff(sum.data(), base.data() + from_delta.data()), 1e-12);
  }
}

TEST(ContractNetwork, RejectsInvalidNetworks) {
  std::mt19937_64 rng(16);
  const Tensor a = random_tensor({{"i", 2}, {"k", 3}}, rng);
  const Tensor b = random_tensor({{"k", 3}, {"j", 2}}, rng);
  const Tensor c = random_tensor({{"x", 2}}, rng);

  NetworkSpec disconnected;
  disconnected.add_node("a", a).add_node("b", b).add_node("c", c);
  disconnected.bond("a", "k", "b", "k").free("a", "i").free("b", "j").free("c", "x");
  EXPECT_EQ(error_kind([&] { contract_network(disconnected); }), ContractionError::Kind::Disconnected);

  NetworkSpec unused;
  unused.add_node("a", a).add_node("b", b).bond("a", "k", "b", "k").free("a", "i");
  EXPECT_EQ(error_kind([&] { contract_network(unused); }), ContractionError::Kind::InvalidNetwork);

  NetworkSpec twice;
  twice.add_node("a", a).add_node("b", b).bond("a", "k", "b", "k").free("a", "i").free("b", "j").free("a", "k");
  EXPECT_EQ(error_kind([&] { contract_network(twice); }), ContractionError::Kind::InvalidNetwork);

  NetworkSpec mismatch;
  mismatch.add_node("a", a).add_node("b", b).bond("a", "i", "b", "k").free("a", "k").free("b", "j");
  EXPECT_EQ(error_kind([&] { contract_network(mismatch); }), ContractionError::Kind::DimensionMismatch);

  NetworkSpec unknown;
  unknown.add_node("a", a).bond("a", "k", "zz", "k").free("a", "i");
  EXPECT_EQ(error_kind([&] { contract_network(unknown); }), ContractionError::Kind::UnknownNode);

  NetworkSpec ok;
  ok.add_node("a", a).add_node("b", b).bond("a", "k", "b", "k").free("a", "i").free("b", "j");
  Bindings bad;
  bad[{"a", "i"}] = Tensor::vector("v", Eigen::VectorXd::Ones(5));
  EXPECT_EQ(error_kind([&] { contract_network(ok, bad); }), ContractionError::Kind::DimensionMismatch);
  const std::vector<std::size_t> wrong_order{0, 0};
  EXPECT_EQ(error_kind([&] { contract_network(ok, {}, wrong_order); }), ContractionError::Kind::InvalidNetwork);
}

TEST(NetworkVjp, MatrixProductGradientIsGBt) {
  std::mt19937_64 rng(21);
  const Eigen::MatrixXd A = testing::random_matrix(3, 4, rng);
  const Eigen::MatrixXd B = testing::random_matrix(4, 2, rng);
  const Eigen::MatrixXd G = testing::random_matrix(3, 2, rng);
  NetworkSpec spec;
  spec.add_node("A", Tensor::matrix("n", "k", A))
      .add_node("B", Tensor::matrix("k", "m", B))
      .bond("A", "k", "B", "k")
      .free("A", "n")
      .free("B", "m");
  const Tensor gA = network_vjp(spec, Tensor::matrix("n", "m", G), "A");
  const Eigen::MatrixXd expected = G * B.transpose();
  EXPECT_TRUE(gA.as_matrix().isApprox(expected, 1e-13));
  const Tensor gB = network_vjp(spec, Tensor::matrix("n", "m", G), "B");
  const Eigen::MatrixXd expected_b = A.transpose() * G;
  EXPECT_TRUE(gB.as_matrix().isApprox(expected_b, 1e-13));
}

TEST(NetworkVjp, ZeroCotangentGivesZeroGradient) {
  std::mt19937_64 rng(22);
  const NetworkSpec spec = random_network(rng, 4, 3);
  const Tensor cot(output_legs(spec));
  for (const auto& [name, t] : spec.nodes) {
    const Tensor g = network_vjp(spec, cot, name);
    EXPECT_EQ(g.legs(), t.legs());
    EXPECT_TRUE(g.data().isZero(0.0));
  }
}

TEST(NetworkVjp, MatchesCentralDifferences) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 8; ++trial) {
    NetworkSpec spec;
    do {
      spec = random_network(rng, 4, 3);
    } while (spec.nodes.size() < 4);
    const Tensor cot = random_tensor(output_legs(spec), rng);
    auto objective = [&](const NetworkSpec& s) { return inner(cot, contract_network(s)); };
    for (auto& [name, t] : spec.nodes) {
      const Tensor g = network_vjp(spec, cot, name);
      ASSERT_EQ(g.legs(), t.legs());
      Eigen::VectorXd fd(t.size());
      const double h = 1e-5;
      for (Index i = 0; i < t.size(); ++i) {
        const double keep = t.data()(i);
        t.data()(i) = keep + h;
        const double up = objective(spec);
        t.data()(i) = keep - h;
        const double down = objective(spec);
        t.data()(i) = keep;
        fd(i) = (up - down) / (2 * h);
      }
      EXPECT_LE(entrywise_rel(g.data(), fd, 1e-6), 1e-5) << "node " << name << " trial " << trial;
    }
  }
}

TEST(NetworkVjp, WithBindingsOnTheTarget) {
  std::mt19937_64 rng(24);
  const Tensor T = random_tensor({{"s", 3}, {"r", 2}, {"o", 4}}, rng);
  NetworkSpec spec;
  spec.add_node("T", T).free("T", "s").free("T", "r").free("T", "o");
  const Eigen::Vector2d v(0.3, 1.7);
  Bindings b;
  b[{"T", "r"}] = Tensor::vector("r", v);
  const Tensor cot = random_tensor({{"s", 3}, {"o", 4}}, rng);
  const Tensor g = network_vjp(spec, cot, "T", b);
  for (Index s = 0; s < 3; ++s)
    for (Index r = 0; r < 2; ++r)
      for (Index o = 0; o < 4; ++o) EXPECT_NEAR(g.at({s, r, o}), cot.at({s, o}) * v(r), 1e-14);
}

TEST(NetworkVjp, Errors) {
  std::mt19937_64 rng(25);
  NetworkSpec spec;
  spec.add_node("A", random_tensor({{"n", 2}, {"k", 3}}, rng))
      .add_node("B", random_tensor({{"k", 3}, {"m", 2}}, rng))
      .bond("A", "k", "B", "k")
      .free("A", "n")
      .free("B", "m");
  const Tensor good({{"n", 2}, {"m", 2}});
  EXPECT_EQ(error_kind([&] { network_vjp(spec, good, "C"); }), ContractionError::Kind::UnknownNode);
  const Tensor wrong_dim({{"n", 2}, {"m", 3}});
  EXPECT_EQ(error_kind([&] { network_vjp(spec, wrong_dim, "A"); }), ContractionError::Kind::ShapeMismatch);
  const Tensor wrong_order({{"n", 2}});
  EXPECT_EQ(error_kind([&] { network_vjp(spec, wrong_order, "A"); }), ContractionError::Kind::ShapeMismatch);
}

}  // namespace
}  // namespace relkit
