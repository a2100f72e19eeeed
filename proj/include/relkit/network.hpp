#pragma once

#include "relkit/tensor.hpp"

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace relkit {

/// A leg of a specific node in a network.
struct LegRef {
  std::string node;
  std::string leg;

  friend auto operator<=>(const LegRef&, const LegRef&) = default;
};

struct Bond {
  LegRef a;
  LegRef b;
};

/// Named tensors joined by bonds. Every leg of every node is either in
/// exactly one bond or listed once in `free_legs`; the bond graph must be
/// connected.
template <typename Scalar>
struct BasicNetworkSpec {
  std::vector<std::pair<std::string, BasicTensor<Scalar>>> nodes;
  std::vector<Bond> bonds;
  std::vector<LegRef> free_legs;

  BasicNetworkSpec& add_node(std::string name, BasicTensor<Scalar> t) {
    nodes.emplace_back(std::move(name), std::move(t));
    return *this;
  }
  BasicNetworkSpec& bond(std::string node_a, std::string leg_a, std::string node_b, std::string leg_b) {
    bonds.push_back(Bond{LegRef{std::move(node_a), std::move(leg_a)}, LegRef{std::move(node_b), std::move(leg_b)}});
    return *this;
  }
  BasicNetworkSpec& free(std::string node, std::string leg) {
    free_legs.push_back(LegRef{std::move(node), std::move(leg)});
    return *this;
  }

  const BasicTensor<Scalar>* find(const std::string& name) const {
    for (const auto& [n, t] : nodes) {
      if (n == name) return &t;
    }
    return nullptr;
  }
  BasicTensor<Scalar>* find(const std::string& name) {
    for (auto& [n, t] : nodes) {
      if (n == name) return &t;
    }
    return nullptr;
  }
};

using NetworkSpec = BasicNetworkSpec<double>;

/// Vectors bound to free legs before contraction.
template <typename Scalar>
using BasicBindings = std::map<LegRef, BasicTensor<Scalar>>;
using Bindings = BasicBindings<double>;

namespace detail {

inline std::string qualified(std::size_t node, const std::string& leg) {
  return "#" + std::to_string(node) + ":" + leg;
}

/// A bond between positional nodes whose leg labels are globally unique.
struct Edge {
  std::size_t a, b;
  std::string la, lb;
};

/// Contracts every edge (in the given order, merging clusters greedily) and
/// returns the result with legs `output` (qualified labels). Components left
/// unconnected are joined by outer products in node order when
/// `allow_outer` is set.
template <typename Scalar>
BasicTensor<Scalar> contract_flat(std::vector<BasicTensor<Scalar>> nodes,
                                  const std::vector<Edge>& edges,
                                  const std::vector<std::string>& output, bool allow_outer) {
  const std::size_t n = nodes.size();
  std::vector<std::size_t> cluster(n);
  std::iota(cluster.begin(), cluster.end(), 0);
  std::vector<std::optional<BasicTensor<Scalar>>> held(n);
  for (std::size_t i = 0; i < n; ++i) held[i] = std::move(nodes[i]);
  std::vector<bool> consumed(edges.size(), false);

  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (consumed[e]) continue;
    const std::size_t ca = cluster[edges[e].a];
    const std::size_t cb = cluster[edges[e].b];
    std::vector<LegPair> pairs;
    for (std::size_t f = e; f < edges.size(); ++f) {
      if (consumed[f]) continue;
      const std::size_t fa = cluster[edges[f].a], fb = cluster[edges[f].b];
      if (fa == ca && fb == cb) {
        pairs.emplace_back(edges[f].la, edges[f].lb);
      } else if (fa == cb && fb == ca) {
        pairs.emplace_back(edges[f].lb, edges[f].la);
      } else {
        continue;
      }
      consumed[f] = true;
    }
    if (ca == cb) {
      throw ContractionError(ContractionError::Kind::InvalidNetwork, "bond closes a loop on a single tensor");
    }
    held[ca] = contract_legs(*held[ca], *held[cb], std::span<const LegPair>(pairs));
    held[cb].reset();
    for (auto& c : cluster) {
      if (c == cb) c = ca;
    }
  }

  std::optional<BasicTensor<Scalar>> result;
  for (std::size_t i = 0; i < n; ++i) {
    if (!held[i]) continue;
    if (!result) {
      result = std::move(held[i]);
      continue;
    }
    if (!allow_outer) {
      throw ContractionError(ContractionError::Kind::Disconnected, "network is not connected");
    }
    result = contract_legs(*result, *held[i], std::span<const LegPair>());
  }
  if (!result) result = BasicTensor<Scalar>::scalar(Scalar(1));
  return permute(*result, std::span<const std::string>(output));
}

}  // namespace detail

/// Checks the structural invariants of a network; throws ContractionError.
template <typename Scalar>
void validate(const BasicNetworkSpec<Scalar>& spec) {
  using Err = ContractionError;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    const auto& name = spec.nodes[i].first;
    if (name.empty()) throw Err(Err::Kind::InvalidNetwork, "node with empty name");
    if (!index.emplace(name, i).second) throw Err(Err::Kind::InvalidNetwork, "duplicate node '" + name + "'");
  }
  if (spec.nodes.empty()) throw Err(Err::Kind::InvalidNetwork, "network has no nodes");

  std::map<LegRef, int> uses;
  auto touch = [&](const LegRef& r) -> Index {
    auto it = index.find(r.node);
    if (it == index.end()) throw Err(Err::Kind::UnknownNode, "unknown node '" + r.node + "'");
    const auto& t = spec.nodes[it->second].second;
    if (!t.has_leg(r.leg)) throw Err(Err::Kind::UnknownLeg, "node '" + r.node + "' has no leg '" + r.leg + "'");
    ++uses[r];
    return t.dim(r.leg);
  };

  std::vector<std::size_t> parent(spec.nodes.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  for (const auto& b : spec.bonds) {
    if (b.a.node == b.b.node) {
      throw Err(Err::Kind::InvalidNetwork, "bond within node '" + b.a.node + "'");
    }
    const Index da = touch(b.a), db = touch(b.b);
    if (da != db) {
      throw Err(Err::Kind::DimensionMismatch, "bond " + b.a.node + "." + b.a.leg + " (" + std::to_string(da) +
                                                  ") - " + b.b.node + "." + b.b.leg + " (" + std::to_string(db) +
                                                  ")");
    }
    parent[root(index[b.a.node])] = root(index[b.b.node]);
  }
  std::set<std::string> free_labels;
  for (const auto& f : spec.free_legs) {
    touch(f);
    if (!free_labels.insert(f.leg).second) {
      throw Err(Err::Kind::DuplicateLeg, "free leg label '" + f.leg + "' appears twice");
    }
  }
  for (const auto& [name, t] : spec.nodes) {
    for (const auto& l : t.legs()) {
      const auto it = uses.find(LegRef{name, l.label});
      const int count = it == uses.end() ? 0 : it->second;
      if (count != 1) {
        throw Err(Err::Kind::InvalidNetwork, "leg " + name + "." + l.label + " is used " + std::to_string(count) +
                                                 " times (expected exactly once)");
      }
    }
  }
  for (std::size_t i = 0; i < parent.size(); ++i) {
    if (root(i) != root(0)) throw Err(Err::Kind::Disconnected, "network is not connected");
  }
}

namespace detail {

template <typename Scalar>
void validate_bindings(const BasicNetworkSpec<Scalar>& spec, const BasicBindings<Scalar>& bindings) {
  using Err = ContractionError;
  for (const auto& [ref, vec] : bindings) {
    if (std::find(spec.free_legs.begin(), spec.free_legs.end(), ref) == spec.free_legs.end()) {
      throw Err(Err::Kind::UnknownLeg, "binding for " + ref.node + "." + ref.leg + " which is not a free leg");
    }
    if (vec.order() != 1) throw Err(Err::Kind::ShapeMismatch, "bindings must be order-1 tensors");
    const Index want = spec.find(ref.node)->dim(ref.leg);
    if (vec.leg(0).dim != want) {
      throw Err(Err::Kind::DimensionMismatch, "binding for " + ref.node + "." + ref.leg + " has dim " +
                                                  std::to_string(vec.leg(0).dim) + ", leg has " +
                                                  std::to_string(want));
    }
  }
}

template <typename Scalar>
std::map<std::string, std::size_t> node_index(const BasicNetworkSpec<Scalar>& spec) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) index.emplace(spec.nodes[i].first, i);
  return index;
}

}  // namespace detail

/// Legs of the tensor `contract_network` returns for these bindings.
template <typename Scalar>
std::vector<Leg> output_legs(const BasicNetworkSpec<Scalar>& spec, const BasicBindings<Scalar>& bindings = {}) {
  std::vector<Leg> out;
  for (const auto& f : spec.free_legs) {
    if (bindings.count(f)) continue;
    out.push_back(Leg{f.leg, spec.find(f.node)->dim(f.leg)});
  }
  return out;
}

/// Fully contracts the network. Bound free legs are contracted with their
/// vectors first, then bonds are processed left to right (or in
/// `bond_order`, a permutation of bond indices), each step merging the two
/// clusters a bond joins through every bond between them. The result's legs
/// are the unbound free legs in spec order.
template <typename Scalar>
BasicTensor<Scalar> contract_network(const BasicNetworkSpec<Scalar>& spec,
                                     const BasicBindings<Scalar>& bindings = {},
                                     std::span<const std::size_t> bond_order = {}) {
  validate(spec);
  detail::validate_bindings(spec, bindings);
  const auto index = detail::node_index(spec);

  std::vector<BasicTensor<Scalar>> nodes;
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    std::vector<std::string> labels;
    for (const auto& l : spec.nodes[i].second.legs()) labels.push_back(detail::qualified(i, l.label));
    nodes.push_back(spec.nodes[i].second.with_labels(std::move(labels)));
  }

  using detail::Edge;
  std::vector<Edge> edges;
  for (const auto& [ref, vec] : bindings) {
    const std::size_t owner = index.at(ref.node);
    const std::size_t bind_node = nodes.size();
    nodes.push_back(vec.with_labels({detail::qualified(bind_node, "v")}));
    edges.push_back(Edge{owner, bind_node, detail::qualified(owner, ref.leg), detail::qualified(bind_node, "v")});
  }

  std::vector<std::size_t> order;
  if (bond_order.empty()) {
    order.resize(spec.bonds.size());
    std::iota(order.begin(), order.end(), 0);
  } else {
    order.assign(bond_order.begin(), bond_order.end());
    std::vector<std::size_t> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (sorted.size() != spec.bonds.size() || sorted[i] != i) {
        throw ContractionError(ContractionError::Kind::InvalidNetwork, "bond_order is not a permutation of the bonds");
      }
    }
  }
  for (std::size_t k : order) {
    const auto& b = spec.bonds[k];
    const std::size_t ia = index.at(b.a.node), ib = index.at(b.b.node);
    edges.push_back(Edge{ia, ib, detail::qualified(ia, b.a.leg), detail::qualified(ib, b.b.leg)});
  }

  std::vector<std::string> output;
  std::vector<std::string> labels;
  for (const auto& f : spec.free_legs) {
    if (bindings.count(f)) continue;
    output.push_back(detail::qualified(index.at(f.node), f.leg));
    labels.push_back(f.leg);
  }
  return detail::contract_flat(std::move(nodes), edges, output, false).with_labels(std::move(labels));
}

/// Gradient of <cotangent, contract_network(spec, bindings)> with respect to
/// node `wrt`. The output is multilinear in each node, so this is the
/// contraction of the cotangent with every other node; the result carries
/// the legs of `wrt` in its own order.
template <typename Scalar>
BasicTensor<Scalar> network_vjp(const BasicNetworkSpec<Scalar>& spec, const BasicTensor<Scalar>& cotangent,
                                const std::string& wrt, const BasicBindings<Scalar>& bindings = {}) {
  using Err = ContractionError;
  validate(spec);
  detail::validate_bindings(spec, bindings);
  const auto index = detail::node_index(spec);
  const auto target_it = index.find(wrt);
  if (target_it == index.end()) throw Err(Err::Kind::UnknownNode, "unknown node '" + wrt + "'");
  const std::size_t target = target_it->second;
  const auto& target_tensor = spec.nodes[target].second;

  const auto out_legs = output_legs(spec, bindings);
  if (cotangent.order() != out_legs.size()) {
    throw Err(Err::Kind::ShapeMismatch, "cotangent order " + std::to_string(cotangent.order()) +
                                            " does not match output order " + std::to_string(out_legs.size()));
  }
  for (const auto& l : out_legs) {
    if (!cotangent.has_leg(l.label) || cotangent.dim(l.label) != l.dim) {
      throw Err(Err::Kind::ShapeMismatch, "cotangent does not match output leg '" + l.label + "'");
    }
  }

  // Remaining nodes keep their spec index in the qualified labels.
  std::vector<BasicTensor<Scalar>> nodes;
  std::vector<std::size_t> slot(spec.nodes.size(), static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    if (i == target) continue;
    std::vector<std::string> labels;
    for (const auto& l : spec.nodes[i].second.legs()) labels.push_back(detail::qualified(i, l.label));
    slot[i] = nodes.size();
    nodes.push_back(spec.nodes[i].second.with_labels(std::move(labels)));
  }

  // Where each leg of the target ends up once the target is removed.
  std::map<std::string, std::string> target_leg_source;

  using detail::Edge;
  std::vector<Edge> edges;
  for (const auto& [ref, vec] : bindings) {
    const std::size_t owner = index.at(ref.node);
    const std::size_t bind_slot = nodes.size();
    const std::string label = "bind" + std::to_string(bind_slot) + ":v";
    nodes.push_back(vec.with_labels({label}));
    if (owner == target) {
      target_leg_source[ref.leg] = label;
    } else {
      edges.push_back(Edge{slot[owner], bind_slot, detail::qualified(owner, ref.leg), label});
    }
  }

  const std::size_t cot_slot = nodes.size();
  {
    std::vector<std::string> labels;
    for (const auto& l : cotangent.legs()) labels.push_back("cot:" + l.label);
    nodes.push_back(cotangent.with_labels(std::move(labels)));
  }
  for (const auto& f : spec.free_legs) {
    if (bindings.count(f)) continue;
    const std::size_t owner = index.at(f.node);
    if (owner == target) {
      target_leg_source[f.leg] = "cot:" + f.leg;
    } else {
      edges.push_back(Edge{slot[owner], cot_slot, detail::qualified(owner, f.leg), "cot:" + f.leg});
    }
  }

  for (const auto& b : spec.bonds) {
    const std::size_t ia = index.at(b.a.node), ib = index.at(b.b.node);
    if (ia == target) {
      target_leg_source[b.a.leg] = detail::qualified(ib, b.b.leg);
    } else if (ib == target) {
      target_leg_source[b.b.leg] = detail::qualified(ia, b.a.leg);
    } else {
      edges.push_back(Edge{slot[ia], slot[ib], detail::qualified(ia, b.a.leg), detail::qualified(ib, b.b.leg)});
    }
  }

  std::vector<std::string> output, labels;
  for (const auto& l : target_tensor.legs()) {
    output.push_back(target_leg_source.at(l.label));
    labels.push_back(l.label);
  }
  return detail::contract_flat(std::move(nodes), edges, output, true).with_labels(std::move(labels));
}

}  // namespace relkit
