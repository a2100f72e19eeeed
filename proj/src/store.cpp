#include "relkit/store.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace relkit {

const Entity& EmbeddingStore::entity(const std::string& name) const {
  auto it = entities.find(name);
  if (it == entities.end()) throw std::out_of_range("unknown entity '" + name + "'");
  return it->second;
}

const Eigen::VectorXd& EmbeddingStore::relation(const std::string& name) const {
  auto it = relations.find(name);
  if (it == relations.end()) throw std::out_of_range("unknown relation '" + name + "'");
  return it->second;
}

void EmbeddingStore::validate() const {
  auto fail = [](const std::string& msg) { throw StoreError(StoreError::Kind::Invalid, msg); };
  if (d < 1) fail("store dimension must be positive");
  if (head_weights.cols() != d) fail("head has " + std::to_string(head_weights.cols()) + " columns, d is " + std::to_string(d));
  if (head_weights.rows() < 1) fail("head has no tokens");
  if (head_bias.size() != 0 && head_bias.size() != head_weights.rows()) fail("head bias length differs from vocab size");
  for (const auto& [name, e] : entities) {
    if (e.vector.size() != d) fail("entity '" + name + "' has dim " + std::to_string(e.vector.size()));
    if (e.first_token_id >= vocab_size()) {
      fail("entity '" + name + "' has token " + std::to_string(e.first_token_id) + " >= vocab size " +
           std::to_string(vocab_size()));
    }
  }
  for (const auto& [name, v] : relations) {
    if (v.size() != d) fail("relation '" + name + "' has dim " + std::to_string(v.size()));
  }
}

bool operator==(const EmbeddingStore& a, const EmbeddingStore& b) {
  auto same = [](const auto& x, const auto& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && (x.size() == 0 || x == y);
  };
  return a.d == b.d && a.layer_index == b.layer_index && same(a.head_weights, b.head_weights) &&
         same(a.head_bias, b.head_bias) && a.entities == b.entities && a.relations.size() == b.relations.size() &&
         std::equal(a.relations.begin(), a.relations.end(), b.relations.begin(),
                    [&](const auto& x, const auto& y) { return x.first == y.first && same(x.second, y.second); });
}

Eigen::VectorXd head_logits(const EmbeddingStore& store, const Eigen::VectorXd& x) {
  if (x.size() != store.d) {
    throw std::invalid_argument("head input has dim " + std::to_string(x.size()) + ", store d is " +
                                std::to_string(store.d));
  }
  Eigen::VectorXd logits = store.head_weights * x;
  if (store.head_bias.size() != 0) logits += store.head_bias;
  return logits;
}

std::uint32_t head_decode(const EmbeddingStore& store, const Eigen::VectorXd& x) {
  const Eigen::VectorXd logits = head_logits(store, x);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < logits.size(); ++i) {
    if (logits(i) > logits(best)) best = i;
  }
  return static_cast<std::uint32_t>(best);
}

namespace {

Eigen::VectorXd standard_normal(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = normal(rng);
  return v;
}

}  // namespace

EmbeddingStore randomize_relation_embeddings(const EmbeddingStore& store, std::uint64_t seed) {
  EmbeddingStore out = store;
  std::mt19937_64 rng(seed);
  for (auto& [name, v] : out.relations) v = standard_normal(store.d, rng);
  return out;
}

EmbeddingStore randomize_entity_embeddings(const EmbeddingStore& store, std::uint64_t seed) {
  EmbeddingStore out = store;
  std::mt19937_64 rng(seed);
  for (auto& [name, e] : out.entities) e.vector = standard_normal(store.d, rng);
  return out;
}

void save_store(const EmbeddingStore& store, const std::filesystem::path& path) {
  store.validate();
  ByteWriter w;
  w.header(SectionTag::Store);
  w.u32(static_cast<std::uint32_t>(store.d));
  w.u32(store.layer_index);
  w.u32(static_cast<std::uint32_t>(store.vocab_size()));
  const bool has_bias = store.head_bias.size() != 0;
  w.u8(has_bias ? 1 : 0);
  for (Eigen::Index t = 0; t < store.vocab_size(); ++t) {
    for (Eigen::Index j = 0; j < store.d; ++j) w.f64(store.head_weights(t, j));
  }
  if (has_bias) {
    for (Eigen::Index t = 0; t < store.vocab_size(); ++t) w.f64(store.head_bias(t));
  }
  w.u32(static_cast<std::uint32_t>(store.entities.size()));
  for (const auto& [name, e] : store.entities) {
    w.short_string(name);
    w.u32(e.first_token_id);
    for (Eigen::Index j = 0; j < store.d; ++j) w.f64(e.vector(j));
  }
  w.u32(static_cast<std::uint32_t>(store.relations.size()));
  for (const auto& [name, v] : store.relations) {
    w.short_string(name);
    for (Eigen::Index j = 0; j < store.d; ++j) w.f64(v(j));
  }
  w.write_file(path);
}

EmbeddingStore load_store(const std::filesystem::path& path) {
  ByteReader r = ByteReader::from_file(path);
  r.header(SectionTag::Store);
  EmbeddingStore s;
  s.d = r.u32();
  s.layer_index = r.u32();
  const std::uint32_t V = r.u32();
  const bool has_bias = r.u8() != 0;
  if (s.d == 0 || V == 0) throw StoreError(StoreError::Kind::Invalid, "store header has zero d or vocab size");
  // Guard the allocation against a corrupt header before reading the matrix.
  if (static_cast<double>(V) * static_cast<double>(s.d) * 8.0 > static_cast<double>(r.remaining())) {
    throw StoreError(StoreError::Kind::Truncated, "truncated file: head matrix of " + std::to_string(V) + " x " +
                                                      std::to_string(s.d) + " does not fit");
  }
  s.head_weights.resize(V, s.d);
  for (std::uint32_t t = 0; t < V; ++t) {
    for (Eigen::Index j = 0; j < s.d; ++j) s.head_weights(t, j) = r.f64();
  }
  if (has_bias) {
    s.head_bias.resize(V);
    for (std::uint32_t t = 0; t < V; ++t) s.head_bias(t) = r.f64();
  }
  const std::uint32_t n_entities = r.u32();
  for (std::uint32_t k = 0; k < n_entities; ++k) {
    std::string name = r.short_string();
    Entity e;
    e.first_token_id = r.u32();
    e.vector.resize(s.d);
    for (Eigen::Index j = 0; j < s.d; ++j) e.vector(j) = r.f64();
    if (!s.entities.emplace(std::move(name), std::move(e)).second) {
      throw StoreError(StoreError::Kind::Invalid, "duplicate entity name");
    }
  }
  const std::uint32_t n_relations = r.u32();
  for (std::uint32_t k = 0; k < n_relations; ++k) {
    std::string name = r.short_string();
    Eigen::VectorXd v(s.d);
    for (Eigen::Index j = 0; j < s.d; ++j) v(j) = r.f64();
    if (!s.relations.emplace(std::move(name), std::move(v)).second) {
      throw StoreError(StoreError::Kind::Invalid, "duplicate relation name");
    }
  }
  if (r.remaining() != 0) throw StoreError(StoreError::Kind::Invalid, "trailing bytes after store");
  s.validate();
  return s;
}

}  // namespace relkit
