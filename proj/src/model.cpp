#include "relkit/model.hpp"

#include "relkit/binary_io.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace relkit {

std::string to_string(Architecture kind) {
  return kind == Architecture::Simple ? "simple" : "triangle";
}

Architecture architecture_from_string(const std::string& name) {
  if (name == "simple") return Architecture::Simple;
  if (name == "triangle") return Architecture::Triangle;
  throw std::invalid_argument("unknown architecture '" + name + "' (expected simple or triangle)");
}

std::vector<Index> ArchitectureConfig::resolved_embedder_widths() const {
  if (!use_relation_embedder) return {};
  if (embedder_widths.empty()) return {d, d, d};
  return embedder_widths;
}

void ArchitectureConfig::validate() const {
  auto positive = [](Index v, const char* name) {
    if (v < 1) throw std::invalid_argument(std::string(name) + " must be >= 1, got " + std::to_string(v));
  };
  positive(d, "d");
  positive(subject_dim, "d_s'");
  positive(relation_dim, "d_r'");
  positive(object_dim, "d_o'");
  if (kind == Architecture::Triangle) {
    positive(x_dim, "d_x");
    positive(y_dim, "d_y");
    positive(z_dim, "d_z");
  }
  if (use_relation_embedder) {
    const auto widths = resolved_embedder_widths();
    for (Index w : widths) positive(w, "embedder width");
    if (widths.back() != d) {
      throw std::invalid_argument("last embedder width must equal d (" + std::to_string(d) + "), got " +
                                  std::to_string(widths.back()));
    }
  }
  if (!(init_gain > 0.0) || !std::isfinite(init_gain)) throw std::invalid_argument("init_gain must be positive");
}

ParamCount param_count(const ArchitectureConfig& c) {
  c.validate();
  const std::int64_t d = c.d, ds = c.subject_dim, dr = c.relation_dim, dob = c.object_dim;
  ParamCount n;
  n.projections = d * ds + d * dr + d * dob;
  n.bias_augmentation = ds;
  if (c.kind == Architecture::Simple) {
    n.formula = n.projections + ds * dr * dob;
    n.cores = ds * dr * dob;
  } else {
    const std::int64_t dx = c.x_dim, dy = c.y_dim, dz = c.z_dim;
    n.formula = n.projections + 3 * ds * dr * dob;
    n.cores = ds * dy * dz + dx * dr * dz + dx * dy * dob;
  }
  std::int64_t in = d;
  for (Index w : c.resolved_embedder_widths()) {
    n.embedder += in * w + w;
    in = w;
  }
  return n;
}

std::int64_t stacked_dense_param_count(std::int64_t n_relations, std::int64_t d) {
  return n_relations * d * d;
}

Eigen::VectorXd AffineDecoder::apply(const Eigen::VectorXd& subject) const {
  if (subject.size() != W.cols()) {
    throw std::invalid_argument("subject has dim " + std::to_string(subject.size()) + ", decoder expects " +
                                std::to_string(W.cols()));
  }
  return W * subject + b;
}

Eigen::MatrixXd AffineDecoder::augmented() const {
  Eigen::MatrixXd D(W.cols() + 1, W.rows());
  D.topRows(W.cols()) = W.transpose();
  D.row(W.cols()) = b.transpose();
  return D;
}

AffineDecoder AffineDecoder::from_augmented(const Eigen::MatrixXd& D) {
  if (D.rows() != D.cols() + 1) throw std::invalid_argument("augmented decoder must be (d+1) x d");
  const Index d = D.cols();
  return AffineDecoder{D.topRows(d).transpose(), D.row(d).transpose()};
}

Eigen::VectorXd apply_decoder(const AffineDecoder& dec, const Eigen::VectorXd& subject) {
  return dec.apply(subject);
}

std::int64_t TensorNetworkModel::stored_scalars() const {
  std::int64_t n = 0;
  for (const auto& [name, t] : parameters) n += t.size();
  return n;
}

TensorNetworkModel allocate_model(const ArchitectureConfig& c) {
  c.validate();
  TensorNetworkModel m;
  m.config = c;
  auto add = [&](const std::string& name, std::vector<Leg> legs) { m.parameters.emplace(name, Tensor(std::move(legs))); };
  add("P1", {{"s", c.d + 1}, {"s'", c.subject_dim}});
  add("P2", {{"r", c.d}, {"r'", c.relation_dim}});
  add("P3", {{"o", c.d}, {"o'", c.object_dim}});
  if (c.kind == Architecture::Simple) {
    add("T0", {{"s'", c.subject_dim}, {"r'", c.relation_dim}, {"o'", c.object_dim}});
  } else {
    add("T1", {{"s'", c.subject_dim}, {"y", c.y_dim}, {"z", c.z_dim}});
    add("T2", {{"x", c.x_dim}, {"r'", c.relation_dim}, {"z", c.z_dim}});
    add("T3", {{"x", c.x_dim}, {"y", c.y_dim}, {"o'", c.object_dim}});
  }
  Index in = c.d;
  const auto widths = c.resolved_embedder_widths();
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const std::string prefix = "embedder." + std::to_string(i);
    add(prefix + ".weight", {{"out", widths[i]}, {"in", in}});
    add(prefix + ".bias", {{"out", widths[i]}});
    in = widths[i];
  }
  return m;
}

TensorNetworkModel init_model(const ArchitectureConfig& config, std::uint64_t seed) {
  TensorNetworkModel m = allocate_model(config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& [name, t] : m.parameters) {
    if (name.ends_with(".bias")) continue;
    const Index fan_in = name.ends_with(".weight") ? t.dim("in") : t.leg(0).dim;
    const double scale = config.init_gain / std::sqrt(static_cast<double>(fan_in));
    for (Index i = 0; i < t.size(); ++i) t.data()(i) = scale * normal(rng);
  }
  return m;
}

EmbedderTrace embed_relation(const TensorNetworkModel& model, const Eigen::VectorXd& relation) {
  if (relation.size() != model.config.d) {
    throw std::invalid_argument("relation embedding has dim " + std::to_string(relation.size()) + ", model expects " +
                                std::to_string(model.config.d));
  }
  EmbedderTrace trace;
  Eigen::VectorXd x = relation;
  const auto widths = model.config.resolved_embedder_widths();
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const std::string prefix = "embedder." + std::to_string(i);
    const auto W = model.param(prefix + ".weight").as_matrix();
    const auto& b = model.param(prefix + ".bias").data();
    trace.inputs.push_back(x);
    Eigen::VectorXd pre = W * x + b;
    trace.pre_activations.push_back(pre);
    x = (i + 1 < widths.size()) ? Eigen::VectorXd(pre.cwiseMax(0.0)) : pre;
  }
  trace.output = std::move(x);
  return trace;
}

NetworkSpec decoder_network(const TensorNetworkModel& model, const Eigen::VectorXd& relation_input) {
  const auto& p = model.parameters;
  NetworkSpec spec;
  spec.add_node("rel", Tensor::vector("r", relation_input));
  spec.add_node("P2", p.at("P2"));
  if (model.config.kind == Architecture::Simple) {
    spec.add_node("T0", p.at("T0"));
    spec.add_node("P1", p.at("P1"));
    spec.add_node("P3", p.at("P3"));
    spec.bond("rel", "r", "P2", "r")
        .bond("P2", "r'", "T0", "r'")
        .bond("T0", "s'", "P1", "s'")
        .bond("T0", "o'", "P3", "o'");
  } else {
    spec.add_node("T2", p.at("T2"));
    spec.add_node("T1", p.at("T1"));
    spec.add_node("T3", p.at("T3"));
    spec.add_node("P1", p.at("P1"));
    spec.add_node("P3", p.at("P3"));
    spec.bond("rel", "r", "P2", "r")
        .bond("P2", "r'", "T2", "r'")
        .bond("T2", "z", "T1", "z")
        .bond("T2", "x", "T3", "x")
        .bond("T1", "y", "T3", "y")
        .bond("T1", "s'", "P1", "s'")
        .bond("T3", "o'", "P3", "o'");
  }
  spec.free("P1", "s").free("P3", "o");
  return spec;
}

AffineDecoder materialize_decoder(const TensorNetworkModel& model, const Eigen::VectorXd& relation) {
  const EmbedderTrace trace = embed_relation(model, relation);
  const Tensor D = contract_network(decoder_network(model, trace.output));
  return AffineDecoder::from_augmented(D.as_matrix());
}

void accumulate_decoder_gradient(const TensorNetworkModel& model, const Eigen::VectorXd& relation,
                                 const Eigen::MatrixXd& grad_augmented, std::map<std::string, Tensor>& grads) {
  const EmbedderTrace trace = embed_relation(model, relation);
  const NetworkSpec spec = decoder_network(model, trace.output);
  const Tensor cot = Tensor::matrix("s", "o", grad_augmented);
  for (const auto& [name, t] : spec.nodes) {
    if (name == "rel") continue;
    grads.at(name).data() += network_vjp(spec, cot, name).data();
  }
  const auto widths = model.config.resolved_embedder_widths();
  if (widths.empty()) return;

  Eigen::VectorXd g = network_vjp(spec, cot, "rel").data();
  for (std::size_t i = widths.size(); i-- > 0;) {
    const std::string prefix = "embedder." + std::to_string(i);
    if (i + 1 < widths.size()) g = g.cwiseProduct((trace.pre_activations[i].array() > 0.0).cast<double>().matrix());
    Eigen::Map<Tensor::RowMajorMatrix> gW(grads.at(prefix + ".weight").data().data(), widths[i],
                                          trace.inputs[i].size());
    gW.noalias() += g * trace.inputs[i].transpose();
    grads.at(prefix + ".bias").data() += g;
    g = model.param(prefix + ".weight").as_matrix().transpose() * g;
  }
}

void save_model(const TensorNetworkModel& model, const std::filesystem::path& path) {
  const auto& c = model.config;
  ByteWriter w;
  w.header(SectionTag::Model);
  w.u32(c.kind == Architecture::Simple ? 0 : 1);
  for (Index v : {c.d, c.subject_dim, c.relation_dim, c.object_dim, c.x_dim, c.y_dim, c.z_dim}) {
    w.u32(static_cast<std::uint32_t>(v));
  }
  w.u8(c.use_relation_embedder ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(c.embedder_widths.size()));
  for (Index v : c.embedder_widths) w.u32(static_cast<std::uint32_t>(v));
  w.f64(c.init_gain);
  w.u32(static_cast<std::uint32_t>(model.parameters.size()));
  for (const auto& [name, t] : model.parameters) {
    w.short_string(name);
    w.u32(static_cast<std::uint32_t>(t.order()));
    for (const auto& l : t.legs()) {
      w.short_string(l.label);
      w.u32(static_cast<std::uint32_t>(l.dim));
    }
    for (Index i = 0; i < t.size(); ++i) w.f64(t.data()(i));
  }
  w.write_file(path);
}

TensorNetworkModel load_model(const std::filesystem::path& path) {
  ByteReader r = ByteReader::from_file(path);
  r.header(SectionTag::Model);
  ArchitectureConfig c;
  const std::uint32_t kind = r.u32();
  if (kind > 1) throw StoreError(StoreError::Kind::Invalid, "unknown architecture kind " + std::to_string(kind));
  c.kind = kind == 0 ? Architecture::Simple : Architecture::Triangle;
  c.d = r.u32();
  c.subject_dim = r.u32();
  c.relation_dim = r.u32();
  c.object_dim = r.u32();
  c.x_dim = r.u32();
  c.y_dim = r.u32();
  c.z_dim = r.u32();
  c.use_relation_embedder = r.u8() != 0;
  const std::uint32_t n_widths = r.u32();
  for (std::uint32_t i = 0; i < n_widths; ++i) c.embedder_widths.push_back(r.u32());
  c.init_gain = r.f64();

  TensorNetworkModel m;
  try {
    m = allocate_model(c);
  } catch (const std::invalid_argument& e) {
    throw StoreError(StoreError::Kind::Invalid, std::string("invalid model config: ") + e.what());
  }
  const std::uint32_t n_tensors = r.u32();
  if (n_tensors != m.parameters.size()) {
    throw StoreError(StoreError::Kind::Invalid, "model file holds " + std::to_string(n_tensors) + " tensors, config needs " +
                                                    std::to_string(m.parameters.size()));
  }
  for (std::uint32_t k = 0; k < n_tensors; ++k) {
    const std::string name = r.short_string();
    auto it = m.parameters.find(name);
    if (it == m.parameters.end()) throw StoreError(StoreError::Kind::Invalid, "unexpected tensor '" + name + "'");
    Tensor& t = it->second;
    const std::uint32_t order = r.u32();
    if (order != t.order()) throw StoreError(StoreError::Kind::Invalid, "tensor '" + name + "' has wrong order");
    for (std::uint32_t a = 0; a < order; ++a) {
      const std::string label = r.short_string();
      const std::uint32_t dim = r.u32();
      if (label != t.leg(a).label || dim != t.leg(a).dim) {
        throw StoreError(StoreError::Kind::Invalid, "tensor '" + name + "' leg " + std::to_string(a) + " mismatch");
      }
    }
    for (Index i = 0; i < t.size(); ++i) t.data()(i) = r.f64();
  }
  if (r.remaining() != 0) throw StoreError(StoreError::Kind::Invalid, "trailing bytes after model");
  return m;
}

}  // namespace relkit
