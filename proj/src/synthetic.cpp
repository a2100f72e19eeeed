#include "relkit/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <stdexcept>

namespace relkit {

std::string to_string(TeacherKind kind) {
  switch (kind) {
    case TeacherKind::MathRamp:
      return "mathramp";
    case TeacherKind::Orthogonal:
      return "orthogonal";
    case TeacherKind::SharedProperty:
      return "shared";
  }
  return "unknown";
}

void SyntheticTeacherSpec::validate() const {
  if (d < 1) throw std::invalid_argument("d must be >= 1");
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  switch (kind) {
    case TeacherKind::MathRamp:
      if (number_min > number_max) throw std::invalid_argument("empty number range");
      if (vocab_min > number_min || vocab_max < number_max) {
        throw std::invalid_argument("vocabulary range must cover the number range");
      }
      if (!(ramp_step_norm > 0.0)) throw std::invalid_argument("ramp step norm must be positive");
      break;
    case TeacherKind::Orthogonal:
      if (n_relations < 1) throw std::invalid_argument("need at least one relation");
      [[fallthrough]];
    case TeacherKind::SharedProperty:
      if (kind == TeacherKind::SharedProperty) {
        if (group_sizes.empty()) throw std::invalid_argument("no groups given");
        for (int g : group_sizes) {
          if (g < 1) throw std::invalid_argument("empty group");
        }
      }
      if (samples_per_relation < 1) throw std::invalid_argument("samples_per_relation must be >= 1");
      break;
  }
}

namespace {

Eigen::VectorXd gaussian(Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(d);
  for (Index i = 0; i < d; ++i) v(i) = normal(rng);
  return v;
}

Eigen::VectorXd direction(Index d, double norm, std::mt19937_64& rng) {
  Eigen::VectorXd v = gaussian(d, rng);
  return v * (norm / v.norm());
}

/// Head rows 2 E(m) and bias -|E(m)|^2 for every entity token.
void nearest_neighbour_head(EmbeddingStore& store) {
  const Index V = static_cast<Index>(store.entities.size());
  store.head_weights = Eigen::MatrixXd::Zero(V, store.d);
  store.head_bias = Eigen::VectorXd::Zero(V);
  for (const auto& [name, e] : store.entities) {
    store.head_weights.row(e.first_token_id) = 2.0 * e.vector.transpose();
    store.head_bias(e.first_token_id) = -e.vector.squaredNorm();
  }
}

std::string relation_label(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "rel%02d", k);
  return buf;
}

SyntheticBundle grouped_store(const SyntheticTeacherSpec& spec, const std::vector<int>& groups) {
  std::mt19937_64 rng(spec.seed);
  const Index d = spec.d;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  std::vector<AffineDecoder> maps;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    AffineDecoder m;
    m.W.resize(d, d);
    for (Index j = 0; j < d; ++j) m.W.col(j) = gaussian(d, rng) * (spec.object_gain * inv_sqrt_d);
    m.b = direction(d, spec.offset_norm, rng);
    maps.push_back(std::move(m));
  }

  SyntheticBundle out;
  out.store.d = d;
  std::uint32_t next_token = 0;
  int k = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (int member = 0; member < groups[g]; ++member, ++k) {
      const std::string name = relation_label(k);
      RelationRecord rec;
      rec.name = name;
      rec.prompt_templates = {"{} is related by " + name + " to"};
      rec.zs_prompt_templates = {"Under " + name + ", {} maps to"};
      rec.relation_type = "group " + std::to_string(g);
      for (int i = 0; i < spec.samples_per_relation; ++i) {
        const std::string subj = name + ":s" + std::to_string(i);
        const std::string obj = name + ":o" + std::to_string(i);
        Eigen::VectorXd s = gaussian(d, rng) * (spec.subject_norm * inv_sqrt_d);
        Eigen::VectorXd o = maps[g].apply(s);
        if (spec.sigma > 0.0) {
          s += spec.sigma * inv_sqrt_d * gaussian(d, rng);
          o += spec.sigma * inv_sqrt_d * gaussian(d, rng);
        }
        out.store.entities.emplace(subj, Entity{std::move(s), next_token++});
        out.store.entities.emplace(obj, Entity{std::move(o), next_token++});
        rec.samples.push_back({subj, obj});
      }
      out.store.relations.emplace(name, direction(d, 1.0, rng));
      out.ground_truth.emplace(name, maps[g]);
      out.group.emplace(name, static_cast<int>(g));
      out.dataset.push_back(std::move(rec));
    }
  }
  nearest_neighbour_head(out.store);
  out.store.validate();
  return out;
}

}  // namespace

Eigen::VectorXd MathRampStore::relation_vector(int sign, int offset_value) const {
  return relation_base + static_cast<double>(sign * offset_value) * relation_step;
}

AffineDecoder MathRampStore::ground_truth(int sign, int offset_value) const {
  const Index d = step.size();
  return AffineDecoder{Eigen::MatrixXd::Identity(d, d), static_cast<double>(sign * offset_value) * step};
}

MathRampStore gen_math_store(const SyntheticTeacherSpec& spec) {
  if (spec.kind != TeacherKind::MathRamp) throw std::invalid_argument("gen_math_store needs kind MathRamp");
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  MathRampStore m;
  m.vocab_min = spec.vocab_min;
  m.step = direction(spec.d, spec.ramp_step_norm, rng);
  m.offset = direction(spec.d, spec.ramp_offset_norm, rng);
  m.relation_base = direction(spec.d, spec.relation_base_norm, rng);
  m.relation_step = direction(spec.d, spec.relation_step_norm, rng);

  EmbeddingStore& s = m.store;
  s.d = spec.d;
  const double jitter = spec.sigma / std::sqrt(static_cast<double>(spec.d));
  for (int n = spec.vocab_min; n <= spec.vocab_max; ++n) {
    Eigen::VectorXd e = static_cast<double>(n) * m.step + m.offset;
    if (spec.sigma > 0.0) e += jitter * gaussian(spec.d, rng);
    s.entities.emplace(std::to_string(n), Entity{std::move(e), m.token(n)});
  }
  for (int x : math_plus_offsets()) s.relations.emplace(math_relation_name(+1, x), m.relation_vector(+1, x));
  for (int x : math_minus_offsets()) s.relations.emplace(math_relation_name(-1, x), m.relation_vector(-1, x));
  nearest_neighbour_head(s);
  s.validate();
  return m;
}

SyntheticBundle gen_orthogonal_store(const SyntheticTeacherSpec& spec) {
  if (spec.kind != TeacherKind::Orthogonal) throw std::invalid_argument("gen_orthogonal_store needs kind Orthogonal");
  spec.validate();
  return grouped_store(spec, std::vector<int>(static_cast<std::size_t>(spec.n_relations), 1));
}

SyntheticBundle gen_shared_property_store(const SyntheticTeacherSpec& spec) {
  if (spec.kind != TeacherKind::SharedProperty) {
    throw std::invalid_argument("gen_shared_property_store needs kind SharedProperty");
  }
  spec.validate();
  return grouped_store(spec, spec.group_sizes);
}

std::vector<int> parse_group_sizes(const std::string& text) {
  std::vector<int> out;
  auto to_int = [&](const std::string& s) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty() || v < 1) throw std::invalid_argument("invalid group spec '" + text + "'");
    return v;
  };
  if (const auto x = text.find('x'); x != std::string::npos) {
    const int n = to_int(text.substr(0, x));
    const int size = to_int(text.substr(x + 1));
    out.assign(static_cast<std::size_t>(n), size);
    return out;
  }
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(to_int(part));
  if (out.empty()) throw std::invalid_argument("invalid group spec '" + text + "'");
  return out;
}

}  // namespace relkit
