#include "relkit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace relkit {

FaithfulnessReport faithfulness(const AffineDecoder& dec, const RelationRecord& relation, const EmbeddingStore& store,
                                std::string decoder_id) {
  FaithfulnessReport rep;
  rep.relation = relation.name;
  rep.decoder_id = decoder_id.empty() ? relation.name : std::move(decoder_id);
  rep.n_samples = relation.samples.size();
  for (const auto& s : relation.samples) {
    const Entity& subj = store.entity(s.subject);
    const Entity& obj = store.entity(s.object);
    if (head_decode(store, dec.apply(subj.vector)) == obj.first_token_id) ++rep.n_correct;
  }
  return rep;
}

std::vector<FaithfulnessReport> evaluate_model(const TensorNetworkModel& model, const RelationDataset& data,
                                               const EmbeddingStore& store) {
  std::vector<FaithfulnessReport> out;
  out.reserve(data.size());
  for (const auto& r : data) {
    out.push_back(faithfulness(materialize_decoder(model, store.relation(r.name)), r, store));
  }
  return out;
}

double mean_score(const std::vector<FaithfulnessReport>& reports) {
  if (reports.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : reports) sum += r.score();
  return sum / static_cast<double>(reports.size());
}

CrossEvalMatrix CrossEvalMatrix::reordered() const {
  CrossEvalMatrix out;
  const std::size_t k = size();
  out.scores.resize(static_cast<Index>(k), static_cast<Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    out.relations.push_back(relations[order[i]]);
    for (std::size_t j = 0; j < k; ++j) {
      out.scores(static_cast<Index>(i), static_cast<Index>(j)) =
          scores(static_cast<Index>(order[i]), static_cast<Index>(order[j]));
    }
    out.order.push_back(i);
  }
  return out;
}

CrossEvalMatrix cross_evaluate(const std::vector<NamedDecoder>& decoders, const RelationDataset& data,
                               const EmbeddingStore& store) {
  std::set<std::string> dec_names, data_names;
  for (const auto& [name, dec] : decoders) {
    if (!dec_names.insert(name).second) throw std::invalid_argument("duplicate decoder for '" + name + "'");
  }
  for (const auto& r : data) data_names.insert(r.name);
  if (dec_names != data_names) {
    throw std::invalid_argument("decoder relations and dataset relations differ");
  }
  CrossEvalMatrix m;
  const auto k = static_cast<Index>(decoders.size());
  m.scores.resize(k, k);
  for (Index j = 0; j < k; ++j) {
    m.relations.push_back(decoders[static_cast<std::size_t>(j)].first);
    m.order.push_back(static_cast<std::size_t>(j));
  }
  for (Index j = 0; j < k; ++j) {
    const auto& [src, dec] = decoders[static_cast<std::size_t>(j)];
    for (Index l = 0; l < k; ++l) {
      const auto& rel = find_relation(data, m.relations[static_cast<std::size_t>(l)]);
      m.scores(j, l) = faithfulness(dec, rel, store, src).score();
    }
  }
  return m;
}

std::vector<std::size_t> cluster_order(const Eigen::MatrixXd& scores) {
  const auto k = static_cast<std::size_t>(scores.rows());
  if (k == 0) return {};
  Eigen::MatrixXd dist(scores.rows(), scores.rows());
  for (Index i = 0; i < scores.rows(); ++i) {
    for (Index j = 0; j < scores.rows(); ++j) dist(i, j) = (scores.row(i) - scores.row(j)).norm();
  }
  // Each cluster keeps its member rows (for average linkage) and leaf order.
  struct Cluster {
    std::vector<std::size_t> members;
  };
  std::vector<Cluster> clusters;
  for (std::size_t i = 0; i < k; ++i) clusters.push_back({{i}});
  while (clusters.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 1;
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        double sum = 0.0;
        for (auto x : clusters[a].members) {
          for (auto y : clusters[b].members) sum += dist(static_cast<Index>(x), static_cast<Index>(y));
        }
        const double avg = sum / static_cast<double>(clusters[a].members.size() * clusters[b].members.size());
        if (avg < best) {
          best = avg;
          ba = a;
          bb = b;
        }
      }
    }
    clusters[ba].members.insert(clusters[ba].members.end(), clusters[bb].members.begin(), clusters[bb].members.end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bb));
  }
  return clusters.front().members;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

}  // namespace

std::string cross_eval_csv(const CrossEvalMatrix& m) {
  std::ostringstream out;
  out << "relation";
  for (const auto& n : m.relations) out << ',' << csv_field(n);
  out << '\n';
  for (std::size_t j = 0; j < m.size(); ++j) {
    out << csv_field(m.relations[j]);
    for (std::size_t l = 0; l < m.size(); ++l) out << ',' << fixed(m.scores(static_cast<Index>(j), static_cast<Index>(l)), 6);
    out << '\n';
  }
  return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_cross_eval_csv(const CrossEvalMatrix& m, const std::filesystem::path& path) {
  write_text_file(path, cross_eval_csv(m));
}

std::string format_score(double value) { return fixed(value, 2); }

std::string heatmap_color(double value) {
  const double t = std::clamp(std::isfinite(value) ? value : 0.0, 0.0, 1.0);
  const int lo[3] = {0xf7, 0xfb, 0xff};
  const int hi[3] = {0x08, 0x30, 0x6b};
  char buf[8];
  int c[3];
  for (int i = 0; i < 3; ++i) c[i] = static_cast<int>(std::lround(lo[i] + t * (hi[i] - lo[i])));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

std::string cross_eval_svg(const CrossEvalMatrix& m) {
  const int cell = 40;
  const int label = 160;
  const int k = static_cast<int>(m.size());
  const int width = label + k * cell + 10;
  const int height = label + k * cell + 10;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int l = 0; l < k; ++l) {
    const int x = label + l * cell + cell / 2;
    out << "  <text x=\"" << x << "\" y=\"" << label - 6 << "\" transform=\"rotate(-60 " << x << ' ' << label - 6
        << ")\">" << xml_escape(m.relations[static_cast<std::size_t>(m.order[static_cast<std::size_t>(l)])])
        << "</text>\n";
  }
  for (int j = 0; j < k; ++j) {
    const auto row = static_cast<Index>(m.order[static_cast<std::size_t>(j)]);
    const int y = label + j * cell;
    out << "  <text x=\"" << label - 6 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"end\">"
        << xml_escape(m.relations[static_cast<std::size_t>(row)]) << "</text>\n";
    for (int l = 0; l < k; ++l) {
      const auto col = static_cast<Index>(m.order[static_cast<std::size_t>(l)]);
      const double v = m.scores(row, col);
      const int x = label + l * cell;
      out << "  <rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
          << "\" fill=\"" << heatmap_color(v) << "\"/>\n";
      out << "  <text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"middle\" fill=\""
          << (v > 0.5 ? "#ffffff" : "#000000") << "\">" << format_score(v) << "</text>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

void write_cross_eval_svg(const CrossEvalMatrix& m, const std::filesystem::path& path) {
  write_text_file(path, cross_eval_svg(m));
}

}  // namespace relkit
