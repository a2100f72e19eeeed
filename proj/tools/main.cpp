// relkit: command-line front end for data/store generation, training,
// evaluation, cross-evaluation, grid search, baselines and ablations.
//
// Exit codes: 0 success, 1 runtime error, 2 usage error.

#include "relkit/baselines.hpp"
#include "relkit/dataset.hpp"
#include "relkit/evaluation.hpp"
#include "relkit/model.hpp"
#include "relkit/store.hpp"
#include "relkit/synthetic.hpp"
#include "relkit/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

using namespace relkit;

std::uint64_t fnv1a64(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string() + " for hashing");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

/// Usage problems found after parsing (bad combinations, unknown names).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Run {
  std::string subcommand;
  std::map<std::string, std::uint64_t> seeds;
  std::vector<std::pair<std::string, fs::path>> inputs;
  std::vector<std::pair<std::string, fs::path>> outputs;
  fs::path manifest;

  void input(const std::string& role, const fs::path& p) { inputs.push_back({role, p}); }
  void output(const std::string& role, const fs::path& p) { outputs.push_back({role, p}); }
};

json resolved_config(const CLI::App& sub) {
  json cfg = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help" || name == "manifest") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      cfg[name] = r.size() == 1 ? json(r.front()) : json(r);
    } else if (!opt->get_default_str().empty()) {
      cfg[name] = opt->get_default_str();
    } else if (opt->get_type_size() == 0) {
      cfg[name] = "false";
    }
  }
  return cfg;
}

void write_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  write_text_file(tmp, text);
  fs::rename(tmp, path);
}

void write_manifest(const Run& run, const CLI::App& sub, std::uint64_t seed, double seconds) {
  json m;
  m["subcommand"] = run.subcommand;
  m["config"] = resolved_config(sub);
  if (m["config"].contains("seed")) m["config"]["seed"] = std::to_string(seed);
  m["seeds"] = json::object();
  for (const auto& [k, v] : run.seeds) m["seeds"][k] = v;
  m["inputs"] = json::object();
  m["outputs"] = json::object();
  m["hashes"] = json::object();
  for (const auto& [role, p] : run.inputs) {
    m["inputs"][role] = p.string();
    m["hashes"][p.string()] = "fnv1a64:" + hex64(fnv1a64(p));
  }
  for (const auto& [role, p] : run.outputs) {
    m["outputs"][role] = p.string();
    m["hashes"][p.string()] = "fnv1a64:" + hex64(fnv1a64(p));
  }
  m["finished_at"] = utc_now();
  m["wall_clock_seconds"] = seconds;
  write_atomic(run.manifest, m.dump(2) + "\n");
}

fs::path default_manifest(const fs::path& out) {
  fs::path p = out;
  p += ".manifest.json";
  return p;
}

SplitMode split_mode(const std::string& s) {
  if (s == "relation") return SplitMode::RelationWise;
  if (s == "sample") return SplitMode::SampleWise;
  throw UsageError("unknown split '" + s + "'");
}

struct TrainFlags {
  std::string optimizer = "sgd";
  double lr = 1e-3;
  int batch = 16;
  int iters = 15000;
  int plateau_window = 500;
  double plateau_tol = 1e-6;
  int log_every = 100;

  void add(CLI::App* app) {
    app->add_option("--optimizer", optimizer, "sgd, adam or adamw")
        ->check(CLI::IsMember({"sgd", "adam", "adamw"}));
    app->add_option("--lr", lr, "Learning rate")->check(CLI::NonNegativeNumber);
    app->add_option("--batch", batch, "Batch size")->check(CLI::PositiveNumber);
    app->add_option("--iters", iters, "Iterations")->check(CLI::PositiveNumber);
    app->add_option("--plateau-window", plateau_window, "Early-stop window (0 disables)")->check(CLI::NonNegativeNumber);
    app->add_option("--plateau-tol", plateau_tol, "Early-stop tolerance");
    app->add_option("--log-every", log_every, "Loss logging interval")->check(CLI::NonNegativeNumber);
  }

  TrainConfig config(std::uint64_t seed) const {
    TrainConfig c;
    c.optimizer = optimizer_from_string(optimizer);
    c.learning_rate = lr;
    c.batch_size = batch;
    c.iterations = iters;
    c.seed = seed;
    c.log_every = log_every;
    c.plateau_window = plateau_window;
    c.plateau_tolerance = plateau_tol;
    return c;
  }
};

struct DataFlags {
  fs::path store;
  fs::path data;
  std::string split = "none";
  double ratio = 0.75;

  void add(CLI::App* app, bool with_split) {
    app->add_option("--store", store, "Embedding store")->required()->check(CLI::ExistingFile);
    app->add_option("--data", data, "Dataset JSON")->required()->check(CLI::ExistingFile);
    if (with_split) {
      app->add_option("--split", split, "none, relation or sample")
          ->check(CLI::IsMember({"none", "relation", "sample"}));
      app->add_option("--ratio", ratio, "Train fraction of the split")->check(CLI::Range(0.0, 1.0));
    }
  }
};

struct Loaded {
  EmbeddingStore store;
  RelationDataset train;
  RelationDataset test;
  bool has_test = false;
};

Loaded load_inputs(const DataFlags& f, std::uint64_t seed, Run& run) {
  Loaded l;
  l.store = load_store(f.store);
  run.input("store", f.store);
  l.train = load_dataset_json(f.data);
  run.input("data", f.data);
  if (f.split != "none") {
    DatasetSplit s = split(l.train, split_mode(f.split), f.ratio, seed);
    l.train = std::move(s.train);
    l.test = std::move(s.test);
    l.has_test = true;
  }
  return l;
}

json faithfulness_json(const std::vector<FaithfulnessReport>& reports) {
  json out = json::object();
  for (const auto& r : reports) {
    out[r.relation] = {{"n_samples", r.n_samples}, {"n_correct", r.n_correct}, {"score", r.score()}};
  }
  return out;
}

int cmd_gen_data(const std::string& kind, int number_max, const fs::path& out, Run& run) {
  if (kind != "math") throw UsageError("unknown dataset kind '" + kind + "'");
  const RelationDataset data = generate_math_dataset(number_max);
  for (const auto& w : check_math_counts(data)) std::cerr << "warning: " << w << "\n";
  save_dataset_json(data, out);
  run.output("data", out);
  std::cout << "wrote " << data.size() << " relations to " << out.string() << "\n";
  return 0;
}

struct StoreFlags {
  std::string kind = "mathramp";
  Index d = 64;
  double sigma = 0.0;
  std::string groups = "2x3";
  int relations = 8;
  int samples = 96;
  int number_max = 200;
  fs::path out;
  fs::path data_out;
};

int cmd_gen_store(const StoreFlags& f, std::uint64_t seed, Run& run) {
  SyntheticTeacherSpec spec;
  spec.d = f.d;
  spec.seed = seed;
  spec.sigma = f.sigma;
  spec.n_relations = f.relations;
  spec.samples_per_relation = f.samples;
  run.seeds["store"] = seed;
  EmbeddingStore store;
  RelationDataset data;
  if (f.kind == "mathramp") {
    spec.kind = TeacherKind::MathRamp;
    spec.number_max = f.number_max;
    store = gen_math_store(spec).store;
    data = generate_math_dataset(f.number_max);
  } else if (f.kind == "orthogonal") {
    spec.kind = TeacherKind::Orthogonal;
    SyntheticBundle b = gen_orthogonal_store(spec);
    store = std::move(b.store);
    data = std::move(b.dataset);
  } else if (f.kind == "shared") {
    spec.kind = TeacherKind::SharedProperty;
    spec.group_sizes = parse_group_sizes(f.groups);
    SyntheticBundle b = gen_shared_property_store(spec);
    store = std::move(b.store);
    data = std::move(b.dataset);
  } else {
    throw UsageError("unknown store kind '" + f.kind + "'");
  }
  save_store(store, f.out);
  run.output("store", f.out);
  if (!f.data_out.empty()) {
    save_dataset_json(data, f.data_out);
    run.output("data", f.data_out);
  }
  std::cout << "wrote store d=" << store.d << " with " << store.entities.size() << " entities and "
            << store.relations.size() << " relations to " << f.out.string() << "\n";
  return 0;
}

struct ArchFlags {
  std::string arch = "simple";
  Index dr = 4;
  Index ds = 32;
  Index dout = 32;
  Index inner = 50;
  bool embedder = false;
  double init_gain = 1.0;

  void add(CLI::App* app) {
    app->add_option("--arch", arch, "simple or triangle")->check(CLI::IsMember({"simple", "triangle"}));
    app->add_option("--dr", dr, "Relation bond dim d_r'")->check(CLI::PositiveNumber);
    app->add_option("--ds", ds, "Subject bond dim d_s'")->check(CLI::PositiveNumber);
    app->add_option("--do", dout, "Object bond dim d_o'")->check(CLI::PositiveNumber);
    app->add_option("--inner", inner, "Triangle inner bond dims")->check(CLI::PositiveNumber);
    app->add_flag("--embedder", embedder, "Use the relation embedder");
    app->add_option("--init-gain", init_gain, "Initialization gain");
  }

  ArchitectureConfig config(Index d) const {
    ArchitectureConfig c;
    c.kind = architecture_from_string(arch);
    c.d = d;
    c.relation_dim = dr;
    c.subject_dim = ds;
    c.object_dim = dout;
    if (c.kind == Architecture::Triangle) c.x_dim = c.y_dim = c.z_dim = inner;
    c.use_relation_embedder = embedder;
    c.init_gain = init_gain;
    return c;
  }
};

int cmd_train(const DataFlags& df, const ArchFlags& af, const TrainFlags& tf, std::uint64_t seed,
              const fs::path& out, const fs::path& report, Run& run) {
  Loaded in = load_inputs(df, seed, run);
  const ArchitectureConfig cfg = af.config(in.store.d);
  TensorNetworkModel model = init_model(cfg, seed);
  run.seeds["model"] = seed;
  run.seeds["train"] = seed;
  run.seeds["split"] = seed;
  const TrainResult res = train(model, in.store, in.train, tf.config(seed), [](LossRecord& r) {
    std::cerr << "iter " << r.iteration << " loss " << r.loss << "\n";
  });
  save_model(model, out);
  run.output("model", out);

  json rep;
  rep["params"] = {{"formula", param_count(cfg).formula}, {"actual", param_count(cfg).actual()}};
  rep["iterations_run"] = res.iterations_run;
  rep["stopped_early"] = res.stopped_early;
  json curve = json::array();
  for (const auto& l : res.losses) curve.push_back({{"iteration", l.iteration}, {"loss", l.loss}});
  rep["losses"] = curve;
  const auto train_reports = evaluate_model(model, in.train, in.store);
  rep["train"] = {{"mean_faithfulness", mean_score(train_reports)}, {"relations", faithfulness_json(train_reports)}};
  std::cout << "train faithfulness " << format_score(mean_score(train_reports)) << "\n";
  if (in.has_test) {
    const auto test_reports = evaluate_model(model, in.test, in.store);
    std::vector<double> majority;
    for (const auto& r : in.test) majority.push_back(majority_baseline(r).faithfulness);
    double maj = 0.0;
    for (double m : majority) maj += m;
    maj /= static_cast<double>(std::max<std::size_t>(majority.size(), 1));
    rep["test"] = {{"mean_faithfulness", mean_score(test_reports)},
                   {"majority_baseline", maj},
                   {"relations", faithfulness_json(test_reports)}};
    std::cout << "test faithfulness " << format_score(mean_score(test_reports)) << " (majority "
              << format_score(maj) << ")\n";
  }
  if (!report.empty()) {
    write_text_file(report, rep.dump(2) + "\n");
    run.output("report", report);
  }
  return 0;
}

template <class T>
std::vector<T> parse_list(const std::string& text, const std::string& what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(static_cast<T>(v));
    } catch (const std::exception&) {
      throw UsageError("bad " + what + " list '" + text + "'");
    }
  }
  if (out.empty()) throw UsageError("empty " + what + " list");
  return out;
}

struct GridFlags {
  std::string archs = "simple,triangle";
  std::string drs = "2,4,6,8,30,100";
  std::string dso = "10,50,100,300";
  std::string embedder = "off,on";
  Index inner = 50;
  int jobs = 1;
  std::string ranks;
  fs::path out;
  fs::path low_rank_out;
};

int cmd_grid(const DataFlags& df, const GridFlags& gf, const TrainFlags& tf, std::uint64_t seed, Run& run) {
  Loaded in = load_inputs(df, seed, run);
  GridSpec g;
  g.architectures.clear();
  std::stringstream ss(gf.archs);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      g.architectures.push_back(architecture_from_string(item));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  g.relation_dims = parse_list<Index>(gf.drs, "--dr");
  g.subject_object_dims = parse_list<Index>(gf.dso, "--dso");
  g.embedder.clear();
  std::stringstream es(gf.embedder);
  while (std::getline(es, item, ',')) {
    if (item != "on" && item != "off") throw UsageError("--embedder takes on/off values");
    g.embedder.push_back(item == "on");
  }
  g.triangle_inner_dim = gf.inner;
  g.model_seed = seed;
  g.train = tf.config(seed);
  g.jobs = gf.jobs;
  run.seeds["model"] = seed;
  run.seeds["train"] = seed;
  const auto rows = grid_search(g, in.store, in.train, in.has_test ? &in.test : nullptr);
  write_text_file(gf.out, grid_csv(rows));
  run.output("grid", gf.out);
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.status != "ok";
  std::cout << "wrote " << rows.size() << " grid rows (" << failed << " failed) to " << gf.out.string() << "\n";
  if (!gf.ranks.empty()) {
    if (gf.low_rank_out.empty()) throw UsageError("--ranks needs --low-rank-out");
    const auto ranks = parse_list<Index>(gf.ranks, "--ranks");
    const RelationDataset* test = nullptr;
    if (in.has_test && df.split == "sample") test = &in.test;
    const auto lr = low_rank_sweep(ranks, in.store, in.train, tf.config(seed), test);
    write_text_file(gf.low_rank_out, low_rank_csv(lr));
    run.output("low_rank", gf.low_rank_out);
  }
  return 0;
}

std::string eval_csv(const std::vector<FaithfulnessReport>& reports) {
  std::ostringstream out;
  out << "relation,n_samples,n_correct,faithfulness\n";
  char buf[32];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%.6f", r.score());
    out << csv_field(r.relation) << ',' << r.n_samples << ',' << r.n_correct << ',' << buf << '\n';
  }
  return out.str();
}

int cmd_eval(const DataFlags& df, const fs::path& model_path, const fs::path& out, Run& run) {
  Loaded in = load_inputs(df, 0, run);
  const TensorNetworkModel model = load_model(model_path);
  run.input("model", model_path);
  if (model.config.d != in.store.d) {
    throw std::runtime_error("dimension mismatch: model d = " + std::to_string(model.config.d) +
                             ", store d = " + std::to_string(in.store.d));
  }
  const auto reports = evaluate_model(model, in.train, in.store);
  write_text_file(out, eval_csv(reports));
  run.output("report", out);
  std::cout << "mean faithfulness " << format_score(mean_score(reports)) << "\n";
  return 0;
}

int cmd_cross_eval(const DataFlags& df, const std::string& decoder, Index rank, const TrainFlags& tf,
                   bool cluster, std::uint64_t seed, const fs::path& csv, const fs::path& svg, Run& run) {
  Loaded in = load_inputs(df, seed, run);
  const TrainConfig cfg = tf.config(seed);
  run.seeds["train"] = seed;
  std::vector<NamedDecoder> decs;
  for (const auto& rel : in.train) {
    if (decoder == "full") {
      decs.push_back({rel.name, train_affine_decoder(rel, in.store, cfg)});
    } else if (decoder == "lowrank") {
      decs.push_back({rel.name, train_low_rank_baseline(rel, rank, in.store, cfg)});
    } else {
      throw UsageError("unknown decoder '" + decoder + "'");
    }
  }
  CrossEvalMatrix m = cross_evaluate(decs, in.train, in.store);
  if (cluster) m.order = cluster_order(m.scores);
  write_cross_eval_csv(m, csv);
  run.output("csv", csv);
  if (!svg.empty()) {
    write_cross_eval_svg(m, svg);
    run.output("svg", svg);
  }
  std::cout << "wrote " << m.size() << "x" << m.size() << " cross-evaluation matrix\n";
  return 0;
}

// The teacher for a relation is the least-squares affine map from subject
// to object embeddings over its samples.
TeacherFunction fitted_teacher(const RelationRecord& rel, const EmbeddingStore& store) {
  const Index d = store.d;
  const Index n = static_cast<Index>(rel.samples.size());
  Eigen::MatrixXd X(n, d + 1), Y(n, d);
  for (Index i = 0; i < n; ++i) {
    const auto& s = rel.samples[static_cast<std::size_t>(i)];
    X.row(i) << store.entity(s.subject).vector.transpose(), 1.0;
    Y.row(i) = store.entity(s.object).vector.transpose();
  }
  const AffineDecoder dec = AffineDecoder::from_augmented(X.completeOrthogonalDecomposition().solve(Y));
  return [dec](const Eigen::VectorXd& s) { return dec.apply(s); };
}

int cmd_jacobian(const DataFlags& df, int n_examples, double step, std::uint64_t seed, const fs::path& out,
                 Run& run) {
  Loaded in = load_inputs(df, seed, run);
  run.seeds["subjects"] = seed;
  std::ostringstream csv;
  csv << "relation,n_examples,faithfulness,majority_object,majority_faithfulness\n";
  char buf[64];
  for (const auto& rel : in.train) {
    const TeacherFunction teacher = fitted_teacher(rel, in.store);
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(n_examples), rel.samples.size());
    std::vector<Eigen::VectorXd> subjects;
    for (std::size_t i : choose_subjects(rel.samples.size(), n, seed)) {
      subjects.push_back(in.store.entity(rel.samples[i].subject).vector);
    }
    const AffineDecoder dec = jacobian_lre(teacher, subjects, static_cast<int>(n), step);
    const MajorityGuess maj = majority_baseline(rel);
    std::snprintf(buf, sizeof buf, "%.6f", faithfulness(dec, rel, in.store).score());
    csv << csv_field(rel.name) << ',' << n << ',' << buf << ',' << csv_field(maj.object) << ',';
    std::snprintf(buf, sizeof buf, "%.6f", maj.faithfulness);
    csv << buf << '\n';
  }
  write_text_file(out, csv.str());
  run.output("report", out);
  std::cout << "wrote Jacobian baseline for " << in.train.size() << " relations\n";
  return 0;
}

int cmd_ablate(const std::string& what, const fs::path& store_path, std::uint64_t seed, const fs::path& out,
               Run& run) {
  const EmbeddingStore store = load_store(store_path);
  run.input("store", store_path);
  run.seeds["randomize"] = seed;
  EmbeddingStore result;
  if (what == "relations") {
    result = randomize_relation_embeddings(store, seed);
  } else if (what == "entities") {
    result = randomize_entity_embeddings(store, seed);
  } else {
    throw UsageError("unknown ablation '" + what + "'");
  }
  save_store(result, out);
  run.output("store", out);
  std::cout << "randomized " << what << " into " << out.string() << "\n";
  return 0;
}

std::uint64_t env_seed() {
  const char* s = std::getenv("RELKIT_SEED");
  if (!s || !*s) return 0;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used == std::string(s).size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError(std::string("RELKIT_SEED is not an unsigned integer: '") + s + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relkit: tensor-network relation decoders"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI config file (flags override it)");
  app.option_defaults()->always_capture_default();

  std::uint64_t seed = 0;
  bool seed_given = false;
  fs::path manifest;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Seed for all randomness (default: $RELKIT_SEED or 0)")
        ->each([&](const std::string&) { seed_given = true; });
    sub->add_option("--manifest", manifest, "Run manifest path (default: <output>.manifest.json)");
  };

  auto* gen_data = app.add_subcommand("gen-data", "Write a relation dataset");
  std::string data_kind = "math";
  int data_number_max = 200;
  fs::path data_out;
  gen_data->add_option("--kind", data_kind, "Dataset kind")->check(CLI::IsMember({"math"}));
  gen_data->add_option("--number-max", data_number_max, "Largest subject/object number");
  gen_data->add_option("--out", data_out, "Output JSON")->required();
  common(gen_data);

  auto* gen_store = app.add_subcommand("gen-store", "Write a synthetic embedding store");
  StoreFlags sf;
  gen_store->add_option("--kind", sf.kind, "mathramp, orthogonal or shared")
      ->check(CLI::IsMember({"mathramp", "orthogonal", "shared"}));
  gen_store->add_option("--d", sf.d, "Embedding width")->check(CLI::PositiveNumber);
  gen_store->add_option("--sigma", sf.sigma, "Entity jitter");
  gen_store->add_option("--groups", sf.groups, "Shared-property groups, e.g. 2x3");
  gen_store->add_option("--relations", sf.relations, "Orthogonal relation count")->check(CLI::PositiveNumber);
  gen_store->add_option("--samples", sf.samples, "Samples per relation")->check(CLI::PositiveNumber);
  gen_store->add_option("--number-max", sf.number_max, "MathRamp largest number");
  gen_store->add_option("--out", sf.out, "Output store")->required();
  gen_store->add_option("--data-out", sf.data_out, "Also write the matching dataset JSON");
  common(gen_store);

  auto* train_cmd = app.add_subcommand("train", "Train a tensor-network model");
  DataFlags train_df;
  ArchFlags train_af;
  TrainFlags train_tf;
  fs::path model_out, train_report;
  train_df.add(train_cmd, true);
  train_af.add(train_cmd);
  train_tf.add(train_cmd);
  train_cmd->add_option("--out", model_out, "Model checkpoint")->required();
  train_cmd->add_option("--report", train_report, "JSON report");
  common(train_cmd);

  auto* grid_cmd = app.add_subcommand("grid", "Grid search over architectures");
  DataFlags grid_df;
  GridFlags gf;
  TrainFlags grid_tf;
  grid_df.add(grid_cmd, true);
  grid_tf.add(grid_cmd);
  grid_cmd->add_option("--archs", gf.archs, "Comma list of architectures");
  grid_cmd->add_option("--dr", gf.drs, "Comma list of d_r'");
  grid_cmd->add_option("--dso", gf.dso, "Comma list of d_s' = d_o'");
  grid_cmd->add_option("--embedder", gf.embedder, "Comma list of on/off");
  grid_cmd->add_option("--inner", gf.inner, "Triangle inner bond dims")->check(CLI::PositiveNumber);
  grid_cmd->add_option("--jobs", gf.jobs, "Parallel configurations")->check(CLI::PositiveNumber);
  grid_cmd->add_option("--ranks", gf.ranks, "Also sweep low-rank baselines at these ranks");
  grid_cmd->add_option("--low-rank-out", gf.low_rank_out, "Low-rank sweep CSV");
  grid_cmd->add_option("--out", gf.out, "Grid CSV")->required();
  common(grid_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "Faithfulness of a trained model");
  DataFlags eval_df;
  fs::path eval_model, eval_out;
  eval_df.add(eval_cmd, false);
  eval_cmd->add_option("--model", eval_model, "Model checkpoint")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", eval_out, "CSV report")->required();
  common(eval_cmd);

  auto* cross_cmd = app.add_subcommand("cross-eval", "Cross-evaluation matrix of per-relation decoders");
  DataFlags cross_df;
  TrainFlags cross_tf;
  std::string cross_decoder = "full";
  Index cross_rank = 4;
  bool cross_cluster = false;
  fs::path cross_csv, cross_svg;
  cross_df.add(cross_cmd, false);
  cross_tf.add(cross_cmd);
  cross_cmd->add_option("--decoder", cross_decoder, "full or lowrank")->check(CLI::IsMember({"full", "lowrank"}));
  cross_cmd->add_option("--rank", cross_rank, "Low-rank decoder rank")->check(CLI::PositiveNumber);
  cross_cmd->add_flag("--cluster", cross_cluster, "Order rows by average-linkage clustering");
  cross_cmd->add_option("--out", cross_csv, "CSV matrix")->required();
  cross_cmd->add_option("--svg", cross_svg, "SVG heatmap");
  common(cross_cmd);

  auto* jac_cmd = app.add_subcommand("jacobian", "Jacobian baseline on least-squares teachers");
  DataFlags jac_df;
  int jac_n = 8;
  double jac_step = 1e-4;
  fs::path jac_out;
  jac_df.add(jac_cmd, false);
  jac_cmd->add_option("--n-examples", jac_n, "Subjects averaged per relation")->check(CLI::PositiveNumber);
  jac_cmd->add_option("--step", jac_step, "Finite-difference step")->check(CLI::PositiveNumber);
  jac_cmd->add_option("--out", jac_out, "CSV report")->required();
  common(jac_cmd);

  auto* ablate_cmd = app.add_subcommand("ablate", "Randomize relation or entity embeddings of a store");
  std::string ablate_what;
  fs::path ablate_store, ablate_out;
  ablate_cmd->add_option("--randomize", ablate_what, "relations or entities")
      ->required()
      ->check(CLI::IsMember({"relations", "entities"}));
  ablate_cmd->add_option("--store", ablate_store, "Input store")->required()->check(CLI::ExistingFile);
  ablate_cmd->add_option("--out", ablate_out, "Output store")->required();
  common(ablate_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  Run run;
  run.subcommand = sub->get_name();
  const auto start = std::chrono::steady_clock::now();
  try {
    if (!seed_given) seed = env_seed();
    fs::path primary;
    int rc = 0;
    const std::string name = sub->get_name();
    if (name == "gen-data") {
      primary = data_out;
    } else if (name == "gen-store") {
      primary = sf.out;
    } else if (name == "train") {
      primary = model_out;
    } else if (name == "grid") {
      primary = gf.out;
    } else if (name == "eval") {
      primary = eval_out;
    } else if (name == "cross-eval") {
      primary = cross_csv;
    } else if (name == "jacobian") {
      primary = jac_out;
    } else {
      primary = ablate_out;
    }
    run.manifest = manifest.empty() ? default_manifest(primary) : manifest;
    if (name == "gen-data") rc = cmd_gen_data(data_kind, data_number_max, data_out, run);
    if (name == "gen-store") rc = cmd_gen_store(sf, seed, run);
    if (name == "train") rc = cmd_train(train_df, train_af, train_tf, seed, model_out, train_report, run);
    if (name == "grid") rc = cmd_grid(grid_df, gf, grid_tf, seed, run);
    if (name == "eval") rc = cmd_eval(eval_df, eval_model, eval_out, run);
    if (name == "cross-eval") {
      rc = cmd_cross_eval(cross_df, cross_decoder, cross_rank, cross_tf, cross_cluster, seed, cross_csv, cross_svg,
                          run);
    }
    if (name == "jacobian") rc = cmd_jacobian(jac_df, jac_n, jac_step, seed, jac_out, run);
    if (name == "ablate") rc = cmd_ablate(ablate_what, ablate_store, seed, ablate_out, run);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(run, *sub, seed, seconds);
    return rc;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << sub->help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
