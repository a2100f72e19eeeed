#include "relkit/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace relkit {

using nlohmann::json;

namespace {

std::size_t count_placeholders(const std::string& s) {
  std::size_t n = 0;
  for (std::size_t pos = s.find("{}"); pos != std::string::npos; pos = s.find("{}", pos + 2)) ++n;
  return n;
}

const std::vector<std::string> kKeys = {"name", "prompt_templates", "zs_prompt_templates",
                                        "relation_type", "symmetric", "samples"};

}  // namespace

void validate_dataset(const RelationDataset& data) {
  std::set<std::string> names;
  for (const auto& r : data) {
    if (r.name.empty()) throw DatasetError("relation with empty name", "name");
    if (!names.insert(r.name).second) throw DatasetError("duplicate relation name '" + r.name + "'", "name");
    for (const auto* list : {&r.prompt_templates, &r.zs_prompt_templates}) {
      for (const auto& t : *list) {
        if (count_placeholders(t) != 1) {
          throw DatasetError("template '" + t + "' of relation '" + r.name + "' must contain exactly one {}",
                             list == &r.prompt_templates ? "prompt_templates" : "zs_prompt_templates");
        }
      }
    }
    if (r.samples.empty()) throw DatasetError("relation '" + r.name + "' has no samples", "samples");
  }
}

const RelationRecord& find_relation(const RelationDataset& data, const std::string& name) {
  for (const auto& r : data) {
    if (r.name == name) return r;
  }
  throw std::out_of_range("unknown relation '" + name + "'");
}

std::vector<int> math_plus_offsets() {
  std::vector<int> v(20);
  std::iota(v.begin(), v.end(), 0);
  v.insert(v.end(), {33, 50, 57, 73, 100});
  return v;
}

std::vector<int> math_minus_offsets() {
  std::vector<int> v(20);
  std::iota(v.begin(), v.end(), 1);
  v.insert(v.end(), {33, 50, 57, 73, 100});
  return v;
}

std::string math_relation_name(int sign, int offset) {
  return std::string("number ") + (sign > 0 ? "plus " : "minus ") + std::to_string(offset);
}

RelationDataset generate_math_dataset(int number_max) {
  if (number_max < 100) {
    throw std::invalid_argument("number_max must be at least the largest offset (100), got " +
                                std::to_string(number_max));
  }
  RelationDataset out;
  auto make = [&](int sign, int x) {
    RelationRecord r;
    r.name = math_relation_name(sign, x);
    const std::string op = sign > 0 ? "plus" : "minus";
    r.prompt_templates = {"{} " + op + " " + std::to_string(x) + " equals"};
    r.zs_prompt_templates = {"What is {} " + op + " " + std::to_string(x) + "? The answer is"};
    r.relation_type = sign > 0 ? "addition" : "subtraction";
    r.symmetric = false;
    const int lo = sign > 0 ? 0 : x;
    const int hi = sign > 0 ? number_max - x : number_max;
    for (int n = lo; n <= hi; ++n) r.samples.push_back({std::to_string(n), std::to_string(n + sign * x)});
    out.push_back(std::move(r));
  };
  for (int x : math_plus_offsets()) make(+1, x);
  for (int x : math_minus_offsets()) make(-1, x);
  return out;
}

int published_math_count(const std::string& name) {
  static const std::map<std::string, int> table = [] {
    std::map<std::string, int> t;
    for (int x : math_plus_offsets()) t[math_relation_name(+1, x)] = 201 - x;
    for (int x : math_minus_offsets()) t[math_relation_name(-1, x)] = x <= 20 ? 202 - x : 201 - x;
    return t;
  }();
  auto it = table.find(name);
  return it == table.end() ? -1 : it->second;
}

std::vector<std::string> check_math_counts(const RelationDataset& data) {
  std::vector<std::string> warnings;
  for (const auto& r : data) {
    const int expected = published_math_count(r.name);
    if (expected < 0) continue;
    const int got = static_cast<int>(r.samples.size());
    if (got != expected) {
      warnings.push_back("'" + r.name + "': generated " + std::to_string(got) + " samples, published table lists " +
                         std::to_string(expected) + " (subjects are restricted to nonnegative results)");
    }
  }
  return warnings;
}

namespace {

std::vector<std::string> string_list(const json& j, const char* field, const std::string& rel) {
  if (!j.is_array()) throw DatasetError(std::string("'") + field + "' of '" + rel + "' must be an array of strings", field);
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) throw DatasetError(std::string("'") + field + "' of '" + rel + "' must hold strings", field);
    out.push_back(e.get<std::string>());
  }
  return out;
}

RelationRecord record_from_json(const json& j, std::size_t index) {
  const std::string where = "relation #" + std::to_string(index);
  if (!j.is_object()) throw DatasetError(where + " is not an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      throw DatasetError(where + " has unknown field '" + key + "'", key);
    }
  }
  for (const auto& key : kKeys) {
    if (!j.contains(key)) throw DatasetError(where + " is missing field '" + key + "'", key);
  }
  RelationRecord r;
  if (!j["name"].is_string()) throw DatasetError(where + ": 'name' must be a string", "name");
  r.name = j["name"].get<std::string>();
  r.prompt_templates = string_list(j["prompt_templates"], "prompt_templates", r.name);
  r.zs_prompt_templates = string_list(j["zs_prompt_templates"], "zs_prompt_templates", r.name);
  if (!j["relation_type"].is_string()) throw DatasetError(where + ": 'relation_type' must be a string", "relation_type");
  r.relation_type = j["relation_type"].get<std::string>();
  if (!j["symmetric"].is_boolean()) throw DatasetError(where + ": 'symmetric' must be a boolean", "symmetric");
  r.symmetric = j["symmetric"].get<bool>();
  if (!j["samples"].is_array()) throw DatasetError(where + ": 'samples' must be an array", "samples");
  for (const auto& s : j["samples"]) {
    if (!s.is_object() || s.size() != 2 || !s.contains("subject") || !s.contains("object") ||
        !s["subject"].is_string() || !s["object"].is_string()) {
      throw DatasetError("samples of '" + r.name + "' must be objects with string 'subject' and 'object' only",
                         "samples");
    }
    r.samples.push_back({s["subject"].get<std::string>(), s["object"].get<std::string>()});
  }
  return r;
}

}  // namespace

RelationDataset parse_dataset_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
    throw DatasetError("JSON parse error at line " + std::to_string(line) + ": " + e.what(), {}, line);
  }
  if (!root.is_array()) throw DatasetError("dataset must be a top-level JSON array");
  RelationDataset out;
  for (std::size_t i = 0; i < root.size(); ++i) out.push_back(record_from_json(root[i], i));
  validate_dataset(out);
  return out;
}

RelationDataset load_dataset_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dataset_json(ss.str());
}

std::string dataset_to_json(const RelationDataset& data) {
  json root = json::array();
  for (const auto& r : data) {
    json samples = json::array();
    for (const auto& s : r.samples) samples.push_back({{"subject", s.subject}, {"object", s.object}});
    root.push_back({{"name", r.name},
                    {"prompt_templates", r.prompt_templates},
                    {"zs_prompt_templates", r.zs_prompt_templates},
                    {"relation_type", r.relation_type},
                    {"symmetric", r.symmetric},
                    {"samples", std::move(samples)}});
  }
  return root.dump(2) + "\n";
}

void save_dataset_json(const RelationDataset& data, const std::filesystem::path& path) {
  validate_dataset(data);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DatasetError("cannot write dataset " + path.string());
  out << dataset_to_json(data);
  if (!out) throw DatasetError("write failed: " + path.string());
}

namespace {

/// Indices of the first floor(ratio * n) entries of a seeded shuffle,
/// returned sorted, and the remainder.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double ratio,
                                                                            std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));
  std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

}  // namespace

DatasetSplit split(const RelationDataset& data, SplitMode mode, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split ratio must be in (0, 1)");
  DatasetSplit out;
  out.mode = mode;
  out.ratio = ratio;
  out.seed = seed;
  std::mt19937_64 rng(seed);
  if (mode == SplitMode::RelationWise) {
    auto [train, test] = split_indices(data.size(), ratio, rng);
    if (train.empty() || test.empty()) {
      throw std::invalid_argument("relation-wise split of " + std::to_string(data.size()) +
                                  " relations leaves one side empty");
    }
    for (auto i : train) out.train.push_back(data[i]);
    for (auto i : test) out.test.push_back(data[i]);
    return out;
  }
  for (const auto& r : data) {
    auto [train, test] = split_indices(r.samples.size(), ratio, rng);
    if (train.empty() || test.empty()) {
      throw std::invalid_argument("sample-wise split of relation '" + r.name + "' (" +
                                  std::to_string(r.samples.size()) + " samples) leaves one side empty");
    }
    RelationRecord tr = r, te = r;
    tr.samples.clear();
    te.samples.clear();
    for (auto i : train) tr.samples.push_back(r.samples[i]);
    for (auto i : test) te.samples.push_back(r.samples[i]);
    out.train.push_back(std::move(tr));
    out.test.push_back(std::move(te));
  }
  return out;
}

}  // namespace relkit
