#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace relkit {

struct Sample {
  std::string subject;
  std::string object;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// One relation with its prompts and subject-object samples. Templates carry
/// exactly one "{}" placeholder for the subject.
struct RelationRecord {
  std::string name;
  std::vector<std::string> prompt_templates;
  std::vector<std::string> zs_prompt_templates;
  std::string relation_type;
  bool symmetric = false;
  std::vector<Sample> samples;

  friend bool operator==(const RelationRecord&, const RelationRecord&) = default;
};

using RelationDataset = std::vector<RelationRecord>;

/// Raised for malformed dataset files or records. `field` names the
/// offending key when there is one; `line` is set for parse errors.
class DatasetError : public std::runtime_error {
 public:
  DatasetError(const std::string& what, std::string field = {}, std::size_t line = 0)
      : std::runtime_error(what), field_(std::move(field)), line_(line) {}
  const std::string& field() const noexcept { return field_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string field_;
  std::size_t line_;
};

/// Checks record invariants: unique nonempty names, one placeholder per
/// template, nonempty samples.
void validate_dataset(const RelationDataset& data);

const RelationRecord& find_relation(const RelationDataset& data, const std::string& name);

/// Offsets used by the addition and subtraction relations.
std::vector<int> math_plus_offsets();
std::vector<int> math_minus_offsets();

std::string math_relation_name(int sign, int offset);

/// The 50 "number plus X" / "number minus X" relations over subjects
/// 0..number_max. Objects always stay in 0..number_max.
RelationDataset generate_math_dataset(int number_max = 200);

/// Differences between generated sample counts and the published counts of
/// the addition/subtraction table (number_max = 200). The subtraction rows
/// for offsets 1..20 in that table list one sample more than there are
/// nonnegative results; each such row yields one warning.
std::vector<std::string> check_math_counts(const RelationDataset& data);

/// Published sample count for a math relation, or -1 when not tabulated.
int published_math_count(const std::string& name);

RelationDataset load_dataset_json(const std::filesystem::path& path);
RelationDataset parse_dataset_json(const std::string& text);
std::string dataset_to_json(const RelationDataset& data);
void save_dataset_json(const RelationDataset& data, const std::filesystem::path& path);

enum class SplitMode { SampleWise, RelationWise };

struct DatasetSplit {
  RelationDataset train;
  RelationDataset test;
  SplitMode mode = SplitMode::RelationWise;
  double ratio = 0.75;
  std::uint64_t seed = 0;
};

/// Seeded split with floor(ratio * n) items on the train side. SampleWise
/// splits every relation's samples; RelationWise splits the relation list.
/// Both sides keep the input order.
DatasetSplit split(const RelationDataset& data, SplitMode mode, double ratio, std::uint64_t seed);

}  // namespace relkit
