#pragma once

#include <fedcert/attacks.hpp>
#include <fedcert/fl_sim.hpp>
#include <fedcert/grouping.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fedcert {

// How the sampled variant obtains its groups.
enum class PMode { Sampled, Exact };
std::string to_string(PMode m);
PMode p_mode_from_string(const std::string& s);

struct SyntheticSpec {
  int num_classes = 3;
  std::size_t dims = 10;
  std::size_t per_class = 200;       // training examples per class
  std::size_t test_per_class = 50;
  double spread = 0.5;
};

struct DatasetSpec {
  enum class Kind { Synthetic, Csv };
  Kind kind = Kind::Synthetic;
  SyntheticSpec synthetic;
  std::string train_csv;
  std::string test_csv;
  double noniid_q = 0.5;  // label-skew routing probability, in [1/L, 1]
};

struct ExperimentConfig {
  DatasetSpec dataset;
  std::size_t n_clients = 60;
  Variant variant = Variant::Deterministic;
  PMode p_mode = PMode::Sampled;
  std::size_t num_groups = 15;
  unsigned group_size = 4;   // sampled/exact variant only
  double alpha = 0.001;      // family-wise confidence level (sampled only)
  TrainConfig train;
  AttackSpec attack;
  std::vector<int> m_grid = {0, 1, 2, 3, 4, 5};
  std::uint64_t master_seed = 1;
  // Execution-only; excluded from the digest so reruns with different thread
  // counts or output locations produce byte-identical artifacts.
  int threads = 1;
  std::string output_dir = "out";

  void validate() const;
};

// Config file: '[section]' headers and 'key = value' lines; '#' starts a
// full-line comment. Keys are returned as "section.key".
std::map<std::string, std::string> parse_config_file(const std::string& path);

// Build a config from dotted key/value pairs; unknown keys are errors.
ExperimentConfig config_from_kv(const std::map<std::string, std::string>& kv);

// Canonical key/value view of the semantic fields (sorted, defaults included).
std::map<std::string, std::string> config_to_kv(const ExperimentConfig& cfg);

// FNV-1a 64 over the canonical "key=value\n" serialization of config_to_kv.
std::uint64_t config_digest(const ExperimentConfig& cfg);

// Every accepted dotted key, semantic and execution, for CLI flag mirroring.
const std::vector<std::string>& config_field_names();

}  // namespace fedcert
