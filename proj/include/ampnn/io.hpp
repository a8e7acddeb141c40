#ifndef AMPNN_IO_HPP
#define AMPNN_IO_HPP

// File formats: versioned JSON model files, run manifests, dataset and
// evaluation-grid CSV, and reproduced result tables.
//
// Every real number is written in the shortest decimal form that parses
// back to the same 64-bit double.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ampnn/dataset.hpp"
#include "ampnn/experiments.hpp"
#include "ampnn/network.hpp"
#include "ampnn/training.hpp"

namespace ampnn {

inline constexpr int kModelFormatVersion = 1;

struct ModelProvenance {
  std::string origin;  // "train", "reproduce", "demo-multiplier", ...
  std::optional<TrainingConfig> training;
  std::optional<int> run_index;
  std::string dataset;
};

struct ModelFile {
  NetworkD network;
  ModelProvenance provenance;
  int format_version = kModelFormatVersion;
};

/// Shortest round-trip decimal representation of `value`.
std::string format_real(double value);
double parse_real(const std::string& text);

nlohmann::json config_to_json(const NetworkConfigD& config);
NetworkConfigD config_from_json(const nlohmann::json& j);
nlohmann::json training_to_json(const TrainingConfig& cfg);
/// Fields absent from `j` keep the values already in `base`.
TrainingConfig training_from_json(const nlohmann::json& j, TrainingConfig base = {});
nlohmann::json report_to_json(const EvalReport& report);

std::string model_to_string(const ModelFile& model);
ModelFile model_from_string(const std::string& text);
void save_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile load_model(const std::filesystem::path& path);

/// CSV with header `x,y` (1d) or `x,y,z` (ackley).
std::string dataset_to_csv(const Dataset& data);
void save_dataset(const std::filesystem::path& path, const Dataset& data);

/// Parses a dataset CSV and checks every point against `target`: inputs must
/// lie in its domain and targets must match the exact function within 1e-6.
Dataset dataset_from_csv(const std::string& text, const TargetFunction& target, const std::string& origin = "");
Dataset load_dataset(const std::filesystem::path& path, const TargetFunction& target);

/// Columns x,y_net,y_exact,error (1d) or x,y,z_net,z_exact,error (2d).
std::string grid_to_csv(const EvalGrid& grid);

struct DatasetSpec {
  std::string source;  // grid | random | file; empty picks the benchmark default
  Index n = 0;                  // 0: the benchmark default (194 or 300)
  std::uint64_t seed = 2020;
  std::string path;
};

/// Everything needed to repeat a `train` or `reproduce` invocation.
struct RunManifest {
  std::optional<std::string> preset;
  std::optional<NetworkConfigD> config;
  std::optional<std::string> target;
  TrainingConfig training;
  DatasetSpec dataset;
  std::optional<int> n_runs;  // train defaults to 1, reproduce to 10
  std::uint64_t base_seed = 1;
  std::optional<Index> grid_resolution;
  unsigned threads = 0;
  std::string output_dir = ".";
  std::optional<int> table;
  std::vector<std::string> networks;

  /// The target named explicitly, or implied by the preset.
  TargetFunction target_function() const;
  /// Explicit config or the preset's configuration.
  NetworkConfigD network_config() const;
  void validate() const;
};

RunManifest manifest_from_json(const nlohmann::json& j);
RunManifest load_manifest(const std::filesystem::path& path);

Dataset manifest_dataset(const RunManifest& manifest);

std::string table_to_csv(const ReproducedTable& table);
std::string table_summary(const ReproducedTable& table);

std::string read_text(const std::filesystem::path& path);
/// Writes through a temporary file in the same directory, creating parents.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ampnn

#endif  // AMPNN_IO_HPP
