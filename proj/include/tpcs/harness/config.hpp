#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpcs/harness/viewport_trace.hpp"
#include "tpcs/stream/config.hpp"
#include "tpcs/synth.hpp"

namespace tpcs::harness {

// Parse failure with the 1-based line and the field involved.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, std::string field, const std::string& message);
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

enum class SourceKind { kSynthetic, kPlyDir };

struct SourceConfig {
  SourceKind kind = SourceKind::kSynthetic;
  SynthConfig synth;
  std::filesystem::path ply_dir;
  double fps = 15.0;  // capture rate of a PLY sequence
};

struct Condition {
  std::string name;
  stream::StreamConfig stream;
  // Write the first N presented frames as PLY next to frames.csv.
  std::uint32_t dump_frames = 0;
};

struct ExperimentConfig {
  std::uint64_t seed = 7;
  std::filesystem::path output_dir = "results";
  // Empty selects the orbit generator.
  std::filesystem::path viewport_trace;
  OrbitSettings orbit;
  SourceConfig source;
  std::vector<Condition> conditions;
};

// Relative paths in the text resolve against `base_dir`.
ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace tpcs::harness
