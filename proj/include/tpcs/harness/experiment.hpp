#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tpcs/harness/config.hpp"
#include "tpcs/harness/metrics.hpp"
#include "tpcs/ply.hpp"
#include "tpcs/stream/session.hpp"

namespace tpcs::harness {

// manifest.json of a PLY sequence directory.
struct SequenceManifest {
  std::uint32_t frame_count = 0;
  double fps = 15.0;
  std::vector<SensorPose> poses;
};

void write_manifest(const std::filesystem::path& dir, const SequenceManifest& manifest);
SequenceManifest read_manifest(const std::filesystem::path& dir);

// Writes frame_%05d.ply for every synthetic frame plus manifest.json.
void write_synth_sequence(const SynthConfig& config, const std::filesystem::path& dir,
                          PlyFormat format = PlyFormat::kBinaryLittleEndian);

struct Sequence {
  stream::FrameSource source;
  std::vector<SensorPose> poses;
  double fps = 15.0;
};

// Frames are produced on demand, so every condition sees identical input.
Sequence open_sequence(const SourceConfig& config);

struct ConditionResult {
  ConditionSummary summary;
  stream::SessionResult session;
  std::filesystem::path frames_csv;
};

struct ExperimentResult {
  std::vector<ConditionResult> conditions;
  std::filesystem::path summary_path;
};

// Runs conditions one after another and writes <output_dir>/<name>/frames.csv
// and <output_dir>/summary.json. Session failures rethrow as runtime_error
// naming the condition.
ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

}  // namespace tpcs::harness
