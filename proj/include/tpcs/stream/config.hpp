#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tpcs/adaptation.hpp"
#include "tpcs/quality.hpp"

namespace tpcs::stream {

enum class Mode { kUncompressed, kNetworkAdaptive, kTiledAdaptive };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

enum class ChannelMode { kSimulated, kSocket };

struct ChannelModel {
  double bandwidth_bps = 1e9;
  double propagation_delay_ms = 1.0;
  ChannelMode mode = ChannelMode::kSimulated;
};

enum class TimingMode {
  // Encode/decode durations come from CostModel applied to the real codec
  // output; runs are reproducible.
  kModeled,
  // Wall-clock durations of the codec work.
  kMeasured,
};

// Per-operation compute costs used in kModeled timing. Defaults were fitted
// to this codec on a single x86-64 core (see `tpcs calibrate`).
struct CostModel {
  double encode_fixed_ms = 0.3;
  double encode_ns_per_input_point = 60.0;
  double encode_ns_per_leaf = 55.0;
  double decode_fixed_ms = 0.1;
  double decode_ns_per_point = 70.0;
  double tiling_ns_per_point = 5.0;
  double serialize_ns_per_point = 4.0;
  double deserialize_ns_per_point = 4.0;
  // Concurrent encode/decode workers (8 hardware threads on the reference
  // capture machine).
  int parallel_lanes = 8;
  // Test hook: extra cost of decoding one whole frame at the top quality
  // level. A tiled frame spreads it evenly over its tiles.
  double top_quality_decode_penalty_ms = 0.0;
};

struct SyncConfig {
  // Fixed playout offset; when unset it is calibrated from the first
  // `calibration_frames` presentations.
  std::optional<double> playout_offset_ms;
  std::size_t calibration_frames = 10;
  double calibration_percentile = 95.0;
};

std::vector<QualityLevel> default_quality_ladder();

struct StreamConfig {
  Mode mode = Mode::kTiledAdaptive;
  double target_bitrate_bps = 14e6;
  double fps = 15.0;
  std::vector<QualityLevel> qualities = default_quality_ladder();
  adapt::Allocator allocator = adapt::Allocator::kUniformStepwise;
  ChannelModel channel;
  TimingMode timing = TimingMode::kModeled;
  CostModel cost;
  SyncConfig sync;

  // Throws InvalidInput naming the offending field.
  void validate() const;
};

}  // namespace tpcs::stream
