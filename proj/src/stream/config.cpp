#include "tpcs/stream/config.hpp"

#include <cmath>

#include "tpcs/codec.hpp"

namespace tpcs::stream {

std::string to_string(Mode mode)
{
  switch (mode) {
    case Mode::kUncompressed: return "uncompressed";
    case Mode::kNetworkAdaptive: return "network_adaptive";
    case Mode::kTiledAdaptive: return "tiled_adaptive";
  }
  return "?";
}

Mode parse_mode(const std::string& text)
{
  if (text == "uncompressed") return Mode::kUncompressed;
  if (text == "network_adaptive" || text == "na") return Mode::kNetworkAdaptive;
  if (text == "tiled_adaptive" || text == "ta") return Mode::kTiledAdaptive;
  throw InvalidInput("unknown streaming mode '" + text + "'");
}

std::vector<QualityLevel> default_quality_ladder() { return {{6, 75}, {7, 75}, {9, 75}}; }

void StreamConfig::validate() const
{
  if (!(fps > 0.0) || !std::isfinite(fps)) throw InvalidInput("fps must be positive");
  if (mode != Mode::kUncompressed && !(target_bitrate_bps > 0.0))
    throw InvalidInput("target_bitrate must be positive");
  if (channel.mode == ChannelMode::kSimulated && !(channel.bandwidth_bps > 0.0))
    throw InvalidInput("channel bandwidth must be positive");
  if (channel.propagation_delay_ms < 0.0) throw InvalidInput("propagation delay must be >= 0");
  if (cost.parallel_lanes < 1) throw InvalidInput("parallel_lanes must be >= 1");
  if (sync.calibration_frames < 1) throw InvalidInput("calibration_frames must be >= 1");
  if (mode != Mode::kUncompressed) codec::validate_ladder(qualities);
}

}  // namespace tpcs::stream
