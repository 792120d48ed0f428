#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <vector>

#include "tpcs/codec.hpp"
#include "tpcs/point_cloud.hpp"
#include "tpcs/stream/config.hpp"
#include "tpcs/stream/wire.hpp"

namespace tpcs::stream {

// Everything the sender produced for one captured frame.
struct PreparedFrame {
  std::uint32_t frame_index = 0;
  double capture_ts_ms = 0.0;
  Message offer;  // tile metadata, or the whole frame when uncompressed
  std::size_t media_bytes = 0;  // uncompressed point bytes inside `offer`
  codec::AdaptationSet adaptation;  // tiled
  std::vector<codec::EncodedRepresentation> full_cloud;  // network adaptive
  double encode_ms = 0.0;
  std::size_t input_points = 0;
};

// Capture side: tiles and encodes a frame into its offer, keeps recent
// frames, and answers representation requests from them.
class Sender {
 public:
  Sender(StreamConfig config, std::vector<SensorPose> poses, std::size_t retain_limit = 16);

  // Throws on tiling or encode failure.
  PreparedFrame prepare(const PointCloudFrame& frame) const;

  void retain(PreparedFrame frame);

  // The payload message for `request`, or nullopt when the frame is no
  // longer retained or the request is out of range.
  std::optional<Message> serve(const RepresentationRequest& request) const;

  const StreamConfig& config() const { return config_; }

 private:
  double modeled_encode_ms(const PreparedFrame& frame) const;

  StreamConfig config_;
  std::vector<SensorPose> poses_;
  std::size_t retain_limit_;
  mutable std::mutex mutex_;
  std::deque<PreparedFrame> retained_;
};

}  // namespace tpcs::stream
