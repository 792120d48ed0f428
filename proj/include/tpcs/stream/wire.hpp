#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tpcs/adaptation.hpp"
#include "tpcs/point_cloud.hpp"

namespace tpcs::stream {

enum class MessageType : std::uint8_t {
  kCaptureUncompressed = 0,
  kTileMetadata = 1,
  kRepresentationRequest = 2,
  kRepresentationPayload = 3,
  kSessionControl = 4,
};

struct Message {
  MessageType type = MessageType::kSessionControl;
  std::vector<std::uint8_t> body;
};

class WireError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// u32 length (type byte + body) | type u8 | body
inline constexpr std::size_t kFrameOverheadBytes = 5;
inline constexpr std::uint8_t kFullCloudRequestTile = 255;

std::vector<std::uint8_t> encode_message(const Message& message);
std::size_t wire_size(const Message& message);

// Parses one message from the front of `bytes`; returns nullopt when more
// bytes are needed. `consumed` receives the bytes used.
std::optional<Message> decode_message(std::span<const std::uint8_t> bytes, std::size_t& consumed);

struct UncompressedCapture {
  std::uint32_t frame_index = 0;
  double capture_ts_ms = 0.0;
  std::uint8_t sensor_count = 1;
  std::vector<Point> points;
};

// frame_index u32 | capture_ts_ms f64 | sensor_count u8 | point_count u32 |
// 16-byte points
Message make_capture_message(const PointCloudFrame& frame);
UncompressedCapture parse_capture_message(const Message& message);

// frame_index u32 | capture_ts_ms f64 | full_cloud u8 | tile metadata
struct FrameOffer {
  std::uint32_t frame_index = 0;
  double capture_ts_ms = 0.0;
  bool full_cloud = false;
  adapt::TileMetadata metadata;
};
Message make_offer_message(const FrameOffer& offer);
FrameOffer parse_offer_message(const Message& message);

struct RepresentationRequest {
  std::uint32_t frame_index = 0;
  std::uint8_t tile_id = 0;  // kFullCloudRequestTile for the whole cloud
  std::uint8_t quality_index = 0;
  bool operator==(const RepresentationRequest&) const = default;
};
Message make_request_message(const RepresentationRequest& request);
RepresentationRequest parse_request_message(const Message& message);

Message make_payload_message(std::span<const std::uint8_t> bitstream);

enum class ControlCode : std::uint8_t {
  kStart = 0,
  kEndOfStream = 1,
  kFrameUnavailable = 2,
};
struct SessionControl {
  ControlCode code = ControlCode::kStart;
  std::uint32_t frame_index = 0;
};
Message make_control_message(const SessionControl& control);
SessionControl parse_control_message(const Message& message);

}  // namespace tpcs::stream
