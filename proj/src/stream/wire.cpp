#include "tpcs/stream/wire.hpp"

#include <string>

#include "tpcs/byte_io.hpp"

namespace tpcs::stream {
namespace {

void expect(const Message& m, MessageType type, const char* what)
{
  if (m.type != type) throw WireError(std::string("expected ") + what + " message");
}

}  // namespace

std::size_t wire_size(const Message& message) { return kFrameOverheadBytes + message.body.size(); }

std::vector<std::uint8_t> encode_message(const Message& message)
{
  std::vector<std::uint8_t> out;
  out.reserve(wire_size(message));
  ByteWriter w(out);
  w.u32(static_cast<std::uint32_t>(message.body.size() + 1));
  w.u8(static_cast<std::uint8_t>(message.type));
  w.bytes(message.body);
  return out;
}

std::optional<Message> decode_message(std::span<const std::uint8_t> bytes, std::size_t& consumed)
{
  consumed = 0;
  if (bytes.size() < 4) return std::nullopt;
  ByteReader r(bytes);
  std::uint32_t length = r.u32();
  if (length == 0) throw WireError("zero-length message");
  if (bytes.size() - 4 < length) return std::nullopt;
  std::uint8_t type = r.u8();
  if (type > static_cast<std::uint8_t>(MessageType::kSessionControl))
    throw WireError("unknown message type " + std::to_string(type));
  Message m;
  m.type = static_cast<MessageType>(type);
  auto body = r.bytes(length - 1);
  m.body.assign(body.begin(), body.end());
  consumed = 4 + length;
  return m;
}

Message make_capture_message(const PointCloudFrame& frame)
{
  Message m{MessageType::kCaptureUncompressed, {}};
  m.body.reserve(17 + frame.points.size() * kUncompressedPointBytes);
  ByteWriter w(m.body);
  w.u32(frame.frame_index);
  w.f64(frame.capture_timestamp_ms);
  w.u8(static_cast<std::uint8_t>(frame.sensor_count));
  w.u32(static_cast<std::uint32_t>(frame.points.size()));
  serialize_points(frame.points, m.body);
  return m;
}

UncompressedCapture parse_capture_message(const Message& message)
{
  expect(message, MessageType::kCaptureUncompressed, "capture");
  ByteReader r(message.body);
  UncompressedCapture c;
  c.frame_index = r.u32();
  c.capture_ts_ms = r.f64();
  c.sensor_count = r.u8();
  std::uint32_t count = r.u32();
  if (r.remaining() != static_cast<std::size_t>(count) * kUncompressedPointBytes)
    throw WireError("capture message: point payload length mismatch");
  c.points = deserialize_points(r.bytes(r.remaining()));
  return c;
}

Message make_offer_message(const FrameOffer& offer)
{
  Message m{MessageType::kTileMetadata, {}};
  ByteWriter w(m.body);
  w.u32(offer.frame_index);
  w.f64(offer.capture_ts_ms);
  w.u8(offer.full_cloud ? 1 : 0);
  w.bytes(adapt::serialize_metadata(offer.metadata));
  return m;
}

FrameOffer parse_offer_message(const Message& message)
{
  expect(message, MessageType::kTileMetadata, "tile-metadata");
  ByteReader r(message.body);
  FrameOffer o;
  o.frame_index = r.u32();
  o.capture_ts_ms = r.f64();
  o.full_cloud = r.u8() != 0;
  o.metadata = adapt::deserialize_metadata(r.bytes(r.remaining()));
  return o;
}

Message make_request_message(const RepresentationRequest& request)
{
  Message m{MessageType::kRepresentationRequest, {}};
  ByteWriter w(m.body);
  w.u32(request.frame_index);
  w.u8(request.tile_id);
  w.u8(request.quality_index);
  return m;
}

RepresentationRequest parse_request_message(const Message& message)
{
  expect(message, MessageType::kRepresentationRequest, "representation-request");
  ByteReader r(message.body);
  RepresentationRequest q;
  q.frame_index = r.u32();
  q.tile_id = r.u8();
  q.quality_index = r.u8();
  return q;
}

Message make_payload_message(std::span<const std::uint8_t> bitstream)
{
  return {MessageType::kRepresentationPayload, {bitstream.begin(), bitstream.end()}};
}

Message make_control_message(const SessionControl& control)
{
  Message m{MessageType::kSessionControl, {}};
  ByteWriter w(m.body);
  w.u8(static_cast<std::uint8_t>(control.code));
  w.u32(control.frame_index);
  return m;
}

SessionControl parse_control_message(const Message& message)
{
  expect(message, MessageType::kSessionControl, "session-control");
  ByteReader r(message.body);
  SessionControl c;
  std::uint8_t code = r.u8();
  if (code > static_cast<std::uint8_t>(ControlCode::kFrameUnavailable))
    throw WireError("unknown control code " + std::to_string(code));
  c.code = static_cast<ControlCode>(code);
  c.frame_index = r.u32();
  return c;
}

}  // namespace tpcs::stream
