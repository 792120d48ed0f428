#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tpcs/adaptation.hpp"
#include "tpcs/stream/config.hpp"
#include "tpcs/stream/synchronizer.hpp"
#include "tpcs/stream/wire.hpp"

namespace tpcs::stream {

using ViewportProvider = std::function<adapt::Viewport(double time_ms)>;

// What the adaptation engine decided for one offered frame.
struct FrameDecision {
  std::uint32_t frame_index = 0;
  double capture_ts_ms = 0.0;
  std::vector<RepresentationRequest> requests;
  std::uint64_t budget_bytes = 0;
  std::uint64_t selected_bytes = 0;
  bool budget_violated = false;
  // "q<k>" for a full-cloud choice, "<tile>:<k>|..." for tiles.
  std::string summary;
};

struct DecodeOutcome {
  std::vector<DecodedTile> tiles;
  std::vector<double> tile_ms;  // per tile, same order
  double decode_ms = 0.0;       // tiles decoded concurrently
  std::optional<std::string> error;
};

// Receiving side: runs the adaptation engine on offers, collects requested
// payloads and decodes complete frames.
class Receiver {
 public:
  Receiver(StreamConfig config, ViewportProvider viewport);

  FrameDecision on_offer(const FrameOffer& offer, double now_ms);

  // Stores a payload; returns the frame index once every requested payload
  // of that frame has arrived. Payloads for unknown frames are ignored.
  std::optional<std::uint32_t> on_payload(const Message& payload);

  DecodeOutcome decode_frame(std::uint32_t frame_index);
  DecodeOutcome decode_capture(const Message& capture) const;

  void forget(std::uint32_t frame_index);
  std::size_t pending_frames() const { return pending_.size(); }

 private:
  struct Pending {
    double capture_ts_ms = 0.0;
    std::uint8_t expected_tiles = 0;
    bool full_cloud = false;
    std::map<std::uint8_t, std::size_t> quality_index;  // by bitstream tile id
    std::map<std::uint8_t, std::size_t> level_count;
    std::map<std::uint8_t, std::vector<std::uint8_t>> payloads;
  };

  StreamConfig config_;
  ViewportProvider viewport_;
  std::map<std::uint32_t, Pending> pending_;
};

}  // namespace tpcs::stream
