#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tpcs/point_cloud.hpp"
#include "tpcs/stream/config.hpp"
#include "tpcs/stream/receiver.hpp"
#include "tpcs/stream/synchronizer.hpp"

namespace tpcs::stream {

// Per-frame timing record. Times are stream-clock milliseconds rounded to
// 0.1 ms. Stages a frame never reached stay zero.
struct FrameTimeline {
  std::uint32_t frame_index = 0;
  double capture_ts_ms = 0.0;
  double encode_ms = 0.0;
  std::uint64_t bytes_sent = 0;     // media payload bytes
  std::uint64_t control_bytes = 0;  // metadata, requests and message framing
  double transmit_ms = 0.0;         // first media send to last media delivery
  double decode_ms = 0.0;
  double sync_wait_ms = 0.0;
  double present_ts_ms = 0.0;
  double end_to_end_ms = 0.0;
  bool presented = false;
  std::string drop_reason;
  std::uint64_t budget_bytes = 0;
  bool budget_violated = false;
  std::string selection = "-";
};

double round_to_tenth(double ms);

struct FrameSource {
  std::uint32_t frame_count = 0;
  std::function<PointCloudFrame(std::uint32_t)> frame;
};

using PresentSink = std::function<void(const PresentedFrame&)>;

struct SessionResult {
  std::vector<FrameTimeline> frames;
  std::uint64_t duplicate_tiles = 0;
  double playout_offset_ms = 0.0;
};

// Whole pipeline over a SimulatedLink pair, driven by a discrete-event clock.
// Capture is paced at 1/fps; the sender encodes the newest captured frame
// whenever it is idle and the receiver decodes the newest fully received
// frame whenever it is idle.
SessionResult run_simulated_session(const StreamConfig& config, const FrameSource& source,
                                    const std::vector<SensorPose>& poses,
                                    const ViewportProvider& viewport,
                                    const PresentSink& sink = {});

// Same pipeline over a loopback TCP connection in real time, with sender and
// receiver on separate threads.
SessionResult run_socket_session(const StreamConfig& config, const FrameSource& source,
                                 const std::vector<SensorPose>& poses,
                                 const ViewportProvider& viewport, const PresentSink& sink = {});

inline SessionResult run_session(const StreamConfig& config, const FrameSource& source,
                                 const std::vector<SensorPose>& poses,
                                 const ViewportProvider& viewport, const PresentSink& sink = {})
{
  return config.channel.mode == ChannelMode::kSocket
             ? run_socket_session(config, source, poses, viewport, sink)
             : run_simulated_session(config, source, poses, viewport, sink);
}

}  // namespace tpcs::stream
