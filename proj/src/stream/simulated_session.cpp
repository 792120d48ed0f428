#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>

#include "tpcs/stream/channel.hpp"
#include "tpcs/stream/sender.hpp"
#include "tpcs/stream/session.hpp"

namespace tpcs::stream {

double round_to_tenth(double ms) { return std::round(ms * 10.0) / 10.0; }

namespace {

class EventQueue {
 public:
  void at(double time_ms, std::function<void()> fn) { queue_.push({time_ms, seq_++, std::move(fn)}); }

  bool run_next()
  {
    if (queue_.empty()) return false;
    Event e = queue_.top();
    queue_.pop();
    now_ = e.time_ms;
    e.fn();
    return true;
  }

  double now() const { return now_; }

 private:
  struct Event {
    double time_ms;
    std::uint64_t seq;
    std::function<void()> fn;
    bool operator<(const Event& o) const
    {
      return time_ms != o.time_ms ? time_ms > o.time_ms : seq > o.seq;
    }
  };
  std::priority_queue<Event> queue_;
  std::uint64_t seq_ = 0;
  double now_ = 0.0;
};

class SimulatedPipeline {
 public:
  SimulatedPipeline(const StreamConfig& config, const FrameSource& source,
                    const std::vector<SensorPose>& poses, const ViewportProvider& viewport,
                    const PresentSink& sink)
      : config_(config),
        source_(source),
        sink_(sink),
        sender_(config, poses),
        receiver_(config, viewport),
        sync_(config.sync),
        downlink_(config.channel),
        uplink_(config.channel),
        timelines_(source.frame_count),
        progress_(source.frame_count)
  {
  }

  SessionResult run()
  {
    const double period = 1000.0 / config_.fps;
    for (std::uint32_t k = 0; k < source_.frame_count; ++k) {
      timelines_[k].frame_index = k;
      events_.at(k * period, [this, k] { on_capture(k); });
    }
    while (events_.run_next()) {
    }
    SessionResult result;
    for (std::uint32_t k = 0; k < source_.frame_count; ++k) {
      FrameTimeline& t = timelines_[k];
      if (!t.presented && t.drop_reason.empty()) t.drop_reason = "incomplete";
      result.frames.push_back(t);
    }
    result.duplicate_tiles = sync_.duplicate_count();
    result.playout_offset_ms = round_to_tenth(sync_.playout_offset_ms().value_or(0.0));
    return result;
  }

 private:
  struct Progress {
    double capture_ms = 0.0;
    std::optional<double> first_media_send;
    double last_media_delivery = 0.0;
    double decode_done = 0.0;
    bool finished = false;
  };

  double now() const { return events_.now(); }

  void drop(std::uint32_t k, const std::string& reason)
  {
    if (progress_[k].finished) return;
    progress_[k].finished = true;
    timelines_[k].drop_reason = reason;
    receiver_.forget(k);
    ready_.erase(k);
    captures_.erase(k);
  }

  void on_capture(std::uint32_t k)
  {
    progress_[k].capture_ms = now();
    timelines_[k].capture_ts_ms = round_to_tenth(now());
    if (!encoder_busy_) {
      start_encode(k);
      return;
    }
    if (pending_capture_) drop(*pending_capture_, "sender_busy");
    pending_capture_ = k;
  }

  void start_encode(std::uint32_t k)
  {
    PointCloudFrame frame = source_.frame(k);
    frame.frame_index = k;
    frame.capture_timestamp_ms = progress_[k].capture_ms;
    PreparedFrame prepared;
    try {
      prepared = sender_.prepare(frame);
    } catch (const std::exception&) {
      drop(k, "encode_error");
      next_encode();
      return;
    }
    encoder_busy_ = true;
    const double encode_ms = round_to_tenth(prepared.encode_ms);
    timelines_[k].encode_ms = encode_ms;
    auto shared = std::make_shared<PreparedFrame>(std::move(prepared));
    events_.at(now() + encode_ms, [this, k, shared] { on_encoded(k, std::move(*shared)); });
  }

  void next_encode()
  {
    encoder_busy_ = false;
    if (pending_capture_) {
      std::uint32_t p = *pending_capture_;
      pending_capture_.reset();
      start_encode(p);
    }
  }

  void on_encoded(std::uint32_t k, PreparedFrame prepared)
  {
    Message offer = std::move(prepared.offer);
    const std::size_t size = wire_size(offer);
    FrameTimeline& t = timelines_[k];
    if (config_.mode == Mode::kUncompressed) {
      t.bytes_sent += prepared.media_bytes;
      t.control_bytes += size - prepared.media_bytes;
      progress_[k].first_media_send = now();
    } else {
      t.control_bytes += size;
    }
    sender_.retain(std::move(prepared));
    const double delivery = downlink_.send(now(), size);
    auto msg = std::make_shared<Message>(std::move(offer));
    events_.at(delivery, [this, k, msg] { on_offer_delivered(k, std::move(*msg)); });
    next_encode();
  }

  void on_offer_delivered(std::uint32_t k, Message msg)
  {
    if (progress_[k].finished) return;
    if (msg.type == MessageType::kCaptureUncompressed) {
      progress_[k].last_media_delivery = now();
      captures_[k] = std::move(msg);
      ready_.insert(k);
      try_decode();
      return;
    }
    FrameDecision d = receiver_.on_offer(parse_offer_message(msg), now());
    FrameTimeline& t = timelines_[k];
    t.budget_bytes = d.budget_bytes;
    t.budget_violated = d.budget_violated;
    t.selection = d.summary;
    for (const RepresentationRequest& r : d.requests) {
      Message req = make_request_message(r);
      t.control_bytes += wire_size(req);
      const double arrival = uplink_.send(now(), wire_size(req));
      events_.at(arrival, [this, r] { on_request(r); });
    }
  }

  void on_request(const RepresentationRequest& r)
  {
    const std::uint32_t k = r.frame_index;
    std::optional<Message> payload = sender_.serve(r);
    if (!payload) {
      Message ctl = make_control_message({ControlCode::kFrameUnavailable, k});
      timelines_[k].control_bytes += wire_size(ctl);
      events_.at(downlink_.send(now(), wire_size(ctl)), [this, k] { drop(k, "unavailable"); });
      return;
    }
    FrameTimeline& t = timelines_[k];
    t.bytes_sent += payload->body.size();
    t.control_bytes += kFrameOverheadBytes;
    if (!progress_[k].first_media_send) progress_[k].first_media_send = now();
    const double delivery = downlink_.send(now(), wire_size(*payload));
    auto msg = std::make_shared<Message>(std::move(*payload));
    events_.at(delivery, [this, k, msg] { on_payload_delivered(k, *msg); });
  }

  void on_payload_delivered(std::uint32_t k, const Message& msg)
  {
    if (progress_[k].finished) return;
    progress_[k].last_media_delivery = now();
    if (receiver_.on_payload(msg)) {
      ready_.insert(k);
      try_decode();
    }
  }

  void try_decode()
  {
    if (decoder_busy_ || ready_.empty()) return;
    const std::uint32_t k = *ready_.rbegin();
    while (*ready_.begin() != k) {
      const std::uint32_t stale = *ready_.begin();
      ready_.erase(ready_.begin());
      drop(stale, "decoder_busy");
    }
    ready_.erase(k);

    FrameTimeline& t = timelines_[k];
    Progress& p = progress_[k];
    t.transmit_ms = round_to_tenth(p.last_media_delivery - p.first_media_send.value_or(p.last_media_delivery));

    DecodeOutcome out;
    if (auto it = captures_.find(k); it != captures_.end()) {
      out = receiver_.decode_capture(it->second);
      captures_.erase(it);
    } else {
      out = receiver_.decode_frame(k);
    }
    if (out.error) {
      drop(k, "decode_error");
      try_decode();
      return;
    }
    const double decode_ms = round_to_tenth(out.decode_ms);
    t.decode_ms = decode_ms;
    p.decode_done = now() + decode_ms;

    std::vector<double> finish = schedule_parallel(out.tile_ms, config_.cost.parallel_lanes);
    const double start = now();
    for (std::size_t i = 0; i < out.tiles.size(); ++i) {
      // The frame-level decode time bounds every tile's completion.
      double done = start + std::min(round_to_tenth(finish[i]), decode_ms);
      auto tile = std::make_shared<DecodedTile>(std::move(out.tiles[i]));
      events_.at(done, [this, tile] { on_tile_decoded(std::move(*tile)); });
    }
    decoder_busy_ = true;
    events_.at(start + decode_ms, [this] {
      decoder_busy_ = false;
      try_decode();
    });
  }

  void on_tile_decoded(DecodedTile tile)
  {
    const std::uint32_t k = tile.frame_index;
    if (progress_[k].finished) return;
    IngestResult r = sync_.ingest(std::move(tile), now());
    if (r == IngestResult::kStale) drop(k, "stale");
    pump_sync();
  }

  void pump_sync()
  {
    while (auto f = sync_.poll(now())) {
      const std::uint32_t k = f->frame_index;
      FrameTimeline& t = timelines_[k];
      t.presented = true;
      progress_[k].finished = true;
      t.present_ts_ms = round_to_tenth(now());
      t.end_to_end_ms = round_to_tenth(t.present_ts_ms - t.capture_ts_ms);
      t.sync_wait_ms = round_to_tenth(now() - progress_[k].decode_done);
      if (sink_) sink_(*f);
    }
    for (std::uint32_t k : sync_.take_dropped()) drop(k, "sync_skip");
    if (auto d = sync_.next_deadline(); d && *d > now() && !scheduled_polls_.count(*d)) {
      scheduled_polls_.insert(*d);
      events_.at(*d, [this] { pump_sync(); });
    }
  }

  const StreamConfig& config_;
  const FrameSource& source_;
  const PresentSink& sink_;
  Sender sender_;
  Receiver receiver_;
  Synchronizer sync_;
  SimulatedLink downlink_;
  SimulatedLink uplink_;
  EventQueue events_;
  std::vector<FrameTimeline> timelines_;
  std::vector<Progress> progress_;
  bool encoder_busy_ = false;
  std::optional<std::uint32_t> pending_capture_;
  bool decoder_busy_ = false;
  std::set<std::uint32_t> ready_;
  std::map<std::uint32_t, Message> captures_;
  std::set<double> scheduled_polls_;
};

}  // namespace

SessionResult run_simulated_session(const StreamConfig& config, const FrameSource& source,
                                    const std::vector<SensorPose>& poses,
                                    const ViewportProvider& viewport, const PresentSink& sink)
{
  config.validate();
  if (config.channel.mode != ChannelMode::kSimulated)
    throw InvalidInput("run_simulated_session: channel mode must be simulated");
  SimulatedPipeline pipeline(config, source, poses, viewport, sink);
  return pipeline.run();
}

}  // namespace tpcs::stream
