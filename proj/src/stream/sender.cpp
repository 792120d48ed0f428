#include "tpcs/stream/sender.hpp"

#include <chrono>
#include <future>

#include "tpcs/stream/channel.hpp"
#include "tpcs/tiling.hpp"

namespace tpcs::stream {
namespace {

double encode_job_ms(const CostModel& cost, const codec::EncodedRepresentation& rep)
{
  return cost.encode_fixed_ms + (cost.encode_ns_per_input_point * rep.input_point_count +
                                 cost.encode_ns_per_leaf * rep.point_count) * 1e-6;
}

}  // namespace

Sender::Sender(StreamConfig config, std::vector<SensorPose> poses, std::size_t retain_limit)
    : config_(std::move(config)), poses_(std::move(poses)), retain_limit_(retain_limit)
{
  config_.validate();
}

PreparedFrame Sender::prepare(const PointCloudFrame& frame) const
{
  const auto start = std::chrono::steady_clock::now();
  PreparedFrame out;
  out.frame_index = frame.frame_index;
  out.capture_ts_ms = frame.capture_timestamp_ms;
  out.input_points = frame.points.size();

  switch (config_.mode) {
    case Mode::kUncompressed:
      out.offer = make_capture_message(frame);
      out.media_bytes = frame.points.size() * kUncompressedPointBytes;
      break;
    case Mode::kNetworkAdaptive: {
      std::vector<std::future<codec::EncodedRepresentation>> jobs;
      for (QualityLevel q : config_.qualities)
        jobs.push_back(std::async(std::launch::async, [&frame, q] { return codec::encode_full(frame, q); }));
      for (auto& j : jobs) out.full_cloud.push_back(j.get());
      FrameOffer offer;
      offer.frame_index = frame.frame_index;
      offer.capture_ts_ms = frame.capture_timestamp_ms;
      offer.full_cloud = true;
      adapt::TileMetadata::Entry entry;
      entry.tile_id = kFullCloudRequestTile;
      for (const auto& r : out.full_cloud)
        entry.levels.push_back({r.quality, static_cast<std::uint32_t>(r.size_bytes())});
      offer.metadata.tiles.push_back(entry);
      out.offer = make_offer_message(offer);
      break;
    }
    case Mode::kTiledAdaptive: {
      TileSet tiles = tile_frame(frame, poses_);
      out.adaptation = codec::build_adaptation_set(tiles, config_.qualities, codec::Execution::kParallel);
      FrameOffer offer;
      offer.frame_index = frame.frame_index;
      offer.capture_ts_ms = frame.capture_timestamp_ms;
      offer.metadata = out.adaptation.metadata();
      out.offer = make_offer_message(offer);
      break;
    }
  }

  if (config_.timing == TimingMode::kMeasured)
    out.encode_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  else
    out.encode_ms = modeled_encode_ms(out);
  return out;
}

double Sender::modeled_encode_ms(const PreparedFrame& frame) const
{
  const CostModel& cost = config_.cost;
  std::vector<double> jobs;
  double serial_ms = 0.0;
  switch (config_.mode) {
    case Mode::kUncompressed:
      return cost.serialize_ns_per_point * frame.input_points * 1e-6;
    case Mode::kNetworkAdaptive:
      for (const auto& r : frame.full_cloud) jobs.push_back(encode_job_ms(cost, r));
      break;
    case Mode::kTiledAdaptive:
      serial_ms = cost.tiling_ns_per_point * frame.input_points * 1e-6;
      for (const auto& t : frame.adaptation.tiles)
        for (const auto& r : t.representations) jobs.push_back(encode_job_ms(cost, r));
      break;
  }
  return serial_ms + parallel_makespan(jobs, cost.parallel_lanes);
}

void Sender::retain(PreparedFrame frame)
{
  std::lock_guard lock(mutex_);
  retained_.push_back(std::move(frame));
  while (retained_.size() > retain_limit_) retained_.pop_front();
}

std::optional<Message> Sender::serve(const RepresentationRequest& request) const
{
  std::lock_guard lock(mutex_);
  for (const PreparedFrame& f : retained_) {
    if (f.frame_index != request.frame_index) continue;
    if (request.tile_id == kFullCloudRequestTile) {
      if (request.quality_index >= f.full_cloud.size()) return std::nullopt;
      return make_payload_message(f.full_cloud[request.quality_index].payload);
    }
    for (const auto& t : f.adaptation.tiles)
      if (t.tile_id == request.tile_id && request.quality_index < t.representations.size())
        return make_payload_message(t.representations[request.quality_index].payload);
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace tpcs::stream
