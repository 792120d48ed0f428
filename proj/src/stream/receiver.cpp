#include "tpcs/stream/receiver.hpp"

#include <chrono>
#include <future>

#include "tpcs/codec.hpp"
#include "tpcs/stream/channel.hpp"

namespace tpcs::stream {

Receiver::Receiver(StreamConfig config, ViewportProvider viewport)
    : config_(std::move(config)), viewport_(std::move(viewport))
{
  config_.validate();
}

FrameDecision Receiver::on_offer(const FrameOffer& offer, double now_ms)
{
  FrameDecision d;
  d.frame_index = offer.frame_index;
  d.capture_ts_ms = offer.capture_ts_ms;
  d.budget_bytes = adapt::frame_budget(config_.target_bitrate_bps, config_.fps).bytes;
  const auto& metadata = offer.metadata;
  if (metadata.tiles.empty()) throw WireError("offer without tiles");

  Pending p;
  p.capture_ts_ms = offer.capture_ts_ms;
  p.full_cloud = offer.full_cloud;

  if (offer.full_cloud) {
    const auto& entry = metadata.tiles.front();
    std::vector<std::uint64_t> sizes;
    for (const auto& l : entry.levels) sizes.push_back(l.size_bytes);
    adapt::NetworkSelection sel = adapt::select_network_adaptive(sizes, d.budget_bytes);
    d.selected_bytes = sel.size_bytes;
    d.budget_violated = sel.budget_violated;
    d.summary = "q" + std::to_string(sel.quality_index);
    d.requests.push_back({offer.frame_index, kFullCloudRequestTile,
                          static_cast<std::uint8_t>(sel.quality_index)});
    p.expected_tiles = 1;
    p.quality_index[codec::kFullCloudTileId] = sel.quality_index;
    p.level_count[codec::kFullCloudTileId] = sizes.size();
  } else {
    adapt::Viewport viewport = viewport_(now_ms);
    auto scores = adapt::score_tiles(viewport, metadata);
    auto ranking = adapt::rank_tiles(scores);
    adapt::Selection sel = adapt::allocate(config_.allocator, ranking, metadata, d.budget_bytes);
    d.selected_bytes = sel.total_bytes;
    d.budget_violated = sel.budget_violated;
    for (std::size_t i = 0; i < sel.choices.size(); ++i) {
      const auto& c = sel.choices[i];
      if (i) d.summary += '|';
      d.summary += std::to_string(c.tile_id) + ":" + std::to_string(c.quality_index);
      d.requests.push_back({offer.frame_index, c.tile_id, static_cast<std::uint8_t>(c.quality_index)});
      p.quality_index[c.tile_id] = c.quality_index;
      p.level_count[c.tile_id] = metadata.tiles[i].levels.size();
    }
    p.expected_tiles = static_cast<std::uint8_t>(sel.choices.size());
  }
  pending_[offer.frame_index] = std::move(p);
  return d;
}

std::optional<std::uint32_t> Receiver::on_payload(const Message& payload)
{
  if (payload.type != MessageType::kRepresentationPayload)
    throw WireError("expected representation-payload message");
  codec::BitstreamHeader h;
  try {
    h = codec::parse_header(payload.body);
  } catch (const codec::CodecError&) {
    return std::nullopt;
  }
  auto it = pending_.find(h.frame_index);
  if (it == pending_.end()) return std::nullopt;
  Pending& p = it->second;
  if (!p.quality_index.count(h.tile_id)) return std::nullopt;
  p.payloads[h.tile_id] = payload.body;
  if (p.payloads.size() == p.expected_tiles) return h.frame_index;
  return std::nullopt;
}

DecodeOutcome Receiver::decode_frame(std::uint32_t frame_index)
{
  DecodeOutcome out;
  auto it = pending_.find(frame_index);
  if (it == pending_.end()) {
    out.error = "frame " + std::to_string(frame_index) + " not pending";
    return out;
  }
  Pending p = std::move(it->second);
  pending_.erase(it);

  const CostModel& cost = config_.cost;
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::future<std::pair<std::vector<Point>, double>>> jobs;
  for (auto& [tile_id, bytes] : p.payloads) {
    jobs.push_back(std::async(std::launch::async, [&bytes] {
      auto t0 = std::chrono::steady_clock::now();
      auto pts = codec::decode_tile(bytes);
      double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      return std::make_pair(std::move(pts), ms);
    }));
  }
  std::size_t k = 0;
  for (auto& [tile_id, bytes] : p.payloads) {
    DecodedTile tile;
    tile.frame_index = frame_index;
    tile.tile_id = tile_id;
    tile.expected_tiles = p.expected_tiles;
    tile.capture_ts_ms = p.capture_ts_ms;
    double wall_ms = 0.0;
    try {
      auto [pts, ms] = jobs[k++].get();
      tile.points = std::move(pts);
      wall_ms = ms;
    } catch (const std::exception& e) {
      out.error = "tile " + std::to_string(tile_id) + ": " + e.what();
      continue;
    }
    double ms = config_.timing == TimingMode::kMeasured
                    ? wall_ms
                    : cost.decode_fixed_ms + cost.decode_ns_per_point * tile.points.size() * 1e-6;
    if (p.quality_index[tile_id] + 1 == p.level_count[tile_id])
      ms += cost.top_quality_decode_penalty_ms / p.expected_tiles;
    out.tile_ms.push_back(ms);
    out.tiles.push_back(std::move(tile));
  }
  if (out.error) {
    out.tiles.clear();
    out.tile_ms.clear();
    return out;
  }
  if (config_.timing == TimingMode::kMeasured) {
    double wall = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    double penalty = 0.0;
    for (auto& [tile_id, q] : p.quality_index)
      if (q + 1 == p.level_count[tile_id])
        penalty = cost.top_quality_decode_penalty_ms / p.expected_tiles;
    out.decode_ms = wall + penalty;
  } else {
    out.decode_ms = parallel_makespan(out.tile_ms, cost.parallel_lanes);
  }
  return out;
}

DecodeOutcome Receiver::decode_capture(const Message& capture) const
{
  DecodeOutcome out;
  const auto start = std::chrono::steady_clock::now();
  try {
    UncompressedCapture c = parse_capture_message(capture);
    DecodedTile tile;
    tile.frame_index = c.frame_index;
    tile.tile_id = 0;
    tile.expected_tiles = 1;
    tile.capture_ts_ms = c.capture_ts_ms;
    tile.points = std::move(c.points);
    out.tiles.push_back(std::move(tile));
  } catch (const std::exception& e) {
    out.error = e.what();
    return out;
  }
  out.decode_ms =
      config_.timing == TimingMode::kMeasured
          ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count()
          : config_.cost.deserialize_ns_per_point * out.tiles[0].points.size() * 1e-6;
  out.tile_ms.push_back(out.decode_ms);
  return out;
}

void Receiver::forget(std::uint32_t frame_index) { pending_.erase(frame_index); }

}  // namespace tpcs::stream
