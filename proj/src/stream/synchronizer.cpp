#include "tpcs/stream/synchronizer.hpp"

#include <algorithm>
#include <cmath>

namespace tpcs::stream {

Synchronizer::Synchronizer(SyncConfig config) : config_(config), offset_ms_(config.playout_offset_ms)
{
}

IngestResult Synchronizer::ingest(DecodedTile tile, double now_ms)
{
  std::lock_guard lock(mutex_);
  if (last_presented_ && tile.frame_index <= *last_presented_) return IngestResult::kStale;
  if (tile.expected_tiles == 0) return IngestResult::kInconsistent;
  auto [it, inserted] = pending_.try_emplace(tile.frame_index);
  Pending& p = it->second;
  if (inserted) {
    p.capture_ts_ms = tile.capture_ts_ms;
    p.expected = tile.expected_tiles;
  } else if (p.expected != tile.expected_tiles) {
    return IngestResult::kInconsistent;
  }
  if (p.tiles.count(tile.tile_id)) {
    ++duplicates_;
    return IngestResult::kDuplicate;
  }
  if (p.tiles.size() >= p.expected) return IngestResult::kInconsistent;
  p.tiles.emplace(tile.tile_id, std::move(tile));
  if (p.complete()) p.complete_ts_ms = now_ms;
  return IngestResult::kAccepted;
}

std::optional<PresentedFrame> Synchronizer::poll(double now_ms)
{
  std::lock_guard lock(mutex_);
  return poll_locked(now_ms);
}

std::optional<PresentedFrame> Synchronizer::poll_locked(double now_ms)
{
  while (true) {
    auto it = std::find_if(pending_.begin(), pending_.end(),
                           [](const auto& kv) { return kv.second.complete(); });
    if (it == pending_.end()) return std::nullopt;
    if (!offset_ms_) return release(it, now_ms);

    const double deadline = it->second.capture_ts_ms + *offset_ms_;
    if (now_ms < deadline) return std::nullopt;
    const bool late = it->second.complete_ts_ms > deadline;
    if (late) {
      auto newer = std::find_if(std::next(it), pending_.end(),
                                [](const auto& kv) { return kv.second.complete(); });
      if (newer != pending_.end()) {
        dropped_.push_back(it->first);
        pending_.erase(it);
        continue;
      }
    }
    return release(it, now_ms);
  }
}

PresentedFrame Synchronizer::release(std::map<std::uint32_t, Pending>::iterator it, double now_ms)
{
  PresentedFrame f;
  f.frame_index = it->first;
  f.capture_ts_ms = it->second.capture_ts_ms;
  f.complete_ts_ms = it->second.complete_ts_ms;
  f.present_ts_ms = now_ms;
  for (auto& [id, tile] : it->second.tiles) f.tiles.push_back(std::move(tile));
  pending_.erase(it);
  discard_up_to(f.frame_index);
  last_presented_ = f.frame_index;

  if (!offset_ms_) {
    calibration_.push_back(f.present_ts_ms - f.capture_ts_ms);
    if (calibration_.size() >= config_.calibration_frames) {
      std::vector<double> s = calibration_;
      std::sort(s.begin(), s.end());
      // Nearest-rank percentile.
      auto rank = static_cast<std::size_t>(
          std::ceil(config_.calibration_percentile / 100.0 * static_cast<double>(s.size())));
      offset_ms_ = s[std::clamp<std::size_t>(rank, 1, s.size()) - 1];
    }
  }
  return f;
}

void Synchronizer::discard_up_to(std::uint32_t frame_index)
{
  for (auto it = pending_.begin(); it != pending_.end() && it->first <= frame_index;) {
    dropped_.push_back(it->first);
    it = pending_.erase(it);
  }
}

std::optional<double> Synchronizer::next_deadline() const
{
  std::lock_guard lock(mutex_);
  auto it = std::find_if(pending_.begin(), pending_.end(),
                         [](const auto& kv) { return kv.second.complete(); });
  if (it == pending_.end()) return std::nullopt;
  if (!offset_ms_) return it->second.complete_ts_ms;
  return std::max(it->second.capture_ts_ms + *offset_ms_, it->second.complete_ts_ms);
}

std::vector<std::uint32_t> Synchronizer::take_dropped()
{
  std::lock_guard lock(mutex_);
  std::vector<std::uint32_t> out;
  out.swap(dropped_);
  return out;
}

void Synchronizer::abandon(std::uint32_t frame_index)
{
  std::lock_guard lock(mutex_);
  if (pending_.erase(frame_index)) dropped_.push_back(frame_index);
}

std::optional<double> Synchronizer::playout_offset_ms() const
{
  std::lock_guard lock(mutex_);
  return offset_ms_;
}

std::uint64_t Synchronizer::duplicate_count() const
{
  std::lock_guard lock(mutex_);
  return duplicates_;
}

std::optional<std::uint32_t> Synchronizer::last_presented() const
{
  std::lock_guard lock(mutex_);
  return last_presented_;
}

}  // namespace tpcs::stream
