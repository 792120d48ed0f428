#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <vector>

#include "tpcs/point_cloud.hpp"
#include "tpcs/stream/config.hpp"

namespace tpcs::stream {

struct DecodedTile {
  std::uint32_t frame_index = 0;
  std::uint8_t tile_id = 0;
  std::uint8_t expected_tiles = 1;
  double capture_ts_ms = 0.0;
  std::vector<Point> points;
};

struct PresentedFrame {
  std::uint32_t frame_index = 0;
  double capture_ts_ms = 0.0;
  double complete_ts_ms = 0.0;  // arrival of the last tile
  double present_ts_ms = 0.0;
  std::vector<DecodedTile> tiles;  // ascending tile_id
};

enum class IngestResult { kAccepted, kDuplicate, kStale, kInconsistent };

// Releases a frame only once all of its tiles are present, on a playout
// schedule of capture time plus a fixed offset. A frame that completes after
// its deadline is shown on completion, or dropped when a newer frame is
// already complete. Presented indices strictly increase.
//
// ingest/poll are serialized internally and may be called from any thread.
class Synchronizer {
 public:
  explicit Synchronizer(SyncConfig config = {});

  IngestResult ingest(DecodedTile tile, double now_ms);
  std::optional<PresentedFrame> poll(double now_ms);

  // Earliest time at which poll could release a frame that is already
  // complete; nullopt when nothing complete is waiting.
  std::optional<double> next_deadline() const;

  // Frames discarded since the last call (incomplete or skipped).
  std::vector<std::uint32_t> take_dropped();

  // Discards a frame that will never complete.
  void abandon(std::uint32_t frame_index);

  std::optional<double> playout_offset_ms() const;
  std::uint64_t duplicate_count() const;
  std::optional<std::uint32_t> last_presented() const;

 private:
  struct Pending {
    double capture_ts_ms = 0.0;
    std::uint8_t expected = 0;
    double complete_ts_ms = 0.0;
    std::map<std::uint8_t, DecodedTile> tiles;
    bool complete() const { return tiles.size() == expected; }
  };

  std::optional<PresentedFrame> poll_locked(double now_ms);
  void discard_up_to(std::uint32_t frame_index);
  PresentedFrame release(std::map<std::uint32_t, Pending>::iterator it, double now_ms);

  SyncConfig config_;
  mutable std::mutex mutex_;
  std::map<std::uint32_t, Pending> pending_;
  std::optional<std::uint32_t> last_presented_;
  std::optional<double> offset_ms_;
  std::vector<double> calibration_;
  std::vector<std::uint32_t> dropped_;
  std::uint64_t duplicates_ = 0;
};

}  // namespace tpcs::stream
