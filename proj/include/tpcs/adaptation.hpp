#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tpcs/geometry.hpp"
#include "tpcs/point_cloud.hpp"
#include "tpcs/quality.hpp"

namespace tpcs::adapt {

struct Viewport {
  Vec3 position;
  Vec3 orientation{0.0, 0.0, 1.0};
  double timestamp_ms = 0.0;
};

// Sender-to-receiver description of what a frame offers.
struct TileMetadata {
  struct Level {
    QualityLevel quality;
    std::uint32_t size_bytes = 0;
    bool operator==(const Level&) const = default;
  };
  struct Entry {
    std::uint8_t tile_id = 0;
    Vec3 orientation;
    Vec3 bbox_centroid;
    std::vector<Level> levels;  // ascending quality
    bool operator==(const Entry&) const = default;
  };

  std::vector<Entry> tiles;

  std::size_t tile_count() const { return tiles.size(); }
  // Throws InvalidInput unless tile ids are unique and every tile has at
  // least one level with strictly increasing sizes.
  void validate() const;
  bool operator==(const TileMetadata&) const = default;
};

// Wire form: count u8, then per tile: tile_id u8, orientation 3 x f32,
// centroid 3 x f32, level_count u8, then per level: octree_depth u8, qp u8,
// size_bytes u32. Little-endian.
std::vector<std::uint8_t> serialize_metadata(const TileMetadata& metadata);
TileMetadata deserialize_metadata(std::span<const std::uint8_t> bytes);

struct TileChoice {
  std::uint8_t tile_id = 0;
  std::size_t quality_index = 0;
  bool operator==(const TileChoice&) const = default;
};

struct Selection {
  std::vector<TileChoice> choices;  // metadata order
  std::uint64_t total_bytes = 0;
  std::uint64_t budget_bytes = 0;
  bool budget_violated = false;
  bool operator==(const Selection&) const = default;
};

struct TileScore {
  std::uint8_t tile_id = 0;
  double utility = 0.0;
  double distance = 0.0;  // viewer position to bbox centroid
};

// |orientation . view direction|, positive for the two tiles whose centroids
// are nearest the viewer (ties by tile id), negative otherwise.
double tile_utility(const Viewport& viewport, const TileMetadata& metadata, std::size_t tile_index);
std::vector<TileScore> score_tiles(const Viewport& viewport, const TileMetadata& metadata);

// Descending utility; ties by smaller distance, then smaller tile id.
std::vector<std::uint8_t> rank_tiles(std::span<const TileScore> scores);

// Starting from all-lowest, sweeps the ranking repeatedly and raises each
// tile by one level when it fits, until a sweep changes nothing.
Selection allocate_uniform_stepwise(std::span<const std::uint8_t> ranking,
                                    const TileMetadata& metadata, std::uint64_t budget_bytes);

// Starting from all-lowest, raises each tile in ranking order to the highest
// level that fits before moving on.
Selection allocate_greedy_ranked(std::span<const std::uint8_t> ranking,
                                 const TileMetadata& metadata, std::uint64_t budget_bytes);

enum class Allocator { kUniformStepwise, kGreedyRanked };

Selection allocate(Allocator allocator, std::span<const std::uint8_t> ranking,
                   const TileMetadata& metadata, std::uint64_t budget_bytes);

struct NetworkSelection {
  std::size_t quality_index = 0;
  std::uint64_t size_bytes = 0;
  bool budget_violated = false;
  bool operator==(const NetworkSelection&) const = default;
};

NetworkSelection select_network_adaptive(std::span<const std::uint64_t> sizes,
                                         std::uint64_t budget_bytes);

struct FrameBudget {
  double bits = 0.0;
  std::uint64_t bytes = 0;  // floor(bits / 8)
};

FrameBudget frame_budget(double target_bitrate_bps, double fps);

}  // namespace tpcs::adapt
