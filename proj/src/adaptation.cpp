#include "tpcs/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "tpcs/byte_io.hpp"

namespace tpcs::adapt {

void TileMetadata::validate() const
{
  std::set<std::uint8_t> ids;
  for (const Entry& e : tiles) {
    if (!ids.insert(e.tile_id).second)
      throw InvalidInput("tile metadata: duplicate tile id " + std::to_string(e.tile_id));
    if (e.levels.empty())
      throw InvalidInput("tile metadata: tile " + std::to_string(e.tile_id) + " has no levels");
    for (std::size_t i = 1; i < e.levels.size(); ++i)
      if (e.levels[i].size_bytes <= e.levels[i - 1].size_bytes)
        throw InvalidInput("tile metadata: sizes of tile " + std::to_string(e.tile_id) +
                           " are not strictly increasing");
  }
}

std::vector<std::uint8_t> serialize_metadata(const TileMetadata& metadata)
{
  if (metadata.tiles.size() > 255) throw InvalidInput("tile metadata: more than 255 tiles");
  std::vector<std::uint8_t> out;
  ByteWriter w(out);
  w.u8(static_cast<std::uint8_t>(metadata.tiles.size()));
  for (const auto& e : metadata.tiles) {
    w.u8(e.tile_id);
    for (int i = 0; i < 3; ++i) w.f32(static_cast<float>(e.orientation[i]));
    for (int i = 0; i < 3; ++i) w.f32(static_cast<float>(e.bbox_centroid[i]));
    if (e.levels.size() > 255) throw InvalidInput("tile metadata: more than 255 levels");
    w.u8(static_cast<std::uint8_t>(e.levels.size()));
    for (const auto& l : e.levels) {
      w.u8(static_cast<std::uint8_t>(l.quality.octree_depth));
      w.u8(static_cast<std::uint8_t>(l.quality.qp));
      w.u32(l.size_bytes);
    }
  }
  return out;
}

TileMetadata deserialize_metadata(std::span<const std::uint8_t> bytes)
{
  ByteReader r(bytes);
  TileMetadata m;
  std::size_t count = r.u8();
  for (std::size_t t = 0; t < count; ++t) {
    TileMetadata::Entry e;
    e.tile_id = r.u8();
    float o[3], c[3];
    for (float& v : o) v = r.f32();
    for (float& v : c) v = r.f32();
    e.orientation = {o[0], o[1], o[2]};
    e.bbox_centroid = {c[0], c[1], c[2]};
    std::size_t levels = r.u8();
    for (std::size_t l = 0; l < levels; ++l) {
      TileMetadata::Level level;
      level.quality.octree_depth = r.u8();
      level.quality.qp = r.u8();
      level.size_bytes = r.u32();
      e.levels.push_back(level);
    }
    m.tiles.push_back(std::move(e));
  }
  return m;
}

std::vector<TileScore> score_tiles(const Viewport& viewport, const TileMetadata& metadata)
{
  const std::size_t n = metadata.tiles.size();
  std::vector<TileScore> scores(n);
  std::vector<std::size_t> by_distance(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = metadata.tiles[i];
    scores[i].tile_id = e.tile_id;
    scores[i].distance = distance(viewport.position, e.bbox_centroid);
    scores[i].utility = std::abs(dot(e.orientation, viewport.orientation));
    by_distance[i] = i;
  }
  std::sort(by_distance.begin(), by_distance.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a].distance != scores[b].distance) return scores[a].distance < scores[b].distance;
    return scores[a].tile_id < scores[b].tile_id;
  });
  for (std::size_t rank = 2; rank < n; ++rank) {
    TileScore& s = scores[by_distance[rank]];
    if (s.utility != 0.0) s.utility = -s.utility;
  }
  return scores;
}

double tile_utility(const Viewport& viewport, const TileMetadata& metadata, std::size_t tile_index)
{
  if (tile_index >= metadata.tiles.size()) throw InvalidInput("tile_utility: index out of range");
  return score_tiles(viewport, metadata)[tile_index].utility;
}

std::vector<std::uint8_t> rank_tiles(std::span<const TileScore> scores)
{
  std::vector<TileScore> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), [](const TileScore& a, const TileScore& b) {
    if (a.utility != b.utility) return a.utility > b.utility;
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.tile_id < b.tile_id;
  });
  std::vector<std::uint8_t> order;
  for (const auto& s : sorted) order.push_back(s.tile_id);
  return order;
}

namespace {

// Positions of ranked tile ids within the metadata.
std::vector<std::size_t> ranking_positions(std::span<const std::uint8_t> ranking,
                                           const TileMetadata& metadata)
{
  if (metadata.tiles.empty()) throw InvalidInput("allocate: empty tile metadata");
  if (ranking.size() != metadata.tiles.size())
    throw InvalidInput("allocate: ranking does not cover every tile");
  std::vector<std::size_t> pos;
  std::vector<bool> seen(metadata.tiles.size(), false);
  for (std::uint8_t id : ranking) {
    auto it = std::find_if(metadata.tiles.begin(), metadata.tiles.end(),
                           [id](const auto& e) { return e.tile_id == id; });
    if (it == metadata.tiles.end())
      throw InvalidInput("allocate: ranked tile " + std::to_string(id) + " not in metadata");
    std::size_t idx = static_cast<std::size_t>(it - metadata.tiles.begin());
    if (seen[idx]) throw InvalidInput("allocate: tile ranked twice");
    seen[idx] = true;
    pos.push_back(idx);
  }
  for (const auto& e : metadata.tiles)
    if (e.levels.empty())
      throw InvalidInput("allocate: tile " + std::to_string(e.tile_id) + " has no levels");
  return pos;
}

Selection lowest_selection(const TileMetadata& metadata, std::uint64_t budget)
{
  Selection s;
  s.budget_bytes = budget;
  for (const auto& e : metadata.tiles) {
    s.choices.push_back({e.tile_id, 0});
    s.total_bytes += e.levels[0].size_bytes;
  }
  s.budget_violated = s.total_bytes > budget;
  return s;
}

std::uint64_t level_size(const TileMetadata& m, std::size_t tile, std::size_t level)
{
  return m.tiles[tile].levels[level].size_bytes;
}

}  // namespace

Selection allocate_uniform_stepwise(std::span<const std::uint8_t> ranking,
                                    const TileMetadata& metadata, std::uint64_t budget_bytes)
{
  auto order = ranking_positions(ranking, metadata);
  Selection s = lowest_selection(metadata, budget_bytes);
  if (s.budget_violated) return s;
  bool upgraded = true;
  while (upgraded) {
    upgraded = false;
    for (std::size_t t : order) {
      std::size_t q = s.choices[t].quality_index;
      if (q + 1 >= metadata.tiles[t].levels.size()) continue;
      std::uint64_t next =
          s.total_bytes - level_size(metadata, t, q) + level_size(metadata, t, q + 1);
      if (next > budget_bytes) continue;
      s.total_bytes = next;
      s.choices[t].quality_index = q + 1;
      upgraded = true;
    }
  }
  return s;
}

Selection allocate_greedy_ranked(std::span<const std::uint8_t> ranking,
                                 const TileMetadata& metadata, std::uint64_t budget_bytes)
{
  auto order = ranking_positions(ranking, metadata);
  Selection s = lowest_selection(metadata, budget_bytes);
  if (s.budget_violated) return s;
  for (std::size_t t : order) {
    const std::uint64_t base = s.total_bytes - level_size(metadata, t, 0);
    std::size_t best = 0;
    for (std::size_t q = 1; q < metadata.tiles[t].levels.size(); ++q)
      if (base + level_size(metadata, t, q) <= budget_bytes) best = q;
    s.choices[t].quality_index = best;
    s.total_bytes = base + level_size(metadata, t, best);
  }
  return s;
}

Selection allocate(Allocator allocator, std::span<const std::uint8_t> ranking,
                   const TileMetadata& metadata, std::uint64_t budget_bytes)
{
  return allocator == Allocator::kGreedyRanked
             ? allocate_greedy_ranked(ranking, metadata, budget_bytes)
             : allocate_uniform_stepwise(ranking, metadata, budget_bytes);
}

NetworkSelection select_network_adaptive(std::span<const std::uint64_t> sizes,
                                         std::uint64_t budget_bytes)
{
  if (sizes.empty()) throw InvalidInput("select_network_adaptive: no sizes");
  NetworkSelection sel{0, sizes[0], sizes[0] > budget_bytes};
  for (std::size_t q = 1; q < sizes.size(); ++q)
    if (sizes[q] <= budget_bytes) sel = {q, sizes[q], false};
  return sel;
}

FrameBudget frame_budget(double target_bitrate_bps, double fps)
{
  if (!(fps > 0.0)) throw InvalidInput("frame_budget: fps must be positive");
  if (!(target_bitrate_bps > 0.0)) throw InvalidInput("frame_budget: bitrate must be positive");
  FrameBudget b;
  b.bits = target_bitrate_bps / fps;
  b.bytes = static_cast<std::uint64_t>(std::floor(b.bits / 8.0));
  return b;
}

}  // namespace tpcs::adapt
