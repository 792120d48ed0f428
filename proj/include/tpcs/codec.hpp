#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpcs/adaptation.hpp"
#include "tpcs/point_cloud.hpp"
#include "tpcs/quality.hpp"
#include "tpcs/tiling.hpp"

namespace tpcs::codec {

enum class CodecErrorKind {
  kEmptyInput,
  kDepthOutOfRange,
  kQpOutOfRange,
  kNonFiniteInput,
  kBadMagic,
  kVersionMismatch,
  kUnsupportedAttrMode,
  kTruncatedHeader,
  kTruncatedOccupancy,
  kTruncatedAttributes,
  kOccupancyInconsistent,
  kLeafCountMismatch,
  kTrailingBytes,
};

class CodecError : public std::runtime_error {
 public:
  CodecError(CodecErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  CodecErrorKind kind() const { return kind_; }

 private:
  CodecErrorKind kind_;
};

inline constexpr std::uint8_t kBitstreamVersion = 1;
inline constexpr std::uint8_t kAttrModeQuantizedRaw = 0;
inline constexpr std::size_t kHeaderBytes = 42;
inline constexpr std::uint8_t kFullCloudTileId = 0;

// Low bits dropped per color channel: round((100 - qp) / 12.5), at most 7.
int dropped_color_bits(int qp);

struct EncodedRepresentation {
  std::uint32_t frame_index = 0;
  std::uint8_t tile_id = 0;
  QualityLevel quality;
  std::uint32_t point_count = 0;  // occupied leaf voxels
  std::size_t input_point_count = 0;
  std::vector<std::uint8_t> payload;

  std::size_t size_bytes() const { return payload.size(); }
};

struct BitstreamHeader {
  std::uint32_t frame_index = 0;
  std::uint8_t tile_id = 0;
  std::uint8_t attr_mode = kAttrModeQuantizedRaw;
  QualityLevel quality;
  std::array<float, 3> cube_origin{};
  float cube_edge = 0.0f;
  std::uint32_t occupancy_len = 0;
  std::uint32_t attr_len = 0;
  std::uint32_t point_count = 0;

  // Half of a leaf voxel's diagonal.
  double leaf_half_diagonal() const;
};

// Breadth-first octree occupancy over the cubified bounding box, followed by
// one quantized color per occupied leaf in scan order.
EncodedRepresentation encode_tile(std::span<const Point> points, QualityLevel quality,
                                  std::uint32_t frame_index, std::uint8_t tile_id);

BitstreamHeader parse_header(std::span<const std::uint8_t> payload);

// Leaf-voxel centers with dequantized colors; sensor_id is the tile id.
std::vector<Point> decode_tile(std::span<const std::uint8_t> payload);
inline std::vector<Point> decode_tile(const EncodedRepresentation& rep)
{
  return decode_tile(rep.payload);
}

EncodedRepresentation encode_full(const PointCloudFrame& frame, QualityLevel quality);
inline std::vector<Point> decode_full(const EncodedRepresentation& rep) { return decode_tile(rep); }

struct TileRepresentations {
  std::uint8_t tile_id = 0;
  Vec3 orientation;
  Vec3 bbox_centroid;
  std::size_t input_point_count = 0;
  std::vector<EncodedRepresentation> representations;  // ascending quality
};

struct AdaptationSet {
  std::uint32_t frame_index = 0;
  std::vector<TileRepresentations> tiles;

  adapt::TileMetadata metadata() const;
  const EncodedRepresentation& representation(std::uint8_t tile_id, std::size_t quality_index) const;
};

enum class Execution { kSequential, kParallel };

// Throws InvalidInput unless `qualities` is non-empty, strictly increasing in
// octree depth and within range.
void validate_ladder(std::span<const QualityLevel> qualities);

// One representation per (tile, quality). Encode failures are rethrown as
// CodecError naming the tile and quality.
AdaptationSet build_adaptation_set(const TileSet& tiles, std::span<const QualityLevel> qualities,
                                   Execution execution = Execution::kParallel);

}  // namespace tpcs::codec
