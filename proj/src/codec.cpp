#include "tpcs/codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <future>

#include "tpcs/byte_io.hpp"

namespace tpcs::codec {
namespace {

constexpr char kMagic[4] = {'P', 'C', 'T', '1'};

std::uint64_t spread3(std::uint64_t v)
{
  v &= 0x1fffff;
  v = (v | v << 32) & 0x1f00000000ffffULL;
  v = (v | v << 16) & 0x1f0000ff0000ffULL;
  v = (v | v << 8) & 0x100f00f00f00f00fULL;
  v = (v | v << 4) & 0x10c30c30c30c30c3ULL;
  v = (v | v << 2) & 0x1249249249249249ULL;
  return v;
}

std::uint32_t compact3(std::uint64_t v)
{
  v &= 0x1249249249249249ULL;
  v = (v ^ (v >> 2)) & 0x10c30c30c30c30c3ULL;
  v = (v ^ (v >> 4)) & 0x100f00f00f00f00fULL;
  v = (v ^ (v >> 8)) & 0x1f0000ff0000ffULL;
  v = (v ^ (v >> 16)) & 0x1f00000000ffffULL;
  v = (v ^ (v >> 32)) & 0x1fffffULL;
  return static_cast<std::uint32_t>(v);
}

// Child index bits per level: x in bit 2, y in bit 1, z in bit 0.
std::uint64_t morton(std::uint32_t x, std::uint32_t y, std::uint32_t z)
{
  return (spread3(x) << 2) | (spread3(y) << 1) | spread3(z);
}

struct Sample {
  std::uint64_t code;
  std::uint32_t rgb;
};

void radix_sort(std::vector<Sample>& v, int key_bits)
{
  std::vector<Sample> tmp(v.size());
  for (int shift = 0; shift < key_bits; shift += 8) {
    std::size_t count[257] = {};
    for (const Sample& s : v) ++count[((s.code >> shift) & 0xff) + 1];
    if (count[((v.empty() ? 0 : v[0].code >> shift) & 0xff) + 1] == v.size()) continue;
    for (int i = 0; i < 256; ++i) count[i + 1] += count[i];
    for (const Sample& s : v) tmp[count[(s.code >> shift) & 0xff]++] = s;
    v.swap(tmp);
  }
}

class BitWriter {
 public:
  explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}
  void put(std::uint32_t value, int bits)
  {
    for (int b = bits - 1; b >= 0; --b) {
      acc_ = static_cast<std::uint8_t>((acc_ << 1) | ((value >> b) & 1u));
      if (++fill_ == 8) {
        out_.push_back(acc_);
        acc_ = 0;
        fill_ = 0;
      }
    }
  }
  void flush()
  {
    if (fill_ > 0) out_.push_back(static_cast<std::uint8_t>(acc_ << (8 - fill_)));
    acc_ = 0;
    fill_ = 0;
  }

 private:
  std::vector<std::uint8_t>& out_;
  std::uint8_t acc_ = 0;
  int fill_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint32_t get(int bits)
  {
    std::uint32_t v = 0;
    for (int b = 0; b < bits; ++b, ++pos_)
      v = (v << 1) | ((in_[pos_ >> 3] >> (7 - (pos_ & 7))) & 1u);
    return v;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::size_t attribute_bytes(std::size_t leaves, int dropped_bits)
{
  return (leaves * 3 * static_cast<std::size_t>(8 - dropped_bits) + 7) / 8;
}

void check_quality(QualityLevel q)
{
  if (q.octree_depth < kMinOctreeDepth || q.octree_depth > kMaxOctreeDepth)
    throw CodecError(CodecErrorKind::kDepthOutOfRange,
                     "octree depth " + std::to_string(q.octree_depth) + " outside [1, 16]");
  if (q.qp < 1 || q.qp > 100)
    throw CodecError(CodecErrorKind::kQpOutOfRange,
                     "qp " + std::to_string(q.qp) + " outside [1, 100]");
}

}  // namespace

int dropped_color_bits(int qp)
{
  long bits = std::lround((100.0 - qp) / 12.5);
  return static_cast<int>(std::clamp(bits, 0L, 7L));
}

double BitstreamHeader::leaf_half_diagonal() const
{
  return static_cast<double>(cube_edge) / std::ldexp(1.0, quality.octree_depth) * std::sqrt(3.0) /
         2.0;
}

EncodedRepresentation encode_tile(std::span<const Point> points, QualityLevel quality,
                                  std::uint32_t frame_index, std::uint8_t tile_id)
{
  check_quality(quality);
  if (points.empty()) throw CodecError(CodecErrorKind::kEmptyInput, "encode: empty point list");
  for (const Point& p : points)
    for (float c : p.position)
      if (!std::isfinite(c))
        throw CodecError(CodecErrorKind::kNonFiniteInput, "encode: non-finite coordinate");

  // Cube: origin at the bounding-box minimum (exact in float32), edge the
  // largest extent rounded up to float32 so every point lies inside.
  BoundingBox box = bounding_box(points);
  double extent = std::max({box.max_corner.x - box.min_corner.x, box.max_corner.y - box.min_corner.y,
                            box.max_corner.z - box.min_corner.z});
  float edge = static_cast<float>(extent);
  if (static_cast<double>(edge) < extent) edge = std::nextafter(edge, INFINITY);
  if (!(edge > 0.0f)) edge = 1e-6f;
  const std::array<float, 3> origin = {static_cast<float>(box.min_corner.x),
                                       static_cast<float>(box.min_corner.y),
                                       static_cast<float>(box.min_corner.z)};

  const int depth = quality.octree_depth;
  const std::uint32_t cells = 1u << depth;
  const double scale = static_cast<double>(cells) / edge;
  auto cell = [&](float v, float o) {
    double f = std::floor((static_cast<double>(v) - o) * scale);
    return static_cast<std::uint32_t>(std::clamp(f, 0.0, static_cast<double>(cells - 1)));
  };

  std::vector<Sample> samples;
  samples.reserve(points.size());
  for (const Point& p : points) {
    std::uint64_t code = morton(cell(p.position[0], origin[0]), cell(p.position[1], origin[1]),
                                cell(p.position[2], origin[2]));
    std::uint32_t rgb = (std::uint32_t{p.color.r} << 16) | (std::uint32_t{p.color.g} << 8) | p.color.b;
    samples.push_back({code, rgb});
  }
  radix_sort(samples, 3 * depth);

  // Merge samples sharing a leaf; mean color rounded half up.
  std::vector<std::uint64_t> leaves;
  std::vector<Color> leaf_colors;
  for (std::size_t i = 0; i < samples.size();) {
    std::size_t j = i;
    std::uint64_t sum[3] = {0, 0, 0};
    for (; j < samples.size() && samples[j].code == samples[i].code; ++j) {
      sum[0] += (samples[j].rgb >> 16) & 0xff;
      sum[1] += (samples[j].rgb >> 8) & 0xff;
      sum[2] += samples[j].rgb & 0xff;
    }
    std::uint64_t n = j - i;
    leaves.push_back(samples[i].code);
    leaf_colors.push_back({static_cast<std::uint8_t>((sum[0] + n / 2) / n),
                           static_cast<std::uint8_t>((sum[1] + n / 2) / n),
                           static_cast<std::uint8_t>((sum[2] + n / 2) / n)});
    i = j;
  }

  // Level-by-level occupancy; sorted leaf codes give breadth-first order.
  std::vector<std::uint8_t> occupancy;
  for (int level = 0; level < depth; ++level) {
    const int node_shift = 3 * (depth - level);
    const int child_shift = node_shift - 3;
    for (std::size_t i = 0; i < leaves.size();) {
      const std::uint64_t node = leaves[i] >> node_shift;
      std::uint8_t bits = 0;
      for (; i < leaves.size() && (leaves[i] >> node_shift) == node; ++i)
        bits |= static_cast<std::uint8_t>(1u << ((leaves[i] >> child_shift) & 7));
      occupancy.push_back(bits);
    }
  }

  const int drop = dropped_color_bits(quality.qp);
  std::vector<std::uint8_t> attributes;
  attributes.reserve(attribute_bytes(leaves.size(), drop));
  BitWriter bw(attributes);
  for (const Color& c : leaf_colors) {
    bw.put(c.r >> drop, 8 - drop);
    bw.put(c.g >> drop, 8 - drop);
    bw.put(c.b >> drop, 8 - drop);
  }
  bw.flush();

  EncodedRepresentation rep;
  rep.frame_index = frame_index;
  rep.tile_id = tile_id;
  rep.quality = quality;
  rep.point_count = static_cast<std::uint32_t>(leaves.size());
  rep.input_point_count = points.size();
  rep.payload.reserve(kHeaderBytes + occupancy.size() + attributes.size());
  ByteWriter w(rep.payload);
  w.raw(kMagic, 4);
  w.u8(kBitstreamVersion);
  w.u8(kAttrModeQuantizedRaw);
  w.u32(frame_index);
  w.u8(tile_id);
  w.u8(static_cast<std::uint8_t>(depth));
  w.u8(static_cast<std::uint8_t>(quality.qp));
  w.u8(0);
  for (float o : origin) w.f32(o);
  w.f32(edge);
  w.u32(static_cast<std::uint32_t>(occupancy.size()));
  w.u32(static_cast<std::uint32_t>(attributes.size()));
  w.u32(rep.point_count);
  w.bytes(occupancy);
  w.bytes(attributes);
  return rep;
}

BitstreamHeader parse_header(std::span<const std::uint8_t> payload)
{
  if (payload.size() >= 4 && std::memcmp(payload.data(), kMagic, 4) != 0)
    throw CodecError(CodecErrorKind::kBadMagic, "decode: bad magic");
  if (payload.size() < kHeaderBytes)
    throw CodecError(CodecErrorKind::kTruncatedHeader,
                     "decode: header truncated (" + std::to_string(payload.size()) + " bytes)");
  ByteReader r(payload);
  r.bytes(4);
  std::uint8_t version = r.u8();
  if (version != kBitstreamVersion)
    throw CodecError(CodecErrorKind::kVersionMismatch,
                     "decode: unsupported version " + std::to_string(version));
  BitstreamHeader h;
  h.attr_mode = r.u8();
  if (h.attr_mode != kAttrModeQuantizedRaw)
    throw CodecError(CodecErrorKind::kUnsupportedAttrMode,
                     "decode: unsupported attribute mode " + std::to_string(h.attr_mode));
  h.frame_index = r.u32();
  h.tile_id = r.u8();
  h.quality.octree_depth = r.u8();
  h.quality.qp = r.u8();
  r.u8();
  for (float& o : h.cube_origin) o = r.f32();
  h.cube_edge = r.f32();
  h.occupancy_len = r.u32();
  h.attr_len = r.u32();
  h.point_count = r.u32();
  check_quality(h.quality);
  return h;
}

std::vector<Point> decode_tile(std::span<const std::uint8_t> payload)
{
  const BitstreamHeader h = parse_header(payload);
  std::span<const std::uint8_t> body = payload.subspan(kHeaderBytes);
  if (body.size() < h.occupancy_len)
    throw CodecError(CodecErrorKind::kTruncatedOccupancy,
                     "decode: occupancy section truncated (" + std::to_string(body.size()) + " of " +
                         std::to_string(h.occupancy_len) + " bytes)");
  std::span<const std::uint8_t> occupancy = body.first(h.occupancy_len);
  body = body.subspan(h.occupancy_len);
  if (body.size() < h.attr_len)
    throw CodecError(CodecErrorKind::kTruncatedAttributes,
                     "decode: attribute section truncated (" + std::to_string(body.size()) + " of " +
                         std::to_string(h.attr_len) + " bytes)");
  if (body.size() > h.attr_len)
    throw CodecError(CodecErrorKind::kTrailingBytes, "decode: trailing bytes after attributes");
  std::span<const std::uint8_t> attributes = body.first(h.attr_len);

  const int depth = h.quality.octree_depth;
  std::vector<std::uint64_t> nodes{0};
  std::vector<std::uint64_t> next;
  std::size_t consumed = 0;
  for (int level = 0; level < depth; ++level) {
    if (occupancy.size() - consumed < nodes.size())
      throw CodecError(CodecErrorKind::kOccupancyInconsistent,
                       "decode: occupancy ends inside level " + std::to_string(level));
    next.clear();
    for (std::uint64_t node : nodes) {
      std::uint8_t bits = occupancy[consumed++];
      if (bits == 0)
        throw CodecError(CodecErrorKind::kOccupancyInconsistent,
                         "decode: empty occupancy byte at level " + std::to_string(level));
      for (int k = 0; k < 8; ++k)
        if (bits & (1u << k)) next.push_back((node << 3) | static_cast<std::uint64_t>(k));
    }
    nodes.swap(next);
  }
  if (consumed != occupancy.size())
    throw CodecError(CodecErrorKind::kOccupancyInconsistent,
                     "decode: " + std::to_string(occupancy.size() - consumed) +
                         " unused occupancy bytes");
  if (nodes.size() != h.point_count)
    throw CodecError(CodecErrorKind::kLeafCountMismatch,
                     "decode: occupancy has " + std::to_string(nodes.size()) +
                         " leaves, header says " + std::to_string(h.point_count));
  const int drop = dropped_color_bits(h.quality.qp);
  if (attribute_bytes(nodes.size(), drop) != h.attr_len)
    throw CodecError(CodecErrorKind::kLeafCountMismatch,
                     "decode: attribute length does not match leaf count");

  const double voxel = static_cast<double>(h.cube_edge) / std::ldexp(1.0, depth);
  const std::uint32_t half_step = drop > 0 ? (1u << (drop - 1)) : 0u;
  BitReader br(attributes);
  std::vector<Point> points(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::uint64_t code = nodes[i];
    const std::uint32_t idx[3] = {compact3(code >> 2), compact3(code >> 1), compact3(code)};
    Point& p = points[i];
    for (int a = 0; a < 3; ++a)
      p.position[a] = static_cast<float>(h.cube_origin[a] + (idx[a] + 0.5) * voxel);
    auto channel = [&] {
      return static_cast<std::uint8_t>((br.get(8 - drop) << drop) | half_step);
    };
    p.color.r = channel();
    p.color.g = channel();
    p.color.b = channel();
    p.sensor_id = h.tile_id;
  }
  return points;
}

EncodedRepresentation encode_full(const PointCloudFrame& frame, QualityLevel quality)
{
  return encode_tile(frame.points, quality, frame.frame_index, kFullCloudTileId);
}

adapt::TileMetadata AdaptationSet::metadata() const
{
  adapt::TileMetadata m;
  for (const auto& t : tiles) {
    adapt::TileMetadata::Entry e;
    e.tile_id = t.tile_id;
    e.orientation = t.orientation;
    e.bbox_centroid = t.bbox_centroid;
    for (const auto& r : t.representations)
      e.levels.push_back({r.quality, static_cast<std::uint32_t>(r.size_bytes())});
    m.tiles.push_back(std::move(e));
  }
  return m;
}

const EncodedRepresentation& AdaptationSet::representation(std::uint8_t tile_id,
                                                           std::size_t quality_index) const
{
  for (const auto& t : tiles)
    if (t.tile_id == tile_id) {
      if (quality_index >= t.representations.size())
        throw InvalidInput("adaptation set: quality index out of range");
      return t.representations[quality_index];
    }
  throw InvalidInput("adaptation set: unknown tile " + std::to_string(tile_id));
}

void validate_ladder(std::span<const QualityLevel> qualities)
{
  if (qualities.empty()) throw InvalidInput("quality ladder is empty");
  for (std::size_t i = 0; i < qualities.size(); ++i) {
    const QualityLevel& q = qualities[i];
    if (q.octree_depth < kMinOctreeDepth || q.octree_depth > kMaxOctreeDepth || q.qp < 1 ||
        q.qp > 100)
      throw InvalidInput("quality ladder: level " + std::to_string(i) + " out of range");
    if (i > 0 && q.octree_depth <= qualities[i - 1].octree_depth)
      throw InvalidInput("quality ladder must be strictly increasing in octree depth");
  }
}

AdaptationSet build_adaptation_set(const TileSet& tiles, std::span<const QualityLevel> qualities,
                                   Execution execution)
{
  validate_ladder(qualities);
  AdaptationSet set;
  set.frame_index = tiles.frame_index;

  auto encode_one = [&](const Tile& tile, QualityLevel q) {
    try {
      return encode_tile(tile.points, q, tiles.frame_index, tile.tile_id);
    } catch (const CodecError& e) {
      throw CodecError(e.kind(), "tile " + std::to_string(tile.tile_id) + " depth " +
                                     std::to_string(q.octree_depth) + " qp " +
                                     std::to_string(q.qp) + ": " + e.what());
    }
  };

  std::vector<std::future<EncodedRepresentation>> jobs;
  for (const Tile& tile : tiles.tiles) {
    TileRepresentations tr;
    tr.tile_id = tile.tile_id;
    tr.orientation = tile.orientation;
    tr.bbox_centroid = tile.bbox_centroid;
    tr.input_point_count = tile.points.size();
    set.tiles.push_back(std::move(tr));
    for (QualityLevel q : qualities) {
      auto policy = execution == Execution::kParallel ? std::launch::async : std::launch::deferred;
      jobs.push_back(std::async(policy, encode_one, std::cref(tile), q));
    }
  }
  std::size_t k = 0;
  for (auto& t : set.tiles)
    for (std::size_t q = 0; q < qualities.size(); ++q) t.representations.push_back(jobs[k++].get());
  return set;
}

}  // namespace tpcs::codec
