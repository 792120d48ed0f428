#include <doctest.h>

#include <cfloat>
#include <map>

#include "support/test_util.hpp"
#include "tpcs/codec.hpp"
#include "tpcs/synth.hpp"

using namespace tpcs;
using namespace tpcs::codec;

namespace {

// Decoded centers are stored as float32, so allow their rounding on top of
// the half-diagonal bound.
double position_slack(std::span<const Point> pts, float edge)
{
  double m = 0.0;
  for (const auto& p : pts)
    for (float c : p.position) m = std::max(m, double(std::abs(c)));
  return 2.0 * FLT_EPSILON * (m + edge);
}

double bound_of(const EncodedRepresentation& rep)
{
  const auto h = parse_header(rep.payload);
  return double(h.cube_edge) / std::ldexp(1.0, h.quality.octree_depth) * std::sqrt(3.0) / 2.0;
}

Point at(float x, float y, float z, Color c = {})
{
  Point p;
  p.position = {x, y, z};
  p.color = c;
  return p;
}

CodecErrorKind decode_kind(std::vector<std::uint8_t> bytes)
{
  try {
    decode_tile(bytes);
  } catch (const CodecError& e) {
    return e.kind();
  }
  FAIL("decode accepted a corrupted stream");
  return CodecErrorKind::kEmptyInput;
}

void put_u32(std::vector<std::uint8_t>& b, std::size_t off, std::uint32_t v)
{
  for (int i = 0; i < 4; ++i) b[off + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& b, std::size_t off)
{
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[off + i]) << (8 * i);
  return v;
}

}  // namespace

TEST_CASE("qp to dropped bits")
{
  CHECK(dropped_color_bits(100) == 0);
  CHECK(dropped_color_bits(75) == 2);
  CHECK(dropped_color_bits(50) == 4);
  CHECK(dropped_color_bits(1) == 7);
  CHECK(dropped_color_bits(0) == 7);
}

TEST_CASE("one point at depth 1")
{
  std::vector<Point> pts{at(0.5f, 0.5f, 0.5f, {10, 20, 30})};
  const auto rep = encode_tile(pts, {1, 100}, 3, 2);
  const auto h = parse_header(rep.payload);
  CHECK(h.occupancy_len == 1);
  CHECK(std::popcount(unsigned(rep.payload[kHeaderBytes])) == 1);
  CHECK(h.point_count == 1);
  CHECK(h.frame_index == 3);
  CHECK(h.tile_id == 2);
  const auto out = decode_tile(rep);
  REQUIRE(out.size() == 1);
  CHECK(out[0].color == Color{10, 20, 30});
  CHECK(out[0].sensor_id == 2);
}

TEST_CASE("eight octants fill the root byte")
{
  std::vector<Point> pts;
  for (int i = 0; i < 8; ++i)
    pts.push_back(at(float(i >> 2), float((i >> 1) & 1), float(i & 1), {std::uint8_t(i * 30), 0, 0}));
  const auto rep = encode_tile(pts, {1, 100}, 0, 0);
  CHECK(rep.payload.size() == kHeaderBytes + 1 + 8 * 3);
  CHECK(rep.payload[kHeaderBytes] == 0xFF);
  CHECK(rep.point_count == 8);
  CHECK(decode_tile(rep).size() == 8);
}

TEST_CASE("header layout")
{
  std::vector<Point> pts{at(-1.0f, 2.0f, 0.5f), at(1.0f, 2.5f, 0.75f)};
  const auto rep = encode_tile(pts, {9, 75}, 77, 1);
  const auto& b = rep.payload;
  CHECK(std::string(b.begin(), b.begin() + 4) == "PCT1");
  CHECK(b[4] == 1);
  CHECK(b[5] == 0);
  CHECK(get_u32(b, 6) == 77);
  CHECK(b[10] == 1);
  CHECK(b[11] == 9);
  CHECK(b[12] == 75);
  const auto h = parse_header(b);
  CHECK(h.cube_origin == std::array<float, 3>{-1.0f, 2.0f, 0.5f});
  CHECK(h.cube_edge == 2.0f);
  CHECK(b.size() == kHeaderBytes + h.occupancy_len + h.attr_len);
  CHECK(rep.size_bytes() == b.size());
}

TEST_CASE("single point error at depth 10 in a unit cube")
{
  std::vector<Point> pts{at(0, 0, 0), at(1, 1, 1), at(0.3f, 0.61f, 0.777f)};
  const auto out = decode_tile(encode_tile(pts, {10, 100}, 0, 0));
  const double bound = std::sqrt(3.0) / 2048.0 + position_slack(pts, 1.0f);
  CHECK(testutil::directed_hausdorff(pts, out) <= bound);
}

TEST_CASE("qp 100 reproduces voxel-mean colors")
{
  // Unit cube at depth 3; every point sits inside one 1/8 voxel.
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> cell(0, 7), byte(0, 255), jitter(1, 99);
  std::vector<Point> pts{at(0, 0, 0), at(1, 1, 1)};
  for (int i = 0; i < 400; ++i) {
    auto coord = [&] { return (cell(rng) + jitter(rng) / 100.0f) / 8.0f; };
    pts.push_back(at(coord(), coord(), coord(),
                     {std::uint8_t(byte(rng)), std::uint8_t(byte(rng)), std::uint8_t(byte(rng))}));
  }
  std::map<std::array<int, 3>, std::array<unsigned, 4>> acc;
  for (const auto& p : pts) {
    std::array<int, 3> key;
    for (int a = 0; a < 3; ++a) key[a] = std::min(7, int(std::floor(p.position[a] * 8.0f)));
    auto& s = acc[key];
    s[0] += p.color.r;
    s[1] += p.color.g;
    s[2] += p.color.b;
    s[3] += 1;
  }
  const auto out = decode_tile(encode_tile(pts, {3, 100}, 0, 0));
  REQUIRE(out.size() == acc.size());
  for (const auto& q : out) {
    std::array<int, 3> key;
    for (int a = 0; a < 3; ++a) key[a] = int(std::floor(q.position[a] * 8.0f));
    REQUIRE(acc.count(key) == 1);
    const auto& s = acc[key];
    const unsigned n = s[3];
    CHECK(q.color == Color{std::uint8_t((s[0] + n / 2) / n), std::uint8_t((s[1] + n / 2) / n),
                           std::uint8_t((s[2] + n / 2) / n)});
  }
}

TEST_CASE("qp 75 keeps the top six bits and recenters")
{
  std::vector<Point> pts{at(0, 0, 0, {0, 3, 4}), at(1, 1, 1, {255, 130, 129})};
  const auto out = decode_tile(encode_tile(pts, {1, 75}, 0, 0));
  REQUIRE(out.size() == 2);
  CHECK(out[0].color == Color{2, 2, 6});
  CHECK(out[1].color == Color{254, 130, 130});
}

TEST_CASE("random 10k cloud at depth 7 meets the Hausdorff bound")
{
  std::mt19937_64 rng(10);
  const auto pts = testutil::random_cloud(rng, 10000, -0.8f, 1.3f);
  const auto rep = encode_tile(pts, {7, 75}, 0, 0);
  const auto out = decode_tile(rep);
  CHECK(out.size() == rep.point_count);
  CHECK(testutil::hausdorff(pts, out) <= bound_of(rep) + position_slack(pts, parse_header(rep.payload).cube_edge));
}

TEST_CASE("Hausdorff bound holds at depths 1 to 12")
{
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> count(1, 300);
  std::uniform_real_distribution<float> span(0.001f, 50.0f), shift(-100.0f, 100.0f);
  for (int depth = 1; depth <= 12; ++depth)
    for (int trial = 0; trial < 10; ++trial) {
      const float lo = shift(rng);
      const auto pts = testutil::random_cloud(rng, count(rng), lo, lo + span(rng));
      const auto rep = encode_tile(pts, {std::uint8_t(depth), 75}, 0, 0);
      const auto out = decode_tile(rep);
      CHECK(testutil::hausdorff(pts, out) <=
            bound_of(rep) + position_slack(pts, parse_header(rep.payload).cube_edge));
    }
}

TEST_CASE("size grows with depth on synthetic tiles")
{
  SynthConfig cfg;
  const auto f = synth_frame(cfg, 0);
  const auto tiles = tile_frame(f, effective_poses(cfg));
  for (const auto& t : tiles.tiles) {
    REQUIRE(t.points.size() >= 1000);
    const auto s6 = encode_tile(t.points, {6, 75}, 0, t.tile_id).size_bytes();
    const auto s7 = encode_tile(t.points, {7, 75}, 0, t.tile_id).size_bytes();
    const auto s9 = encode_tile(t.points, {9, 75}, 0, t.tile_id).size_bytes();
    CHECK(s6 < s7);
    CHECK(s7 < s9);
  }
}

TEST_CASE("identical input gives identical bytes")
{
  std::mt19937_64 rng(2);
  const auto pts = testutil::random_cloud(rng, 5000);
  CHECK(encode_tile(pts, {9, 75}, 1, 1).payload == encode_tile(pts, {9, 75}, 1, 1).payload);
}

TEST_CASE("adaptation set: 3 tiles x 3 qualities, parallel equals sequential")
{
  SynthConfig cfg;
  cfg.point_count = 40000;
  const auto tiles = tile_frame(synth_frame(cfg, 1), effective_poses(cfg));
  const std::vector<QualityLevel> ladder{{6, 75}, {7, 75}, {9, 75}};
  const auto par = build_adaptation_set(tiles, ladder, Execution::kParallel);
  const auto seq = build_adaptation_set(tiles, ladder, Execution::kSequential);
  REQUIRE(par.tiles.size() == 3);
  const auto meta = par.metadata();
  CHECK(meta.tile_count() == 3);
  std::size_t reps = 0;
  for (std::size_t t = 0; t < 3; ++t) {
    REQUIRE(par.tiles[t].representations.size() == 3);
    REQUIRE(meta.tiles[t].levels.size() == 3);
    for (std::size_t q = 0; q < 3; ++q) {
      ++reps;
      const auto& rep = par.tiles[t].representations[q];
      CHECK(rep.payload == seq.tiles[t].representations[q].payload);
      CHECK(meta.tiles[t].levels[q].size_bytes == rep.size_bytes());
      CHECK(meta.tiles[t].levels[q].quality == ladder[q]);
      CHECK(&par.representation(par.tiles[t].tile_id, q) == &rep);
    }
    CHECK(meta.tiles[t].orientation == tiles.tiles[t].orientation);
    CHECK(meta.tiles[t].bbox_centroid == tiles.tiles[t].bbox_centroid);
  }
  CHECK(reps == 9);
}

TEST_CASE("adaptation set degenerates to one representation")
{
  std::mt19937_64 rng(3);
  TileSet ts;
  ts.tiles.push_back({0, {0, 0, 1}, {0, 0, 0}, testutil::random_cloud(rng, 100)});
  const std::vector<QualityLevel> one{{7, 75}};
  const auto set = build_adaptation_set(ts, one);
  REQUIRE(set.tiles.size() == 1);
  CHECK(set.tiles[0].representations.size() == 1);
}

TEST_CASE("ladder validation and error tagging")
{
  TileSet ts;
  std::mt19937_64 rng(3);
  ts.tiles.push_back({0, {0, 0, 1}, {0, 0, 0}, testutil::random_cloud(rng, 10)});
  ts.tiles.push_back({1, {0, 0, 1}, {0, 0, 0}, testutil::random_cloud(rng, 10)});
  ts.tiles[1].points[3].position[1] = std::numeric_limits<float>::quiet_NaN();
  const std::vector<QualityLevel> bad{{7, 75}, {6, 75}};
  CHECK_THROWS_AS(build_adaptation_set(ts, bad), InvalidInput);
  const std::vector<QualityLevel> none;
  CHECK_THROWS_AS(build_adaptation_set(ts, none), InvalidInput);
  const std::vector<QualityLevel> ok{{6, 75}};
  try {
    build_adaptation_set(ts, ok);
    FAIL("expected CodecError");
  } catch (const CodecError& e) {
    CHECK(e.kind() == CodecErrorKind::kNonFiniteInput);
    CHECK(std::string(e.what()).find("tile 1") != std::string::npos);
    CHECK(std::string(e.what()).find("depth 6") != std::string::npos);
  }
}

TEST_CASE("full-cloud encode")
{
  SynthConfig cfg;
  cfg.point_count = 20000;
  auto f = synth_frame(cfg, 0);
  const auto rep = encode_full(f, {9, 75});
  CHECK(rep.tile_id == 0);
  const auto out = decode_full(rep);
  CHECK(testutil::hausdorff(f.points, out) <=
        bound_of(rep) + position_slack(f.points, parse_header(rep.payload).cube_edge));

  for (auto& p : f.points) p.sensor_id = 0;
  CHECK(encode_full(f, {7, 75}).payload == encode_tile(f.points, {7, 75}, f.frame_index, 0).payload);
}

TEST_CASE("tile sizes add up to about the full-cloud size")
{
  SynthConfig cfg;
  const auto f = synth_frame(cfg, 5);
  const auto tiles = tile_frame(f, effective_poses(cfg));
  for (std::uint8_t depth : {6, 7, 9}) {
    std::size_t sum = 0;
    for (const auto& t : tiles.tiles) sum += encode_tile(t.points, {depth, 75}, 0, t.tile_id).size_bytes();
    const double full = double(encode_full(f, {depth, 75}).size_bytes());
    CHECK(std::abs(double(sum) - full) <= 0.15 * full);
  }
}

TEST_CASE("encode input errors")
{
  auto kind = [](std::span<const Point> pts, QualityLevel q) {
    try {
      encode_tile(pts, q, 0, 0);
    } catch (const CodecError& e) {
      return e.kind();
    }
    FAIL("no error");
    return CodecErrorKind::kBadMagic;
  };
  std::vector<Point> none;
  std::vector<Point> one{at(0, 0, 0)};
  std::vector<Point> inf{at(0, std::numeric_limits<float>::infinity(), 0)};
  CHECK(kind(none, {6, 75}) == CodecErrorKind::kEmptyInput);
  CHECK(kind(one, {0, 75}) == CodecErrorKind::kDepthOutOfRange);
  CHECK(kind(one, {17, 75}) == CodecErrorKind::kDepthOutOfRange);
  CHECK(kind(one, {6, 101}) == CodecErrorKind::kQpOutOfRange);
  CHECK(kind(inf, {6, 75}) == CodecErrorKind::kNonFiniteInput);
}

TEST_CASE("each corruption maps to its own decode error")
{
  std::mt19937_64 rng(8);
  const auto pts = testutil::random_cloud(rng, 500);
  const auto good = encode_tile(pts, {6, 75}, 0, 0).payload;
  const std::uint32_t occ = get_u32(good, 30);
  REQUIRE(decode_tile(good).size() == get_u32(good, 38));

  auto b = good;
  b[0] = 'X';
  CHECK(decode_kind(b) == CodecErrorKind::kBadMagic);
  b = good;
  b[4] = 2;
  CHECK(decode_kind(b) == CodecErrorKind::kVersionMismatch);
  b = good;
  b[5] = 1;
  CHECK(decode_kind(b) == CodecErrorKind::kUnsupportedAttrMode);
  CHECK(decode_kind({good.begin(), good.begin() + 20}) == CodecErrorKind::kTruncatedHeader);
  CHECK(decode_kind({good.begin(), good.begin() + kHeaderBytes + occ / 2}) ==
        CodecErrorKind::kTruncatedOccupancy);
  CHECK(decode_kind({good.begin(), good.end() - 1}) == CodecErrorKind::kTruncatedAttributes);
  b = good;
  b.push_back(0);
  CHECK(decode_kind(b) == CodecErrorKind::kTrailingBytes);
  b = good;
  b[kHeaderBytes] = 0;
  CHECK(decode_kind(b) == CodecErrorKind::kOccupancyInconsistent);
  b = good;
  put_u32(b, 38, get_u32(good, 38) + 1);
  CHECK(decode_kind(b) == CodecErrorKind::kLeafCountMismatch);
}
