#include <doctest.h>

#include <cmath>
#include <set>

#include "tpcs/stream/receiver.hpp"
#include "tpcs/stream/session.hpp"
#include "tpcs/synth.hpp"

using namespace tpcs;
using namespace tpcs::stream;

namespace {

struct Fixture {
  SynthConfig synth;
  FrameSource source;
  std::vector<SensorPose> poses;

  explicit Fixture(std::uint32_t points = 20000, std::uint32_t frames = 20)
  {
    synth.point_count = points;
    synth.frame_count = frames;
    poses = effective_poses(synth);
    const SynthConfig s = synth;
    source.frame_count = frames;
    source.frame = [s](std::uint32_t k) { return synth_frame(s, k); };
  }
};

ViewportProvider front_view()
{
  return [](double t) { return adapt::Viewport{{0.0, 0.3, 1.5}, {0.0, 0.0, -1.0}, t}; };
}

StreamConfig config(Mode mode, double mbps, double bandwidth_mbps = 100.0)
{
  StreamConfig c;
  c.mode = mode;
  c.target_bitrate_bps = mbps * 1e6;
  c.channel.bandwidth_bps = bandwidth_mbps * 1e6;
  return c;
}

FrameOffer three_tile_offer()
{
  FrameOffer offer;
  offer.frame_index = 0;
  const Vec3 orient[3] = {{0, 0, 1}, {1, 0, 0}, {1, 0, 0}};
  const Vec3 centroid[3] = {{0, 0, 1}, {0, 0, 2}, {0, 0, 3}};
  for (std::uint8_t t = 0; t < 3; ++t) {
    adapt::TileMetadata::Entry e;
    e.tile_id = t;
    e.orientation = orient[t];
    e.bbox_centroid = centroid[t];
    e.levels = {{{6, 75}, 100}, {{7, 75}, 200}, {{9, 75}, 400}};
    offer.metadata.tiles.push_back(e);
  }
  return offer;
}

void check_timeline_contract(const SessionResult& r, std::uint32_t frames)
{
  REQUIRE(r.frames.size() == frames);
  std::optional<double> last_present;
  for (std::uint32_t k = 0; k < frames; ++k) {
    const auto& t = r.frames[k];
    CHECK(t.frame_index == k);
    CHECK(t.encode_ms >= 0.0);
    CHECK(t.transmit_ms >= 0.0);
    CHECK(t.decode_ms >= 0.0);
    CHECK(t.sync_wait_ms >= 0.0);
    if (t.presented) {
      CHECK(t.drop_reason.empty());
      CHECK(std::abs(t.end_to_end_ms - (t.present_ts_ms - t.capture_ts_ms)) <= 0.1 + 1e-9);
      if (last_present) CHECK(t.present_ts_ms >= *last_present);
      last_present = t.present_ts_ms;
    } else {
      CHECK_FALSE(t.drop_reason.empty());
    }
  }
}

}  // namespace

TEST_CASE("receiver upgrades the tile the viewer faces first")
{
  StreamConfig c = config(Mode::kTiledAdaptive, 400 * 8 * 15 / 1e6);
  Receiver rx(c, [](double t) { return adapt::Viewport{{0, 0, 0}, {0, 0, 1}, t}; });
  const auto d = rx.on_offer(three_tile_offer(), 0.0);
  CHECK(d.budget_bytes == 400);
  CHECK(d.summary == "0:1|1:0|2:0");
  CHECK(d.selected_bytes == 400);
  CHECK(d.requests.size() == 3);
}

TEST_CASE("orthogonal viewport ranks by distance")
{
  StreamConfig c = config(Mode::kTiledAdaptive, 400 * 8 * 15 / 1e6);
  // facing +Y: every tile orientation is orthogonal; tile 2 is nearest
  Receiver rx(c, [](double t) { return adapt::Viewport{{0, 0, 3.2}, {0, 1, 0}, t}; });
  const auto d = rx.on_offer(three_tile_offer(), 0.0);
  CHECK(d.summary == "0:0|1:0|2:1");
}

TEST_CASE("network-adaptive receiver asks for the whole cloud")
{
  StreamConfig c = config(Mode::kNetworkAdaptive, 14);
  Receiver rx(c, front_view());
  FrameOffer offer = three_tile_offer();
  offer.full_cloud = true;
  offer.metadata.tiles.resize(1);
  offer.metadata.tiles[0].tile_id = kFullCloudRequestTile;
  const auto d = rx.on_offer(offer, 0.0);
  REQUIRE(d.requests.size() == 1);
  CHECK(d.requests[0].tile_id == kFullCloudRequestTile);
  CHECK(d.requests[0].quality_index == 2);
  CHECK(d.summary == "q2");
}

TEST_CASE("uncompressed stream sends 16 bytes per point")
{
  Fixture fx(10000, 15);
  auto c = config(Mode::kUncompressed, 0, 1000);
  const auto r = run_simulated_session(c, fx.source, fx.poses, front_view());
  check_timeline_contract(r, 15);
  for (std::uint32_t k = 0; k < 15; ++k) {
    CHECK(r.frames[k].presented);
    CHECK(r.frames[k].bytes_sent == fx.source.frame(k).points.size() * 16);
    CHECK(r.frames[k].selection == "-");
  }
}

TEST_CASE("tiled and network-adaptive runs respect the budget")
{
  Fixture fx(30000, 20);
  for (Mode mode : {Mode::kTiledAdaptive, Mode::kNetworkAdaptive})
    for (double mbps : {2.0, 7.0}) {
      const auto c = config(mode, mbps);
      const auto budget = adapt::frame_budget(c.target_bitrate_bps, c.fps).bytes;
      const auto r = run_simulated_session(c, fx.source, fx.poses, front_view());
      check_timeline_contract(r, 20);
      for (const auto& t : r.frames) {
        CHECK(t.budget_bytes == budget);
        if (!t.budget_violated) CHECK(t.bytes_sent <= budget);
        CHECK(t.control_bytes > 0);
        if (mode == Mode::kTiledAdaptive) CHECK(std::count(t.selection.begin(), t.selection.end(), '|') == 2);
        else CHECK(t.selection[0] == 'q');
      }
    }
}

TEST_CASE("fast pipeline presents every frame at the capture rate")
{
  Fixture fx(20000, 30);
  const auto r = run_simulated_session(config(Mode::kTiledAdaptive, 14), fx.source, fx.poses, front_view());
  std::size_t shown = 0;
  for (const auto& t : r.frames) shown += t.presented;
  CHECK(shown == 30);
  // presentation spacing follows capture spacing once calibrated
  for (std::size_t k = 12; k < 30; ++k)
    CHECK(r.frames[k].present_ts_ms - r.frames[k - 1].present_ts_ms == doctest::Approx(1000.0 / 15).epsilon(0.01));
}

TEST_CASE("simulated runs are deterministic")
{
  Fixture fx(20000, 20);
  const auto c = config(Mode::kTiledAdaptive, 7, 10);
  const auto a = run_simulated_session(c, fx.source, fx.poses, front_view());
  const auto b = run_simulated_session(c, fx.source, fx.poses, front_view());
  REQUIRE(a.frames.size() == b.frames.size());
  for (std::size_t k = 0; k < a.frames.size(); ++k) {
    CHECK(a.frames[k].present_ts_ms == b.frames[k].present_ts_ms);
    CHECK(a.frames[k].bytes_sent == b.frames[k].bytes_sent);
    CHECK(a.frames[k].selection == b.frames[k].selection);
    CHECK(a.frames[k].drop_reason == b.frames[k].drop_reason);
  }
}

TEST_CASE("overloaded link queues frames and latency grows")
{
  // 20k points x 16 B needs 128 ms per frame on 20 Mbps; the link has no
  // congestion control, so the backlog builds up.
  Fixture fx(20000, 30);
  const auto r = run_simulated_session(config(Mode::kUncompressed, 0, 20), fx.source, fx.poses, front_view());
  check_timeline_contract(r, 30);
  std::vector<double> latency;
  for (const auto& t : r.frames)
    if (t.presented) latency.push_back(t.end_to_end_ms);
  REQUIRE(latency.size() >= 2);
  CHECK(latency.back() > latency.front() + 500.0);
}

TEST_CASE("encode failure drops only that frame")
{
  Fixture fx(5000, 10);
  auto inner = fx.source.frame;
  fx.source.frame = [inner](std::uint32_t k) {
    auto f = inner(k);
    if (k == 4) f.points[0].position[0] = std::nanf("");
    return f;
  };
  const auto r = run_simulated_session(config(Mode::kTiledAdaptive, 14), fx.source, fx.poses, front_view());
  CHECK_FALSE(r.frames[4].presented);
  CHECK(r.frames[4].drop_reason == "encode_error");
  CHECK(r.frames[5].presented);
}

TEST_CASE("top-quality decode penalty is split across tiles")
{
  Fixture fx(20000, 30);
  auto na = config(Mode::kNetworkAdaptive, 200, 1000);
  auto ta = config(Mode::kTiledAdaptive, 200, 1000);
  na.cost.top_quality_decode_penalty_ms = ta.cost.top_quality_decode_penalty_ms = 90.0;
  const auto rn = run_simulated_session(na, fx.source, fx.poses, front_view());
  const auto rt = run_simulated_session(ta, fx.source, fx.poses, front_view());
  std::size_t shown_na = 0, shown_ta = 0;
  for (const auto& t : rn.frames) {
    shown_na += t.presented;
    if (t.presented) CHECK(t.decode_ms >= 90.0);
  }
  for (const auto& t : rt.frames) {
    shown_ta += t.presented;
    if (t.presented) CHECK(t.decode_ms < 66.7);
  }
  CHECK(shown_na < 30);
  CHECK(shown_ta == 30);
}

TEST_CASE("socket session streams over loopback")
{
  Fixture fx(5000, 12);
  for (Mode mode : {Mode::kUncompressed, Mode::kNetworkAdaptive, Mode::kTiledAdaptive}) {
    auto c = config(mode, 14);
    c.channel.mode = ChannelMode::kSocket;
    std::set<std::uint32_t> sunk;
    const auto r = run_socket_session(c, fx.source, fx.poses, front_view(), [&](const PresentedFrame& f) {
      sunk.insert(f.frame_index);
      for (const auto& t : f.tiles) CHECK(t.frame_index == f.frame_index);
    });
    REQUIRE(r.frames.size() == 12);
    std::size_t shown = 0;
    for (const auto& t : r.frames) {
      shown += t.presented;
      if (t.presented) CHECK(sunk.count(t.frame_index) == 1);
    }
    CHECK(shown == sunk.size());
    CHECK(shown >= 6);
  }
}
