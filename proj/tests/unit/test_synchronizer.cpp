#include <doctest.h>

#include <algorithm>
#include <random>
#include <thread>

#include "tpcs/stream/synchronizer.hpp"

using namespace tpcs;
using namespace tpcs::stream;

namespace {

DecodedTile tile(std::uint32_t frame, std::uint8_t id, std::uint8_t expected, double capture)
{
  DecodedTile t;
  t.frame_index = frame;
  t.tile_id = id;
  t.expected_tiles = expected;
  t.capture_ts_ms = capture;
  Point p;
  p.sensor_id = id;
  p.position = {float(frame), 0, 0};
  t.points = {p};
  return t;
}

SyncConfig fixed(double offset)
{
  SyncConfig c;
  c.playout_offset_ms = offset;
  return c;
}

}  // namespace

TEST_CASE("three tiles release one frame exactly once")
{
  Synchronizer s(fixed(50));
  for (std::uint8_t t = 0; t < 3; ++t) CHECK(s.ingest(tile(3, t, 3, 200), 210 + t) == IngestResult::kAccepted);
  CHECK_FALSE(s.poll(240).has_value());
  CHECK(s.next_deadline() == doctest::Approx(250));
  const auto f = s.poll(250);
  REQUIRE(f.has_value());
  CHECK(f->frame_index == 3);
  CHECK(f->tiles.size() == 3);
  CHECK(f->complete_ts_ms == 212);
  CHECK_FALSE(s.poll(300).has_value());
  CHECK(s.ingest(tile(3, 0, 3, 200), 300) == IngestResult::kStale);
}

TEST_CASE("incomplete frame past its deadline is skipped for a newer complete one")
{
  Synchronizer s(fixed(100));
  s.ingest(tile(3, 0, 3, 200), 250);
  s.ingest(tile(3, 1, 3, 200), 260);
  for (std::uint8_t t = 0; t < 3; ++t) s.ingest(tile(4, t, 3, 266.7), 330);
  CHECK_FALSE(s.poll(360).has_value());
  const auto f = s.poll(366.7);
  REQUIRE(f.has_value());
  CHECK(f->frame_index == 4);
  const auto dropped = s.take_dropped();
  CHECK(dropped == std::vector<std::uint32_t>{3});
  CHECK(s.ingest(tile(3, 2, 3, 200), 370) == IngestResult::kStale);
}

TEST_CASE("late frame is shown on completion unless a newer one is ready")
{
  Synchronizer s(fixed(50));
  s.ingest(tile(1, 0, 1, 0), 80);  // deadline 50, completes at 80
  const auto f = s.poll(80);
  REQUIRE(f.has_value());
  CHECK(f->frame_index == 1);

  s.ingest(tile(2, 0, 1, 66.7), 200);  // late
  s.ingest(tile(3, 0, 1, 133.3), 201);
  const auto g = s.poll(201);
  REQUIRE(g.has_value());
  CHECK(g->frame_index == 3);
  CHECK(s.take_dropped() == std::vector<std::uint32_t>{2});
}

TEST_CASE("duplicates and inconsistent tile counts")
{
  Synchronizer s(fixed(10));
  CHECK(s.ingest(tile(1, 0, 2, 0), 1) == IngestResult::kAccepted);
  CHECK(s.ingest(tile(1, 0, 2, 0), 2) == IngestResult::kDuplicate);
  CHECK(s.duplicate_count() == 1);
  CHECK(s.ingest(tile(1, 1, 3, 0), 3) == IngestResult::kInconsistent);
  CHECK(s.ingest(tile(1, 1, 0, 0), 3) == IngestResult::kInconsistent);
  CHECK_FALSE(s.poll(100).has_value());
}

TEST_CASE("offset calibrates to the nearest-rank p95 of the first ten delays")
{
  Synchronizer s;
  std::vector<double> delays{30, 12, 55, 20, 41, 18, 25, 33, 27, 22};
  double t = 0;
  for (std::uint32_t k = 0; k < 10; ++k) {
    const double capture = k * 100.0;
    s.ingest(tile(k, 0, 1, capture), capture + delays[k]);
    CHECK_FALSE(s.playout_offset_ms().has_value());
    const auto f = s.poll(capture + delays[k]);
    REQUIRE(f.has_value());
    t = capture;
  }
  (void)t;
  auto sorted = delays;
  std::sort(sorted.begin(), sorted.end());
  REQUIRE(s.playout_offset_ms().has_value());
  CHECK(*s.playout_offset_ms() == sorted[9]);  // ceil(0.95 * 10) = 10th value
  s.ingest(tile(10, 0, 1, 1000), 1010);
  CHECK_FALSE(s.poll(1010).has_value());
  CHECK(s.poll(1055)->frame_index == 10);
}

TEST_CASE("abandon drops a frame that cannot complete")
{
  Synchronizer s(fixed(10));
  s.ingest(tile(5, 0, 2, 0), 1);
  s.abandon(5);
  CHECK(s.take_dropped() == std::vector<std::uint32_t>{5});
  CHECK(s.ingest(tile(5, 1, 2, 0), 2) == IngestResult::kAccepted);
}

TEST_CASE("fuzz: random arrival order and losses")
{
  std::mt19937_64 rng(99);
  for (int iter = 0; iter < 300; ++iter) {
    std::uniform_int_distribution<int> nt(1, 3);
    std::bernoulli_distribution lose(0.1), dup(0.05), fixed_offset(0.5);
    Synchronizer s = fixed_offset(rng) ? Synchronizer(fixed(std::uniform_real_distribution<double>(0, 300)(rng)))
                                       : Synchronizer();
    struct Arrival { double t; DecodedTile tile; };
    std::vector<Arrival> arrivals;
    std::uniform_real_distribution<double> delay(5, 400);
    for (std::uint32_t f = 0; f < 100; ++f) {
      const std::uint8_t n = std::uint8_t(nt(rng));
      for (std::uint8_t t = 0; t < n; ++t) {
        if (lose(rng)) continue;
        arrivals.push_back({f * 66.7 + delay(rng), tile(f, t, n, f * 66.7)});
        if (dup(rng)) arrivals.push_back({f * 66.7 + delay(rng), tile(f, t, n, f * 66.7)});
      }
    }
    std::sort(arrivals.begin(), arrivals.end(), [](auto& a, auto& b) { return a.t < b.t; });
    std::optional<std::uint32_t> last;
    auto check = [&](const PresentedFrame& p) {
      if (last) CHECK(p.frame_index > *last);
      last = p.frame_index;
      REQUIRE(!p.tiles.empty());
      CHECK(p.tiles.size() == p.tiles[0].expected_tiles);
      for (std::size_t i = 0; i < p.tiles.size(); ++i) {
        CHECK(p.tiles[i].frame_index == p.frame_index);
        CHECK(p.tiles[i].points[0].position[0] == float(p.frame_index));
        if (i) CHECK(p.tiles[i].tile_id > p.tiles[i - 1].tile_id);
      }
    };
    for (const auto& a : arrivals) {
      s.ingest(a.tile, a.t);
      while (auto p = s.poll(a.t)) check(*p);
    }
    while (auto d = s.next_deadline())
      if (auto p = s.poll(*d)) check(*p);
  }
}

TEST_CASE("concurrent ingestion from several workers")
{
  Synchronizer s(fixed(1e9));
  std::vector<std::thread> workers;
  for (std::uint8_t t = 0; t < 4; ++t)
    workers.emplace_back([&s, t] {
      for (std::uint32_t f = 0; f < 500; ++f) s.ingest(tile(f, t, 4, 0.0), 1.0);
    });
  for (auto& w : workers) w.join();
  CHECK(s.duplicate_count() == 0);
  const auto p = s.poll(2e9);
  REQUIRE(p.has_value());
  CHECK(p->tiles.size() == 4);
}
