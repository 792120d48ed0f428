// tpcs command-line front end: synth, simulate, report, encode, calibrate.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "tpcs/codec.hpp"
#include "tpcs/harness/config.hpp"
#include "tpcs/harness/experiment.hpp"
#include "tpcs/harness/metrics.hpp"
#include "tpcs/ply.hpp"
#include "tpcs/stream/wire.hpp"
#include "tpcs/synth.hpp"
#include "tpcs/tiling.hpp"

namespace fs = std::filesystem;
using namespace tpcs;

namespace {

std::vector<QualityLevel> parse_qualities(const std::string& text)
{
  // Reuse the config grammar so both accept the same ladder syntax.
  const auto cfg = harness::parse_experiment_config(
      "[condition x]\nmode = ta\ntarget_bitrate_mbps = 1\nqualities = " + text + "\n");
  return cfg.conditions.front().stream.qualities;
}

int run_synth(std::uint32_t points, std::uint32_t frames, double fps, std::uint64_t seed,
              int sensors, bool ascii, const fs::path& out)
{
  SynthConfig cfg;
  cfg.point_count = points;
  cfg.frame_count = frames;
  cfg.fps = fps;
  cfg.seed = seed;
  cfg.poses = default_sensor_ring(sensors);
  harness::write_synth_sequence(cfg, out, ascii ? PlyFormat::kAscii : PlyFormat::kBinaryLittleEndian);
  std::cout << "wrote " << frames << " frames to " << out.string() << "\n";
  return 0;
}

int run_simulate(const fs::path& config_path, const std::string& output_override, bool quiet)
{
  harness::ExperimentConfig cfg;
  try {
    cfg = harness::load_experiment_config(config_path);
  } catch (const harness::ConfigError& e) {
    std::cerr << config_path.string() << ": " << e.what() << "\n";
    return 2;
  }
  if (!output_override.empty()) cfg.output_dir = output_override;
  const auto result = harness::run_experiment(cfg, quiet ? nullptr : &std::cerr);
  std::vector<harness::ConditionSummary> summaries;
  for (const auto& c : result.conditions) summaries.push_back(c.summary);
  if (!quiet) std::cout << harness::format_report_text(summaries);
  std::cout << "summary: " << result.summary_path.string() << "\n";
  return 0;
}

int run_report(const std::vector<std::string>& csvs, const std::string& out_csv)
{
  std::vector<harness::ConditionSummary> summaries;
  for (const auto& path : csvs) {
    const fs::path p(path);
    std::string name = p.parent_path().filename().string();
    if (name.empty()) name = p.stem().string();
    summaries.push_back(harness::summarize(name, harness::read_frames_csv(p)));
  }
  std::cout << harness::format_report_text(summaries);
  if (!out_csv.empty()) {
    std::ofstream out(out_csv);
    if (!out) throw std::runtime_error("cannot write '" + out_csv + "'");
    out << harness::format_report_csv(summaries);
  }
  return 0;
}

struct EncodeInput {
  PointCloudFrame frame;
  std::vector<SensorPose> poses;
};

EncodeInput load_encode_input(const std::string& ply, std::uint32_t synth_index,
                              std::uint32_t points, std::uint64_t seed)
{
  EncodeInput in;
  if (!ply.empty()) {
    in.frame = load_ply(ply);
    const fs::path dir = fs::path(ply).parent_path();
    if (fs::exists(dir / "manifest.json")) in.poses = harness::read_manifest(dir).poses;
    else in.poses = default_sensor_ring(std::max<int>(1, in.frame.sensor_count));
  } else {
    SynthConfig cfg;
    cfg.point_count = points;
    cfg.seed = seed;
    in.frame = synth_frame(cfg, synth_index);
    in.poses = effective_poses(cfg);
  }
  return in;
}

int run_encode(const EncodeInput& in, const std::vector<QualityLevel>& ladder, const std::string& out)
{
  const TileSet tiles = tile_frame(in.frame, in.poses);
  const auto set = codec::build_adaptation_set(tiles, ladder);
  std::printf("frame %u: %zu points, %zu tiles\n", in.frame.frame_index, in.frame.points.size(),
              set.tiles.size());
  std::printf("%4s %5s %5s %3s %9s %9s %10s\n", "tile", "qidx", "depth", "qp", "in_pts", "leaves", "bytes");
  for (const auto& t : set.tiles)
    for (std::size_t q = 0; q < t.representations.size(); ++q) {
      const auto& r = t.representations[q];
      std::printf("%4u %5zu %5u %3u %9zu %9u %10zu\n", t.tile_id, q, r.quality.octree_depth,
                  r.quality.qp, r.input_point_count, r.point_count, r.size_bytes());
    }
  for (std::size_t q = 0; q < ladder.size(); ++q) {
    const auto full = codec::encode_full(in.frame, ladder[q]);
    std::printf("full %5zu %5u %3u %9zu %9u %10zu\n", q, ladder[q].octree_depth, ladder[q].qp,
                full.input_point_count, full.point_count, full.size_bytes());
  }
  if (!out.empty()) {
    fs::create_directories(out);
    for (const auto& t : set.tiles)
      for (std::size_t q = 0; q < t.representations.size(); ++q) {
        std::ofstream f(fs::path(out) / ("tile" + std::to_string(t.tile_id) + "_q" + std::to_string(q) + ".pct"),
                        std::ios::binary);
        const auto& p = t.representations[q].payload;
        f.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size()));
      }
    const auto meta = adapt::serialize_metadata(set.metadata());
    std::ofstream f(fs::path(out) / "metadata.bin", std::ios::binary);
    f.write(reinterpret_cast<const char*>(meta.data()), static_cast<std::streamsize>(meta.size()));
  }
  return 0;
}

// Least-squares fit of the encode/decode cost model to wall-clock timings.
int run_calibrate(const EncodeInput& in, const std::vector<QualityLevel>& ladder, int repeats)
{
  using clock = std::chrono::steady_clock;
  const TileSet tiles = tile_frame(in.frame, in.poses);
  struct Sample { double input, leaves, enc_ms, dec_ms; };
  std::vector<Sample> samples;
  for (const auto& tile : tiles.tiles)
    for (const auto& q : ladder) {
      double enc = 1e300, dec = 1e300;
      codec::EncodedRepresentation rep;
      for (int r = 0; r < repeats; ++r) {
        auto t0 = clock::now();
        rep = codec::encode_tile(tile.points, q, 0, tile.tile_id);
        auto t1 = clock::now();
        auto pts = codec::decode_tile(rep);
        auto t2 = clock::now();
        enc = std::min(enc, std::chrono::duration<double, std::milli>(t1 - t0).count());
        dec = std::min(dec, std::chrono::duration<double, std::milli>(t2 - t1).count());
      }
      samples.push_back({double(tile.points.size()), double(rep.point_count), enc, dec});
    }
  // encode_ms = a + b*input + c*leaves via 3x3 normal equations.
  double m[3][4] = {};
  for (const auto& s : samples) {
    const double x[3] = {1.0, s.input, s.leaves};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) m[i][j] += x[i] * x[j];
      m[i][3] += x[i] * s.enc_ms;
    }
  }
  for (int i = 0; i < 3; ++i) {
    int piv = i;
    for (int r = i + 1; r < 3; ++r)
      if (std::abs(m[r][i]) > std::abs(m[piv][i])) piv = r;
    std::swap(m[i], m[piv]);
    for (int r = 0; r < 3; ++r) {
      if (r == i || m[i][i] == 0.0) continue;
      const double f = m[r][i] / m[i][i];
      for (int c = i; c < 4; ++c) m[r][c] -= f * m[i][c];
    }
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& s : samples) {
    sx += s.leaves; sy += s.dec_ms; sxx += s.leaves * s.leaves; sxy += s.leaves * s.dec_ms;
  }
  const double n = double(samples.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / n;
  std::printf("%9s %9s %9s %9s\n", "in_pts", "leaves", "enc_ms", "dec_ms");
  for (const auto& s : samples) std::printf("%9.0f %9.0f %9.3f %9.3f\n", s.input, s.leaves, s.enc_ms, s.dec_ms);
  std::printf("\nfitted cost model (condition keys):\n");
  std::printf("encode_fixed_ms = %.3f\nencode_ns_per_input_point = %.1f\nencode_ns_per_leaf = %.1f\n",
              m[0][3] / m[0][0], m[1][3] / m[1][1] * 1e6, m[2][3] / m[2][2] * 1e6);
  std::printf("decode_fixed_ms = %.3f\ndecode_ns_per_point = %.1f\n", icpt, slope * 1e6);
  return 0;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"tiled point-cloud streaming toolkit"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "write a synthetic PLY sequence");
  std::uint32_t points = 130000, frames = 150;
  double fps = 15.0;
  std::uint64_t seed = 7;
  int sensors = 3;
  bool ascii = false;
  std::string out;
  synth->add_option("--points", points, "target points per frame")->check(CLI::PositiveNumber);
  synth->add_option("--frames", frames, "frame count")->check(CLI::PositiveNumber);
  synth->add_option("--fps", fps, "capture rate")->check(CLI::PositiveNumber);
  synth->add_option("--seed", seed, "generator seed");
  synth->add_option("--sensors", sensors, "sensors on the capture ring")->check(CLI::Range(1, 255));
  synth->add_flag("--ascii", ascii, "ASCII PLY instead of binary");
  synth->add_option("--out", out, "output directory")->required();

  auto* simulate = app.add_subcommand("simulate", "run the conditions of an experiment config");
  std::string config_path, output_override;
  bool quiet = false;
  simulate->add_option("config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--output-dir", output_override, "override [experiment] output_dir");
  simulate->add_flag("-q,--quiet", quiet, "no progress or table");

  auto* report = app.add_subcommand("report", "compare conditions from frames.csv files");
  std::vector<std::string> csvs;
  std::string report_out;
  report->add_option("csv", csvs, "frames.csv files; condition = parent directory name")
      ->required()
      ->check(CLI::ExistingFile);
  report->add_option("--out", report_out, "also write the table as CSV");

  auto* encode = app.add_subcommand("encode", "build one frame's adaptation set and list sizes");
  std::string ply, qualities = "6:75,7:75,9:75", encode_out;
  std::uint32_t synth_index = 0;
  encode->add_option("--ply", ply, "input PLY (poses from manifest.json next to it)")->check(CLI::ExistingFile);
  encode->add_option("--synth-frame", synth_index, "synthetic frame index when no --ply");
  encode->add_option("--points", points, "synthetic points per frame");
  encode->add_option("--seed", seed, "synthetic seed");
  encode->add_option("--qualities", qualities, "ladder as depth:qp,...");
  encode->add_option("--out", encode_out, "write bitstreams and metadata.bin here");

  auto* calibrate = app.add_subcommand("calibrate", "fit the modeled-timing cost model on this machine");
  int repeats = 3;
  calibrate->add_option("--ply", ply, "input PLY")->check(CLI::ExistingFile);
  calibrate->add_option("--points", points, "synthetic points per frame");
  calibrate->add_option("--seed", seed, "synthetic seed");
  calibrate->add_option("--qualities", qualities, "ladder as depth:qp,...");
  calibrate->add_option("--repeats", repeats, "timing repetitions (min is kept)")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return run_synth(points, frames, fps, seed, sensors, ascii, out);
    if (*simulate) return run_simulate(config_path, output_override, quiet);
    if (*report) return run_report(csvs, report_out);
    if (*encode)
      return run_encode(load_encode_input(ply, synth_index, points, seed), parse_qualities(qualities), encode_out);
    if (*calibrate)
      return run_calibrate(load_encode_input(ply, 0, points, seed), parse_qualities(qualities), repeats);
  } catch (const harness::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
