#include "tpcs/harness/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "tpcs/ply.hpp"

namespace tpcs::harness {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string frame_file_name(std::uint32_t k)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%05u.ply", k);
  return buf;
}

}  // namespace

void write_manifest(const fs::path& dir, const SequenceManifest& m)
{
  json poses = json::array();
  for (const auto& p : m.poses)
    poses.push_back({{"sensor_id", p.sensor_id},
                     {"transform", std::vector<double>(p.transform.begin(), p.transform.end())}});
  json doc = {{"frame_count", m.frame_count}, {"fps", m.fps}, {"poses", poses}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write '" + (dir / "manifest.json").string() + "'");
  out << doc.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed for '" + (dir / "manifest.json").string() + "'");
}

SequenceManifest read_manifest(const fs::path& dir)
{
  const fs::path path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
  SequenceManifest m;
  try {
    const json doc = json::parse(in);
    m.frame_count = doc.at("frame_count").get<std::uint32_t>();
    m.fps = doc.at("fps").get<double>();
    for (const json& p : doc.at("poses")) {
      SensorPose pose;
      pose.sensor_id = p.at("sensor_id").get<std::uint8_t>();
      const auto t = p.at("transform").get<std::vector<double>>();
      if (t.size() != 16) throw InvalidInput("pose transform needs 16 numbers");
      std::copy(t.begin(), t.end(), pose.transform.begin());
      m.poses.push_back(pose);
    }
  } catch (const json::exception& e) {
    throw InvalidInput("bad manifest '" + path.string() + "': " + e.what());
  }
  return m;
}

void write_synth_sequence(const SynthConfig& config, const fs::path& dir, PlyFormat format)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());
  for (std::uint32_t k = 0; k < config.frame_count; ++k)
    emit_ply(synth_frame(config, k), dir / frame_file_name(k), format);
  write_manifest(dir, {config.frame_count, config.fps, effective_poses(config)});
}

Sequence open_sequence(const SourceConfig& config)
{
  Sequence seq;
  if (config.kind == SourceKind::kSynthetic) {
    const SynthConfig synth = config.synth;
    seq.poses = effective_poses(synth);
    seq.fps = synth.fps;
    seq.source.frame_count = synth.frame_count;
    seq.source.frame = [synth](std::uint32_t k) { return synth_frame(synth, k); };
    return seq;
  }
  if (!fs::is_directory(config.ply_dir))
    throw InvalidInput("PLY directory '" + config.ply_dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(config.ply_dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("frame_", 0) == 0 && e.path().extension() == ".ply")
      files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InvalidInput("no frame_*.ply in '" + config.ply_dir.string() + "'");
  if (fs::exists(config.ply_dir / "manifest.json")) {
    seq.poses = read_manifest(config.ply_dir).poses;
  } else {
    int sensors = 1;
    const auto first = load_ply(files.front());
    sensors = std::max<int>(1, first.sensor_count);
    seq.poses = default_sensor_ring(sensors);
  }
  seq.fps = config.fps;
  seq.source.frame_count = static_cast<std::uint32_t>(files.size());
  const double period = 1000.0 / config.fps;
  seq.source.frame = [files, period](std::uint32_t k) {
    PointCloudFrame f = load_ply(files.at(k));
    f.frame_index = k;
    f.capture_timestamp_ms = k * period;
    return f;
  };
  return seq;
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* log)
{
  if (config.conditions.empty()) throw InvalidInput("experiment has no conditions");
  const Sequence seq = open_sequence(config.source);
  const double sequence_ms = seq.source.frame_count * 1000.0 / seq.fps;

  fs::create_directories(config.output_dir);
  const ViewportTrace trace = [&] {
    if (!config.viewport_trace.empty()) {
      ViewportTrace t = load_viewport_trace(config.viewport_trace);
      if (t.end_ms() - t.start_ms() < sequence_ms)
        throw InvalidInput("viewport trace covers " + std::to_string(t.end_ms() - t.start_ms()) +
                           " ms, sequence needs " + std::to_string(sequence_ms) + " ms");
      return t;
    }
    ViewportTrace t = orbit_trace(config.orbit, sequence_ms);
    t.save(config.output_dir / "viewport_trace.csv");
    return t;
  }();
  const stream::ViewportProvider viewport = [&trace](double t) { return trace.at(t); };

  ExperimentResult result;
  std::vector<ConditionSummary> summaries;
  for (const Condition& cond : config.conditions) {
    const fs::path dir = config.output_dir / cond.name;
    fs::create_directories(dir);
    if (log) *log << "running condition '" << cond.name << "' (" << to_string(cond.stream.mode) << ")\n";

    std::uint32_t dumped = 0;
    stream::PresentSink sink;
    if (cond.dump_frames > 0) {
      fs::create_directories(dir / "presented");
      sink = [&](const stream::PresentedFrame& pf) {
        if (dumped >= cond.dump_frames) return;
        ++dumped;
        PointCloudFrame f;
        f.frame_index = pf.frame_index;
        f.capture_timestamp_ms = pf.capture_ts_ms;
        for (const auto& tile : pf.tiles) f.points.insert(f.points.end(), tile.points.begin(), tile.points.end());
        f.sensor_count = static_cast<std::uint8_t>(seq.poses.size());
        emit_ply(f, dir / "presented" / frame_file_name(pf.frame_index), PlyFormat::kBinaryLittleEndian);
      };
    }

    ConditionResult cr;
    try {
      cr.session = stream::run_session(cond.stream, seq.source, seq.poses, viewport, sink);
    } catch (const std::exception& e) {
      throw std::runtime_error("condition '" + cond.name + "' failed: " + e.what());
    }
    FramesTable table{to_string(cond.stream.mode), cond.stream.fps, cr.session.frames};
    cr.frames_csv = dir / "frames.csv";
    write_frames_csv(cr.frames_csv, table);
    cr.summary = summarize(cond.name, table);
    summaries.push_back(cr.summary);
    result.conditions.push_back(std::move(cr));
  }

  result.summary_path = config.output_dir / "summary.json";
  std::ofstream out(result.summary_path);
  if (!out) throw std::runtime_error("cannot write '" + result.summary_path.string() + "'");
  out << summary_json(summaries);
  return result;
}

}  // namespace tpcs::harness
