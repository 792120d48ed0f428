#include "tpcs/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace tpcs::harness {

ConfigError::ConfigError(int line, std::string field, const std::string& message)
    : std::runtime_error("config line " + std::to_string(line) +
                         (field.empty() ? std::string() : ", field '" + field + "'") + ": " +
                         message),
      line_(line),
      field_(std::move(field))
{
}

namespace {

std::string trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Field {
  int line;
  std::string key;
  std::string value;

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(line, key, msg); }

  double number() const
  {
    double v = 0.0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || p != value.data() + value.size() || !std::isfinite(v))
      fail("expected a number, got '" + value + "'");
    return v;
  }
  double positive() const
  {
    const double v = number();
    if (!(v > 0.0)) fail("must be positive");
    return v;
  }
  double non_negative() const
  {
    const double v = number();
    if (v < 0.0) fail("must be >= 0");
    return v;
  }
  std::uint64_t unsigned_int() const
  {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || p != value.data() + value.size())
      fail("expected a non-negative integer, got '" + value + "'");
    return v;
  }
  bool boolean() const
  {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    fail("expected true/false, got '" + value + "'");
  }
};

std::vector<QualityLevel> parse_ladder(const Field& f)
{
  std::vector<QualityLevel> out;
  std::stringstream ss(f.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const auto colon = item.find(':');
    int depth = 0, qp = 0;
    bool ok = colon != std::string::npos;
    if (ok) {
      auto r1 = std::from_chars(item.data(), item.data() + colon, depth);
      auto r2 = std::from_chars(item.data() + colon + 1, item.data() + item.size(), qp);
      ok = r1.ec == std::errc() && r1.ptr == item.data() + colon && r2.ec == std::errc() &&
           r2.ptr == item.data() + item.size();
    }
    if (!ok || depth < kMinOctreeDepth || depth > kMaxOctreeDepth || qp < 0 || qp > 100)
      f.fail("bad quality level '" + item + "' (expected depth:qp)");
    out.push_back({static_cast<std::uint8_t>(depth), static_cast<std::uint8_t>(qp)});
  }
  if (out.empty()) f.fail("empty quality ladder");
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

struct PendingCondition {
  Condition condition;
  int line = 0;
  bool fps_set = false;
  bool bitrate_set = false;
};

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::filesystem::path& base_dir)
{
  ExperimentConfig cfg;
  std::vector<PendingCondition> conditions;
  std::string section;
  std::set<std::string> seen_sections;
  std::set<std::string> seen_keys;
  bool seed_set = false;
  int source_line = 0;

  using Handler = std::function<void(const Field&)>;
  const std::map<std::string, Handler> experiment_keys = {
      {"seed", [&](const Field& f) { cfg.seed = f.unsigned_int(); seed_set = true; }},
      {"output_dir", [&](const Field& f) { cfg.output_dir = resolve(base_dir, f.value); }},
      {"viewport_trace",
       [&](const Field& f) {
         cfg.viewport_trace = f.value == "orbit" ? std::filesystem::path() : resolve(base_dir, f.value);
       }},
      {"orbit_radius_m", [&](const Field& f) { cfg.orbit.radius_m = f.positive(); }},
      {"orbit_height_m", [&](const Field& f) { cfg.orbit.eye_height_m = f.number(); }},
      {"orbit_deg_per_s", [&](const Field& f) { cfg.orbit.deg_per_s = f.number(); }},
      {"orbit_start_deg", [&](const Field& f) { cfg.orbit.start_deg = f.number(); }},
  };
  const std::map<std::string, Handler> source_keys = {
      {"type",
       [&](const Field& f) {
         if (f.value == "synthetic") cfg.source.kind = SourceKind::kSynthetic;
         else if (f.value == "ply_dir") cfg.source.kind = SourceKind::kPlyDir;
         else f.fail("expected synthetic or ply_dir, got '" + f.value + "'");
       }},
      {"path", [&](const Field& f) { cfg.source.ply_dir = resolve(base_dir, f.value); }},
      {"points",
       [&](const Field& f) {
         const auto v = f.unsigned_int();
         if (v == 0 || v > 0xFFFFFFFFu) f.fail("must be in [1, 2^32)");
         cfg.source.synth.point_count = static_cast<std::uint32_t>(v);
       }},
      {"frames",
       [&](const Field& f) {
         const auto v = f.unsigned_int();
         if (v == 0 || v > 0xFFFFFFFFu) f.fail("must be in [1, 2^32)");
         cfg.source.synth.frame_count = static_cast<std::uint32_t>(v);
       }},
      {"fps",
       [&](const Field& f) {
         cfg.source.fps = f.positive();
         cfg.source.synth.fps = cfg.source.fps;
       }},
      {"count_jitter",
       [&](const Field& f) {
         const double v = f.non_negative();
         if (v >= 1.0) f.fail("must be < 1");
         cfg.source.synth.count_jitter = v;
       }},
      {"sensors",
       [&](const Field& f) {
         const auto v = f.unsigned_int();
         if (v < 1 || v > 255) f.fail("must be in [1, 255]");
         cfg.source.synth.poses = default_sensor_ring(static_cast<int>(v));
       }},
  };
  PendingCondition* cur = nullptr;
  const std::map<std::string, Handler> condition_keys = {
      {"mode",
       [&](const Field& f) {
         try {
           cur->condition.stream.mode = stream::parse_mode(f.value);
         } catch (const InvalidInput& e) {
           f.fail(e.what());
         }
       }},
      {"target_bitrate_mbps",
       [&](const Field& f) {
         cur->condition.stream.target_bitrate_bps = f.positive() * 1e6;
         cur->bitrate_set = true;
       }},
      {"fps",
       [&](const Field& f) {
         cur->condition.stream.fps = f.positive();
         cur->fps_set = true;
       }},
      {"qualities", [&](const Field& f) { cur->condition.stream.qualities = parse_ladder(f); }},
      {"allocator",
       [&](const Field& f) {
         if (f.value == "uniform_stepwise") cur->condition.stream.allocator = adapt::Allocator::kUniformStepwise;
         else if (f.value == "greedy_ranked") cur->condition.stream.allocator = adapt::Allocator::kGreedyRanked;
         else f.fail("expected uniform_stepwise or greedy_ranked, got '" + f.value + "'");
       }},
      {"channel",
       [&](const Field& f) {
         if (f.value == "simulated") cur->condition.stream.channel.mode = stream::ChannelMode::kSimulated;
         else if (f.value == "socket") cur->condition.stream.channel.mode = stream::ChannelMode::kSocket;
         else f.fail("expected simulated or socket, got '" + f.value + "'");
       }},
      {"bandwidth_mbps",
       [&](const Field& f) { cur->condition.stream.channel.bandwidth_bps = f.positive() * 1e6; }},
      {"propagation_delay_ms",
       [&](const Field& f) { cur->condition.stream.channel.propagation_delay_ms = f.non_negative(); }},
      {"timing",
       [&](const Field& f) {
         if (f.value == "modeled") cur->condition.stream.timing = stream::TimingMode::kModeled;
         else if (f.value == "measured") cur->condition.stream.timing = stream::TimingMode::kMeasured;
         else f.fail("expected modeled or measured, got '" + f.value + "'");
       }},
      {"playout_offset_ms",
       [&](const Field& f) {
         if (f.value == "auto") cur->condition.stream.sync.playout_offset_ms.reset();
         else cur->condition.stream.sync.playout_offset_ms = f.non_negative();
       }},
      {"calibration_frames",
       [&](const Field& f) {
         const auto v = f.unsigned_int();
         if (v < 1) f.fail("must be >= 1");
         cur->condition.stream.sync.calibration_frames = v;
       }},
      {"parallel_lanes",
       [&](const Field& f) {
         const auto v = f.unsigned_int();
         if (v < 1 || v > 1024) f.fail("must be in [1, 1024]");
         cur->condition.stream.cost.parallel_lanes = static_cast<int>(v);
       }},
      {"top_quality_decode_penalty_ms",
       [&](const Field& f) { cur->condition.stream.cost.top_quality_decode_penalty_ms = f.non_negative(); }},
      {"encode_fixed_ms", [&](const Field& f) { cur->condition.stream.cost.encode_fixed_ms = f.non_negative(); }},
      {"encode_ns_per_input_point",
       [&](const Field& f) { cur->condition.stream.cost.encode_ns_per_input_point = f.non_negative(); }},
      {"encode_ns_per_leaf", [&](const Field& f) { cur->condition.stream.cost.encode_ns_per_leaf = f.non_negative(); }},
      {"decode_fixed_ms", [&](const Field& f) { cur->condition.stream.cost.decode_fixed_ms = f.non_negative(); }},
      {"decode_ns_per_point", [&](const Field& f) { cur->condition.stream.cost.decode_ns_per_point = f.non_negative(); }},
      {"tiling_ns_per_point", [&](const Field& f) { cur->condition.stream.cost.tiling_ns_per_point = f.non_negative(); }},
      {"serialize_ns_per_point",
       [&](const Field& f) { cur->condition.stream.cost.serialize_ns_per_point = f.non_negative(); }},
      {"deserialize_ns_per_point",
       [&](const Field& f) { cur->condition.stream.cost.deserialize_ns_per_point = f.non_negative(); }},
      {"dump_frames",
       [&](const Field& f) {
         const auto v = f.unsigned_int();
         if (v > 0xFFFFFFFFu) f.fail("too large");
         cur->condition.dump_frames = static_cast<std::uint32_t>(v);
       }},
  };

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find_first_of("#;");
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line_no, "", "unterminated section header");
      const std::string inner = trim(std::string_view(line).substr(1, line.size() - 2));
      std::string name;
      if (inner == "experiment" || inner == "source") {
        section = inner;
      } else if (inner.rfind("condition", 0) == 0 && inner.size() > 9 &&
                 (inner[9] == ' ' || inner[9] == '\t')) {
        name = trim(std::string_view(inner).substr(10));
        const bool ok = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
          return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
        });
        if (!ok) throw ConfigError(line_no, "", "condition name must be [A-Za-z0-9_.-]+, got '" + name + "'");
        section = "condition";
        conditions.push_back({});
        conditions.back().condition.name = name;
        conditions.back().line = line_no;
        cur = &conditions.back();
      } else {
        throw ConfigError(line_no, "", "unknown section '" + inner + "'");
      }
      const std::string id = name.empty() ? section : "condition " + name;
      if (!seen_sections.insert(id).second)
        throw ConfigError(line_no, "", "duplicate section '" + id + "'");
      seen_keys.clear();
      if (section == "source") source_line = line_no;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line_no, "", "expected key = value");
    Field f{line_no, trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1))};
    if (f.key.empty()) throw ConfigError(line_no, "", "empty key");
    if (section.empty()) f.fail("key outside of any section");
    if (f.value.empty()) f.fail("empty value");
    if (!seen_keys.insert(f.key).second) f.fail("duplicate key");
    const auto& table = section == "experiment" ? experiment_keys
                        : section == "source"   ? source_keys
                                                : condition_keys;
    const auto it = table.find(f.key);
    if (it == table.end()) f.fail("unknown key in [" + section + "]");
    it->second(f);
  }

  if (conditions.empty()) throw ConfigError(line_no, "", "no [condition NAME] section");
  if (seed_set) cfg.source.synth.seed = cfg.seed;
  cfg.source.synth.fps = cfg.source.fps;
  if (cfg.source.kind == SourceKind::kPlyDir && cfg.source.ply_dir.empty())
    throw ConfigError(source_line, "path", "ply_dir source needs a path");

  for (auto& pc : conditions) {
    auto& s = pc.condition.stream;
    if (!pc.fps_set) s.fps = cfg.source.fps;
    if (s.mode != stream::Mode::kUncompressed && !pc.bitrate_set)
      throw ConfigError(pc.line, "target_bitrate_mbps", "required for adaptive modes");
    try {
      s.validate();
    } catch (const std::exception& e) {
      throw ConfigError(pc.line, "", "condition '" + pc.condition.name + "': " + e.what());
    }
    cfg.conditions.push_back(std::move(pc.condition));
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "", "cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str(), path.parent_path());
}

}  // namespace tpcs::harness
