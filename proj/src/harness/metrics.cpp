#include "tpcs/harness/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace tpcs::harness {

using stream::FrameTimeline;
using json = nlohmann::json;

const std::vector<std::string>& frame_columns()
{
  static const std::vector<std::string> cols = {
      "frame_index", "capture_ts_ms", "encode_ms",    "bytes_sent",    "control_bytes",
      "transmit_ms", "decode_ms",     "sync_wait_ms", "present_ts_ms", "end_to_end_ms",
      "presented",   "drop_reason",   "budget_bytes", "budget_violated", "selection",
      "mode",        "fps"};
  return cols;
}

namespace {

std::string tenth(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string shortest(double v)
{
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

template <class T>
T parse_cell(const std::string& cell, int line, const std::string& column)
{
  T v{};
  auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || p != cell.data() + cell.size())
    throw SchemaError("frames.csv line " + std::to_string(line) + ": bad " + column + " '" + cell + "'");
  return v;
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

double mean(const std::vector<double>& v)
{
  if (v.empty()) return nan();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void add_quality(std::map<std::string, std::vector<std::uint64_t>>& hist, const std::string& key,
                 std::size_t idx)
{
  auto& counts = hist[key];
  if (counts.size() <= idx) counts.resize(idx + 1, 0);
  ++counts[idx];
}

json number_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

double number_or_nan(const json& j) { return j.is_null() ? nan() : j.get<double>(); }

}  // namespace

std::string format_frames_csv(const FramesTable& table)
{
  std::string out;
  for (std::size_t i = 0; i < frame_columns().size(); ++i)
    out += (i ? "," : "") + frame_columns()[i];
  out += '\n';
  const std::string fps = shortest(table.fps);
  for (const FrameTimeline& t : table.frames) {
    out += std::to_string(t.frame_index) + ',' + tenth(t.capture_ts_ms) + ',' + tenth(t.encode_ms) +
           ',' + std::to_string(t.bytes_sent) + ',' + std::to_string(t.control_bytes) + ',' +
           tenth(t.transmit_ms) + ',' + tenth(t.decode_ms) + ',' + tenth(t.sync_wait_ms) + ',' +
           tenth(t.present_ts_ms) + ',' + tenth(t.end_to_end_ms) + ',' + (t.presented ? "1" : "0") +
           ',' + (t.drop_reason.empty() ? "-" : t.drop_reason) + ',' +
           std::to_string(t.budget_bytes) + ',' + (t.budget_violated ? "1" : "0") + ',' +
           (t.selection.empty() ? "-" : t.selection) + ',' + table.mode + ',' + fps + '\n';
  }
  return out;
}

void write_frames_csv(const std::filesystem::path& path, const FramesTable& table)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << format_frames_csv(table);
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

FramesTable parse_frames_csv(const std::string& text)
{
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("frames.csv: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::string expected;
  for (std::size_t i = 0; i < frame_columns().size(); ++i)
    expected += (i ? "," : "") + frame_columns()[i];
  if (line != expected) throw SchemaError("frames.csv: header does not match '" + expected + "'");

  FramesTable table;
  int line_no = 1;
  const auto& cols = frame_columns();
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != cols.size())
      throw SchemaError("frames.csv line " + std::to_string(line_no) + ": expected " +
                        std::to_string(cols.size()) + " columns, got " + std::to_string(cells.size()));
    FrameTimeline t;
    auto d = [&](int i) { return parse_cell<double>(cells[i], line_no, cols[i]); };
    auto u = [&](int i) { return parse_cell<std::uint64_t>(cells[i], line_no, cols[i]); };
    auto flag = [&](int i) {
      if (cells[i] != "0" && cells[i] != "1")
        throw SchemaError("frames.csv line " + std::to_string(line_no) + ": bad " + cols[i]);
      return cells[i] == "1";
    };
    t.frame_index = static_cast<std::uint32_t>(u(0));
    t.capture_ts_ms = d(1);
    t.encode_ms = d(2);
    t.bytes_sent = u(3);
    t.control_bytes = u(4);
    t.transmit_ms = d(5);
    t.decode_ms = d(6);
    t.sync_wait_ms = d(7);
    t.present_ts_ms = d(8);
    t.end_to_end_ms = d(9);
    t.presented = flag(10);
    t.drop_reason = cells[11] == "-" ? "" : cells[11];
    t.budget_bytes = u(12);
    t.budget_violated = flag(13);
    t.selection = cells[14];
    const double fps = d(16);
    if (table.frames.empty()) {
      table.mode = cells[15];
      table.fps = fps;
    } else if (cells[15] != table.mode || fps != table.fps) {
      throw SchemaError("frames.csv line " + std::to_string(line_no) + ": mode/fps differ from first row");
    }
    table.frames.push_back(std::move(t));
  }
  return table;
}

FramesTable read_frames_csv(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_frames_csv(ss.str());
}

double percentile(std::vector<double> values, double p)
{
  if (values.empty()) return nan();
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * w;
}

ConditionSummary summarize(const std::string& name, const FramesTable& table)
{
  ConditionSummary s;
  s.name = name;
  s.mode = table.mode;
  s.fps = table.fps;
  s.frame_count = table.frames.size();
  std::vector<double> latency, encode, transmit, decode, wait;
  for (const FrameTimeline& t : table.frames) {
    s.bytes_sent += t.bytes_sent;
    s.control_bytes += t.control_bytes;
    if (s.budget_bytes == 0) s.budget_bytes = t.budget_bytes;
    if (t.budget_violated) ++s.budget_violations;
    if (!t.presented) {
      ++s.drop_reasons[t.drop_reason.empty() ? "unknown" : t.drop_reason];
      continue;
    }
    ++s.presented;
    latency.push_back(t.end_to_end_ms);
    encode.push_back(t.encode_ms);
    transmit.push_back(t.transmit_ms);
    decode.push_back(t.decode_ms);
    wait.push_back(t.sync_wait_ms);
    const std::string& sel = t.selection;
    if (sel.size() > 1 && sel[0] == 'q') {
      add_quality(s.quality_histogram, "frame", std::stoul(sel.substr(1)));
    } else if (sel != "-" && !sel.empty()) {
      std::stringstream ss(sel);
      std::string item;
      while (std::getline(ss, item, '|')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw SchemaError("bad selection '" + sel + "'");
        add_quality(s.quality_histogram, "tile" + item.substr(0, colon), std::stoul(item.substr(colon + 1)));
      }
    }
  }
  s.dropped = s.frame_count - s.presented;
  s.median_latency_ms = percentile(latency, 50.0);
  s.p95_latency_ms = percentile(latency, 95.0);
  s.mean_encode_ms = mean(encode);
  s.mean_transmit_ms = mean(transmit);
  s.mean_decode_ms = mean(decode);
  s.mean_sync_wait_ms = mean(wait);
  if (s.frame_count > 0) {
    const double n = static_cast<double>(s.frame_count);
    s.achieved_fps = static_cast<double>(s.presented) * s.fps / n;
    s.achieved_bitrate_mbps = static_cast<double>(s.bytes_sent) * 8.0 * s.fps / n / 1e6;
  }
  return s;
}

std::string summary_json(const std::vector<ConditionSummary>& summaries)
{
  json conds = json::array();
  for (const auto& s : summaries) {
    json hist = json::object();
    for (const auto& [k, v] : s.quality_histogram) hist[k] = v;
    json drops = json::object();
    for (const auto& [k, v] : s.drop_reasons) drops[k] = v;
    conds.push_back({
        {"name", s.name},
        {"mode", s.mode},
        {"fps", s.fps},
        {"budget_bytes", s.budget_bytes},
        {"frame_count", s.frame_count},
        {"presented", s.presented},
        {"dropped", s.dropped},
        {"drop_reasons", drops},
        {"budget_violations", s.budget_violations},
        {"latency_ms", {{"median", number_or_null(s.median_latency_ms)},
                        {"p95", number_or_null(s.p95_latency_ms)}}},
        {"mean_encode_ms", number_or_null(s.mean_encode_ms)},
        {"mean_transmit_ms", number_or_null(s.mean_transmit_ms)},
        {"mean_decode_ms", number_or_null(s.mean_decode_ms)},
        {"mean_sync_wait_ms", number_or_null(s.mean_sync_wait_ms)},
        {"achieved_fps", s.achieved_fps},
        {"achieved_bitrate_mbps", s.achieved_bitrate_mbps},
        {"bytes_sent", s.bytes_sent},
        {"control_bytes", s.control_bytes},
        {"quality_histogram", hist},
    });
  }
  json doc = {{"schema_version", kSummarySchemaVersion}, {"conditions", conds}};
  return doc.dump(2) + "\n";
}

std::vector<ConditionSummary> parse_summary_json(const std::string& text)
{
  std::vector<ConditionSummary> out;
  try {
    const json doc = json::parse(text);
    if (doc.at("schema_version").get<int>() != kSummarySchemaVersion)
      throw SchemaError("summary.json: unsupported schema_version");
    for (const json& c : doc.at("conditions")) {
      ConditionSummary s;
      s.name = c.at("name").get<std::string>();
      s.mode = c.at("mode").get<std::string>();
      s.fps = c.at("fps").get<double>();
      s.budget_bytes = c.at("budget_bytes").get<std::uint64_t>();
      s.frame_count = c.at("frame_count").get<std::uint64_t>();
      s.presented = c.at("presented").get<std::uint64_t>();
      s.dropped = c.at("dropped").get<std::uint64_t>();
      s.drop_reasons = c.at("drop_reasons").get<std::map<std::string, std::uint64_t>>();
      s.budget_violations = c.at("budget_violations").get<std::uint64_t>();
      s.median_latency_ms = number_or_nan(c.at("latency_ms").at("median"));
      s.p95_latency_ms = number_or_nan(c.at("latency_ms").at("p95"));
      s.mean_encode_ms = number_or_nan(c.at("mean_encode_ms"));
      s.mean_transmit_ms = number_or_nan(c.at("mean_transmit_ms"));
      s.mean_decode_ms = number_or_nan(c.at("mean_decode_ms"));
      s.mean_sync_wait_ms = number_or_nan(c.at("mean_sync_wait_ms"));
      s.achieved_fps = c.at("achieved_fps").get<double>();
      s.achieved_bitrate_mbps = c.at("achieved_bitrate_mbps").get<double>();
      s.bytes_sent = c.at("bytes_sent").get<std::uint64_t>();
      s.control_bytes = c.at("control_bytes").get<std::uint64_t>();
      s.quality_histogram =
          c.at("quality_histogram").get<std::map<std::string, std::vector<std::uint64_t>>>();
      out.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("summary.json: ") + e.what());
  }
  return out;
}

std::vector<LatencyDelta> latency_deltas(const std::vector<ConditionSummary>& summaries)
{
  std::vector<LatencyDelta> out;
  for (const auto& na : summaries) {
    if (na.mode != "network_adaptive") continue;
    for (const auto& ta : summaries) {
      if (ta.mode != "tiled_adaptive" || ta.budget_bytes != na.budget_bytes) continue;
      out.push_back({na.name, ta.name, na.budget_bytes, na.median_latency_ms - ta.median_latency_ms});
    }
  }
  return out;
}

namespace {

std::string fixed(double v, int digits)
{
  if (std::isnan(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string format_report_text(const std::vector<ConditionSummary>& summaries)
{
  std::string out;
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-16s %-17s %7s %9s %9s %8s %9s %8s %8s %8s\n", "condition",
                "mode", "frames", "median_ms", "p95_ms", "fps", "mbps", "dropped", "budget_x",
                "enc_ms");
  out += buf;
  for (const auto& s : summaries) {
    std::snprintf(buf, sizeof buf, "%-16s %-17s %7llu %9s %9s %8s %9s %8llu %8llu %8s\n",
                  s.name.c_str(), s.mode.c_str(), static_cast<unsigned long long>(s.frame_count),
                  fixed(s.median_latency_ms, 1).c_str(), fixed(s.p95_latency_ms, 1).c_str(),
                  fixed(s.achieved_fps, 2).c_str(), fixed(s.achieved_bitrate_mbps, 2).c_str(),
                  static_cast<unsigned long long>(s.dropped),
                  static_cast<unsigned long long>(s.budget_violations),
                  fixed(s.mean_encode_ms, 1).c_str());
    out += buf;
  }
  for (const auto& d : latency_deltas(summaries)) {
    std::snprintf(buf, sizeof buf,
                  ">> %s vs %s (budget %llu B/frame): NA median latency %s TA by %s ms\n",
                  d.na_condition.c_str(), d.ta_condition.c_str(),
                  static_cast<unsigned long long>(d.budget_bytes),
                  d.na_minus_ta_median_ms >= 0 ? "exceeds" : "is below",
                  fixed(std::abs(d.na_minus_ta_median_ms), 1).c_str());
    out += buf;
  }
  return out;
}

std::string format_report_csv(const std::vector<ConditionSummary>& summaries)
{
  std::string out =
      "condition,mode,frames,presented,dropped,budget_bytes,budget_violations,median_latency_ms,"
      "p95_latency_ms,achieved_fps,achieved_bitrate_mbps,mean_encode_ms,mean_decode_ms,"
      "na_minus_ta_median_ms\n";
  const auto deltas = latency_deltas(summaries);
  for (const auto& s : summaries) {
    std::string delta;
    for (const auto& d : deltas)
      if (d.ta_condition == s.name || d.na_condition == s.name) {
        delta = shortest(d.na_minus_ta_median_ms);
        break;
      }
    auto num = [](double v) { return std::isnan(v) ? std::string() : shortest(v); };
    out += s.name + ',' + s.mode + ',' + std::to_string(s.frame_count) + ',' +
           std::to_string(s.presented) + ',' + std::to_string(s.dropped) + ',' +
           std::to_string(s.budget_bytes) + ',' + std::to_string(s.budget_violations) + ',' +
           num(s.median_latency_ms) + ',' + num(s.p95_latency_ms) + ',' + num(s.achieved_fps) +
           ',' + num(s.achieved_bitrate_mbps) + ',' + num(s.mean_encode_ms) + ',' +
           num(s.mean_decode_ms) + ',' + delta + '\n';
  }
  return out;
}

}  // namespace tpcs::harness
