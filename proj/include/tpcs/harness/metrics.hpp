#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpcs/stream/session.hpp"

namespace tpcs::harness {

inline constexpr int kSummarySchemaVersion = 1;

// frames.csv column order.
const std::vector<std::string>& frame_columns();

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FramesTable {
  std::string mode;
  double fps = 0.0;
  std::vector<stream::FrameTimeline> frames;
};

std::string format_frames_csv(const FramesTable& table);
void write_frames_csv(const std::filesystem::path& path, const FramesTable& table);
FramesTable parse_frames_csv(const std::string& text);
FramesTable read_frames_csv(const std::filesystem::path& path);

// Linear interpolation between order statistics; p in [0, 100]. NaN when empty.
double percentile(std::vector<double> values, double p);

struct ConditionSummary {
  std::string name;
  std::string mode;
  double fps = 0.0;
  std::uint64_t budget_bytes = 0;
  std::uint64_t frame_count = 0;
  std::uint64_t presented = 0;
  std::uint64_t dropped = 0;
  std::uint64_t budget_violations = 0;
  std::map<std::string, std::uint64_t> drop_reasons;
  // Latency and per-stage means over presented frames; NaN when none were.
  double median_latency_ms = 0.0;
  double p95_latency_ms = 0.0;
  double mean_encode_ms = 0.0;
  double mean_transmit_ms = 0.0;
  double mean_decode_ms = 0.0;
  double mean_sync_wait_ms = 0.0;
  double achieved_fps = 0.0;
  double achieved_bitrate_mbps = 0.0;  // all media bytes sent
  std::uint64_t bytes_sent = 0;
  std::uint64_t control_bytes = 0;
  // Presented frames per quality index; keyed "tile<id>" for tiled runs and
  // "frame" for network-adaptive runs.
  std::map<std::string, std::vector<std::uint64_t>> quality_histogram;
};

ConditionSummary summarize(const std::string& name, const FramesTable& table);

std::string summary_json(const std::vector<ConditionSummary>& summaries);
// Throws SchemaError on a wrong schema_version or missing fields.
std::vector<ConditionSummary> parse_summary_json(const std::string& text);

struct LatencyDelta {
  std::string na_condition;
  std::string ta_condition;
  std::uint64_t budget_bytes = 0;
  double na_minus_ta_median_ms = 0.0;
};

// Pairs network-adaptive and tiled-adaptive conditions with equal budgets.
std::vector<LatencyDelta> latency_deltas(const std::vector<ConditionSummary>& summaries);

std::string format_report_text(const std::vector<ConditionSummary>& summaries);
std::string format_report_csv(const std::vector<ConditionSummary>& summaries);

}  // namespace tpcs::harness
