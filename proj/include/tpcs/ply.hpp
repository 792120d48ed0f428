#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "tpcs/point_cloud.hpp"

namespace tpcs {

enum class PlyErrorKind {
  kIo,
  kMalformedHeader,
  kMissingProperty,
  kTruncatedPayload,
  kBadValue,
};

class PlyError : public std::runtime_error {
 public:
  PlyError(PlyErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  PlyErrorKind kind() const { return kind_; }

 private:
  PlyErrorKind kind_;
};

enum class PlyFormat { kAscii, kBinaryLittleEndian };

// Reads a PLY 1.0 file whose vertex element carries x, y, z, red, green,
// blue and optionally sensor_id. Any scalar property type is accepted and
// converted. `frame_index` and `capture_ts_ms` comments, when present,
// populate the frame header.
PointCloudFrame load_ply(const std::filesystem::path& path);
PointCloudFrame parse_ply(std::string_view contents);

void emit_ply(const PointCloudFrame& frame, const std::filesystem::path& path, PlyFormat format);
std::string format_ply(const PointCloudFrame& frame, PlyFormat format);

}  // namespace tpcs
