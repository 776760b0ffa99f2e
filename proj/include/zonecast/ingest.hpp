#pragma once

// Telemetry and device-metadata ingestion.
//
// Telemetry is long-format CSV, one reading per row:
//   timestamp,device_id,measurement,value
// with RFC 3339 timestamps. Device metadata is
//   device_id,name,namespace,device_type,zone_id,floor,x,y
//
// The canonical store written by write_canonical() holds one
// `timestamp,value` CSV per (device, kind) plus manifest.json; empty value
// fields are gaps.

#include "zonecast/series.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace zonecast::ingest {

struct RawRecord {
  Timestamp timestamp;
  std::string device_id;
  MeasurementKind kind;
  double value;
};

struct LineError {
  std::size_t line;
  std::string message;
};

struct ParseOptions {
  /// Offset applied to timestamps that carry no zone designator.
  int utc_offset_minutes = 0;
  /// More malformed rows than this fraction of data rows is a hard failure.
  double max_malformed_fraction = 0.10;
};

struct ParseResult {
  std::vector<RawRecord> records;
  std::size_t data_rows = 0;
  std::size_t skipped_unknown = 0;
  /// Skipped rows per unknown measurement name.
  std::map<std::string, std::size_t> skipped_by_name;
  std::vector<LineError> errors;
};

inline constexpr std::string_view kTelemetryHeader = "timestamp,device_id,measurement,value";
inline constexpr std::string_view kDeviceHeader = "device_id,name,namespace,device_type,zone_id,floor,x,y";

/// Throws ValidationError on a bad header or when the malformed-row fraction
/// exceeds options.max_malformed_fraction.
ParseResult parse_long_csv(const std::filesystem::path& path, const ParseOptions& options = {});
ParseResult parse_long_csv_text(std::string_view text, const ParseOptions& options = {},
                                std::string_view source = "<memory>");

struct SeriesKey {
  std::string device_id;
  MeasurementKind kind;
  friend auto operator<=>(const SeriesKey&, const SeriesKey&) = default;
};

struct SeriesStore {
  std::int64_t step_seconds = 300;
  std::map<SeriesKey, TimeSeries> series;
  /// Readings that overwrote an earlier reading in the same grid bucket.
  std::size_t duplicate_count = 0;

  const TimeSeries* find(const std::string& device_id, MeasurementKind kind) const;
  std::size_t present_count() const;
};

/// Buckets records onto a uniform grid (bucket = floor(t / step) * step).
/// Absent grid points are gaps; within a bucket the last record wins.
SeriesStore build_series(std::span<const RawRecord> records, std::int64_t step_seconds = 300);

std::vector<DeviceMeta> parse_device_meta(const std::filesystem::path& path);
std::vector<DeviceMeta> parse_device_meta_text(std::string_view text, std::string_view source = "<memory>");
std::string format_device_meta(std::span<const DeviceMeta> devices);

enum class SplitLabel { train_2022, val_2022, train_2023, val_2023, test_2024 };

std::string_view to_string(SplitLabel label);
std::optional<SplitLabel> parse_split_label(std::string_view name);

/// Calendar range [begin, end) a split must cover.
std::pair<Timestamp, Timestamp> split_range(SplitLabel label);

struct DatasetManifest {
  SplitLabel split = SplitLabel::train_2022;
  std::vector<std::filesystem::path> files;
  std::vector<std::size_t> row_counts;
  std::size_t device_count = 0;
};

struct SplitViolation {
  std::string device_id;
  MeasurementKind kind;
  Timestamp timestamp;
};

struct SeriesMissing {
  std::string device_id;
  MeasurementKind kind;
  double missing_ratio;
};

struct ValidationReport {
  SplitLabel split;
  std::vector<SplitViolation> violations;
  std::vector<SeriesMissing> missing;
  bool ok() const { return violations.empty(); }
};

/// Every present reading must fall inside the split's calendar range.
ValidationReport validate_split(const DatasetManifest& manifest, const SeriesStore& store);

void write_canonical(const std::filesystem::path& dir, const SeriesStore& store);
SeriesStore read_canonical(const std::filesystem::path& dir);

/// `timestamp,device_id,measurement,value` text for the present values of a store.
std::string format_long_csv(const SeriesStore& store);

}  // namespace zonecast::ingest
