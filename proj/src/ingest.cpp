#include "zonecast/ingest.hpp"

#include "zonecast/csv.hpp"
#include "zonecast/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>
#include <sstream>

namespace zonecast::ingest {
namespace {

using nlohmann::json;

constexpr std::string_view kCanonicalFormat = "zonecast-canonical-v1";

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::string strip_bom(std::string_view line) {
  if (line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
  return std::string(line);
}

std::string file_stem_for(const SeriesKey& key) {
  std::string out;
  for (char c : key.device_id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  out += "__";
  out += to_string(key.kind);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Telemetry

ParseResult parse_long_csv(const std::filesystem::path& path, const ParseOptions& options) {
  return parse_long_csv_text(csv::read_file(path), options, path.string());
}

ParseResult parse_long_csv_text(std::string_view text, const ParseOptions& options,
                                std::string_view source) {
  ParseResult result;
  bool header_seen = false;
  csv::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (!header_seen) {
      if (strip_bom(line) != kTelemetryHeader) {
        throw ValidationError(std::string(source) + ": expected header '" +
                              std::string(kTelemetryHeader) + "'");
      }
      header_seen = true;
      return;
    }
    if (line.empty()) return;
    ++result.data_rows;
    const auto fields = csv::split_line(line);
    if (fields.size() != 4) {
      result.errors.push_back({line_no, "expected 4 fields, got " + std::to_string(fields.size())});
      return;
    }
    const auto kind = parse_measurement_kind(fields[2]);
    if (!kind) {
      ++result.skipped_unknown;
      ++result.skipped_by_name[fields[2]];
      return;
    }
    RawRecord rec{};
    try {
      rec.timestamp = parse_rfc3339(fields[0], options.utc_offset_minutes);
    } catch (const ValidationError& e) {
      result.errors.push_back({line_no, e.what()});
      return;
    }
    if (fields[1].empty()) {
      result.errors.push_back({line_no, "empty device_id"});
      return;
    }
    const auto value = csv::parse_double(fields[3]);
    if (!value) {
      result.errors.push_back({line_no, "non-numeric value '" + fields[3] + "'"});
      return;
    }
    rec.device_id = fields[1];
    rec.kind = *kind;
    rec.value = *value;
    result.records.push_back(std::move(rec));
  });
  if (!header_seen) throw ValidationError(std::string(source) + ": empty file");

  if (result.data_rows > 0 &&
      static_cast<double>(result.errors.size()) >
          options.max_malformed_fraction * static_cast<double>(result.data_rows)) {
    std::ostringstream msg;
    msg << source << ": " << result.errors.size() << " of " << result.data_rows
        << " rows are malformed";
    for (std::size_t i = 0; i < std::min<std::size_t>(3, result.errors.size()); ++i) {
      msg << "; line " << result.errors[i].line << ": " << result.errors[i].message;
    }
    throw ValidationError(msg.str());
  }
  return result;
}

// ---------------------------------------------------------------------------
// Series store

const TimeSeries* SeriesStore::find(const std::string& device_id, MeasurementKind kind) const {
  const auto it = series.find(SeriesKey{device_id, kind});
  return it == series.end() ? nullptr : &it->second;
}

std::size_t SeriesStore::present_count() const {
  std::size_t n = 0;
  for (const auto& [key, s] : series) n += s.size() - s.missing_count();
  return n;
}

SeriesStore build_series(std::span<const RawRecord> records, std::int64_t step_seconds) {
  if (!is_supported_step(step_seconds)) {
    throw ValidationError("build_series: unsupported step " + std::to_string(step_seconds));
  }
  std::map<SeriesKey, std::pair<std::int64_t, std::int64_t>> bounds;
  for (const RawRecord& r : records) {
    const std::int64_t b = floor_div(r.timestamp.epoch_seconds, step_seconds);
    auto [it, inserted] = bounds.try_emplace(SeriesKey{r.device_id, r.kind}, b, b);
    if (!inserted) {
      it->second.first = std::min(it->second.first, b);
      it->second.second = std::max(it->second.second, b);
    }
  }
  std::map<SeriesKey, std::vector<double>> grids;
  for (const auto& [key, range] : bounds) {
    grids.emplace(key, std::vector<double>(static_cast<std::size_t>(range.second - range.first + 1), kMissing));
  }

  SeriesStore store;
  store.step_seconds = step_seconds;
  for (const RawRecord& r : records) {
    const SeriesKey key{r.device_id, r.kind};
    const std::int64_t b = floor_div(r.timestamp.epoch_seconds, step_seconds);
    auto& grid = grids[key];
    double& slot = grid[static_cast<std::size_t>(b - bounds[key].first)];
    if (!is_missing(slot)) ++store.duplicate_count;
    slot = r.value;
  }
  for (auto& [key, grid] : grids) {
    const Timestamp start{bounds[key].first * step_seconds};
    store.series.emplace(key, TimeSeries(key.device_id, key.kind, step_seconds, start, std::move(grid)));
  }
  return store;
}

// ---------------------------------------------------------------------------
// Device metadata

std::vector<DeviceMeta> parse_device_meta(const std::filesystem::path& path) {
  return parse_device_meta_text(csv::read_file(path), path.string());
}

std::vector<DeviceMeta> parse_device_meta_text(std::string_view text, std::string_view source) {
  std::vector<DeviceMeta> out;
  std::set<std::string> ids;
  bool header_seen = false;
  const auto fail = [&](std::size_t line, const std::string& why) {
    throw ValidationError(std::string(source) + ":" + std::to_string(line) + ": " + why);
  };
  csv::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (!header_seen) {
      if (strip_bom(line) != kDeviceHeader) fail(line_no, "expected header '" + std::string(kDeviceHeader) + "'");
      header_seen = true;
      return;
    }
    if (line.empty()) return;
    const auto f = csv::split_line(line);
    if (f.size() != 8) fail(line_no, "expected 8 fields, got " + std::to_string(f.size()));
    DeviceMeta d;
    d.device_id = f[0];
    d.name = f[1];
    d.ns = f[2];
    const auto type = parse_device_type(f[3]);
    if (d.device_id.empty()) fail(line_no, "empty device_id");
    if (!type) fail(line_no, "unknown device_type '" + f[3] + "'");
    d.device_type = *type;
    d.zone_id = f[4];
    if (d.device_type == DeviceType::VAV && d.zone_id.empty()) {
      fail(line_no, "VAV device " + d.device_id + " has no zone_id");
    }
    const auto floor = csv::parse_int(f[5]);
    const auto x = csv::parse_double(f[6]);
    const auto y = csv::parse_double(f[7]);
    if (!floor || !x || !y) fail(line_no, "floor/x/y must be numeric");
    d.floor = static_cast<int>(*floor);
    d.x = *x;
    d.y = *y;
    if (!ids.insert(d.device_id).second) fail(line_no, "duplicate device_id " + d.device_id);
    out.push_back(std::move(d));
  });
  if (!header_seen) throw ValidationError(std::string(source) + ": empty file");
  return out;
}

std::string format_device_meta(std::span<const DeviceMeta> devices) {
  std::string out(kDeviceHeader);
  out += '\n';
  for (const DeviceMeta& d : devices) {
    out += csv::quote(d.device_id) + ',' + csv::quote(d.name) + ',' + csv::quote(d.ns) + ',' +
           std::string(to_string(d.device_type)) + ',' + csv::quote(d.zone_id) + ',' +
           std::to_string(d.floor) + ',' + csv::format_double(d.x) + ',' + csv::format_double(d.y) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splits

std::string_view to_string(SplitLabel label) {
  switch (label) {
    case SplitLabel::train_2022: return "train_2022";
    case SplitLabel::val_2022: return "val_2022";
    case SplitLabel::train_2023: return "train_2023";
    case SplitLabel::val_2023: return "val_2023";
    case SplitLabel::test_2024: return "test_2024";
  }
  return "?";
}

std::optional<SplitLabel> parse_split_label(std::string_view name) {
  for (SplitLabel l : {SplitLabel::train_2022, SplitLabel::val_2022, SplitLabel::train_2023,
                       SplitLabel::val_2023, SplitLabel::test_2024}) {
    if (to_string(l) == name) return l;
  }
  return std::nullopt;
}

std::pair<Timestamp, Timestamp> split_range(SplitLabel label) {
  switch (label) {
    case SplitLabel::train_2022: return {make_utc(2022, 1, 1), make_utc(2022, 7, 1)};
    case SplitLabel::val_2022: return {make_utc(2022, 7, 1), make_utc(2023, 1, 1)};
    case SplitLabel::train_2023: return {make_utc(2023, 1, 1), make_utc(2023, 7, 1)};
    case SplitLabel::val_2023: return {make_utc(2023, 7, 1), make_utc(2024, 1, 1)};
    case SplitLabel::test_2024: return {make_utc(2024, 1, 1), make_utc(2024, 7, 1)};
  }
  return {};
}

ValidationReport validate_split(const DatasetManifest& manifest, const SeriesStore& store) {
  ValidationReport report{manifest.split, {}, {}};
  const auto [begin, end] = split_range(manifest.split);
  for (const auto& [key, s] : store.series) {
    const auto values = s.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (is_missing(values[i])) continue;
      const Timestamp t = s.time_at(i);
      if (t < begin || t >= end) report.violations.push_back({key.device_id, key.kind, t});
    }
    report.missing.push_back({key.device_id, key.kind, missing_ratio(s)});
  }
  return report;
}

// ---------------------------------------------------------------------------
// Canonical store

void write_canonical(const std::filesystem::path& dir, const SeriesStore& store) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["format"] = kCanonicalFormat;
  manifest["step_seconds"] = store.step_seconds;
  manifest["duplicate_count"] = store.duplicate_count;
  json entries = json::array();
  for (const auto& [key, s] : store.series) {
    const std::string file = file_stem_for(key) + ".csv";
    std::string body = "timestamp,value\n";
    body.reserve(body.size() + s.size() * 32);
    const auto values = s.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      body += format_rfc3339(s.time_at(i));
      body += ',';
      if (!is_missing(values[i])) body += csv::format_double(values[i]);
      body += '\n';
    }
    csv::write_file(dir / file, body);
    entries.push_back({{"device_id", key.device_id},
                       {"kind", std::string(to_string(key.kind))},
                       {"step_seconds", s.step_seconds()},
                       {"start", format_rfc3339(s.start())},
                       {"length", s.size()},
                       {"missing_count", s.missing_count()},
                       {"file", file}});
  }
  manifest["series"] = std::move(entries);
  csv::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

SeriesStore read_canonical(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw ValidationError("no canonical store at " + dir.string() + " (manifest.json missing)");
  }
  json manifest;
  try {
    manifest = json::parse(csv::read_file(manifest_path));
  } catch (const json::exception& e) {
    throw ValidationError(manifest_path.string() + ": " + e.what());
  }
  if (manifest.value("format", "") != kCanonicalFormat) {
    throw ValidationError(manifest_path.string() + ": unknown format");
  }
  SeriesStore store;
  store.step_seconds = manifest.at("step_seconds").get<std::int64_t>();
  store.duplicate_count = manifest.value("duplicate_count", std::size_t{0});
  for (const json& e : manifest.at("series")) {
    const auto kind = parse_measurement_kind(e.at("kind").get<std::string>());
    if (!kind) throw ValidationError("canonical manifest: unknown kind " + e.at("kind").dump());
    const auto device = e.at("device_id").get<std::string>();
    const auto step = e.at("step_seconds").get<std::int64_t>();
    const Timestamp start = parse_rfc3339(e.at("start").get<std::string>());
    const auto length = e.at("length").get<std::size_t>();
    const std::string text = csv::read_file(dir / e.at("file").get<std::string>());

    std::vector<double> values;
    values.reserve(length);
    csv::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
      if (line_no == 1 || line.empty()) return;
      const auto comma = line.find(',');
      if (comma == std::string_view::npos) {
        throw ValidationError(e.at("file").get<std::string>() + ":" + std::to_string(line_no) + ": malformed");
      }
      const Timestamp t = parse_rfc3339(line.substr(0, comma));
      if (t.epoch_seconds != start.epoch_seconds + static_cast<std::int64_t>(values.size()) * step) {
        throw ValidationError(e.at("file").get<std::string>() + ":" + std::to_string(line_no) +
                              ": timestamp off the grid");
      }
      const std::string_view field = line.substr(comma + 1);
      if (field.empty()) {
        values.push_back(kMissing);
      } else {
        const auto v = csv::parse_double(field);
        if (!v) {
          throw ValidationError(e.at("file").get<std::string>() + ":" + std::to_string(line_no) +
                                ": bad value");
        }
        values.push_back(*v);
      }
    });
    if (values.size() != length) {
      throw ValidationError(e.at("file").get<std::string>() + ": expected " + std::to_string(length) +
                            " rows, found " + std::to_string(values.size()));
    }
    store.series.emplace(SeriesKey{device, *kind}, TimeSeries(device, *kind, step, start, std::move(values)));
  }
  return store;
}

std::string format_long_csv(const SeriesStore& store) {
  std::string out(kTelemetryHeader);
  out += '\n';
  for (const auto& [key, s] : store.series) {
    const auto values = s.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (is_missing(values[i])) continue;
      out += format_rfc3339(s.time_at(i));
      out += ',';
      out += csv::quote(key.device_id);
      out += ',';
      out += to_string(key.kind);
      out += ',';
      out += csv::format_double(values[i]);
      out += '\n';
    }
  }
  return out;
}

}  // namespace zonecast::ingest
