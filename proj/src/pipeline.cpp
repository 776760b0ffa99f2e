#include "zonecast/pipeline.hpp"

#include "zonecast/error.hpp"

#include <algorithm>

namespace zonecast::pipeline {

CleanResult clean_store(const ingest::SeriesStore& raw, const preprocess::PreprocessConfig& cfg) {
  cfg.validate();
  CleanResult out;
  out.store.step_seconds = cfg.target_step_seconds;
  for (const auto& [key, s] : raw.series) {
    auto c = preprocess::clean(s, cfg);
    out.reports.push_back(c.report);
    out.store.series.emplace(key, std::move(c.series));
  }
  return out;
}

std::vector<std::string> zone_ids(std::span<const DeviceMeta> devices) {
  std::vector<std::string> out;
  for (const auto& d : devices) {
    if (d.device_type == DeviceType::VAV) out.push_back(d.zone_id);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<TimeSeries> zone_series(const ingest::SeriesStore& store, std::span<const DeviceMeta> devices,
                                    const std::string& zone_id, std::span<const MeasurementKind> kinds) {
  std::vector<const DeviceMeta*> vav, ahu, weather;
  for (const auto& d : devices) {
    if (d.device_type == DeviceType::VAV && d.zone_id == zone_id) vav.push_back(&d);
    if (d.device_type == DeviceType::AHU) ahu.push_back(&d);
    if (d.device_type == DeviceType::WEATHER) weather.push_back(&d);
  }
  if (vav.empty()) throw ValidationError("zone '" + zone_id + "' has no VAV device");
  const auto by_id = [](const DeviceMeta* a, const DeviceMeta* b) { return a->device_id < b->device_id; };
  std::sort(vav.begin(), vav.end(), by_id);
  std::sort(ahu.begin(), ahu.end(), by_id);
  std::sort(weather.begin(), weather.end(), by_id);
  std::vector<const DeviceMeta*> order{vav.front()};
  order.insert(order.end(), ahu.begin(), ahu.end());
  order.insert(order.end(), weather.begin(), weather.end());

  std::vector<TimeSeries> out;
  for (MeasurementKind k : kinds) {
    const TimeSeries* found = nullptr;
    for (const DeviceMeta* d : order) {
      if ((found = store.find(d->device_id, k))) break;
    }
    if (!found) {
      throw ValidationError("zone '" + zone_id + "': no device provides " + std::string(to_string(k)));
    }
    out.push_back(*found);
  }
  return out;
}

std::vector<MeasurementKind> model_channels(const features::ForecastConfig& cfg) {
  std::vector<MeasurementKind> out{MeasurementKind::zone_air_temperature_sensor};
  out.insert(out.end(), cfg.exogenous.begin(), cfg.exogenous.end());
  return out;
}

std::vector<ZoneFrame> zone_frames(const ingest::SeriesStore& store, std::span<const DeviceMeta> devices,
                                   const std::string& zone_id, const features::ForecastConfig& cfg) {
  const auto kinds = model_channels(cfg);
  const auto series = zone_series(store, devices, zone_id, kinds);
  return features::segment_frames(series, zone_id, static_cast<std::size_t>(cfg.lookback_steps) + 1);
}

std::vector<ZoneFrame> held_out(const features::SplitFrames& split) {
  return split.test.empty() ? split.val : split.test;
}

forecast::ModelBank train_bank(const ingest::SeriesStore& store, std::span<const DeviceMeta> devices,
                               const TrainOptions& options) {
  const auto& cfg = options.select.config;
  if (store.step_seconds != cfg.step_seconds) {
    throw ValidationError("train: store step " + std::to_string(store.step_seconds) + " s differs from model step " +
                          std::to_string(cfg.step_seconds) + " s");
  }
  const auto zones = options.zones.empty() ? zone_ids(devices) : options.zones;
  if (zones.empty()) throw ValidationError("train: no zones to train");
  forecast::ModelBank bank;
  for (const auto& zone : zones) {
    const auto frames = zone_frames(store, devices, zone, cfg);
    const auto split = features::calendar_split(frames);
    if (split.train.empty()) throw ValidationError("train: zone '" + zone + "' has no training frames");
    bank[{zone, cfg.step_seconds}] = forecast::select_model(split.train, options.candidates, options.select);
  }
  return bank;
}

std::map<std::string, std::vector<ZoneFrame>> evaluation_frames(const ingest::SeriesStore& store,
                                                                std::span<const DeviceMeta> devices,
                                                                const features::ForecastConfig& cfg,
                                                                std::span<const std::string> zones) {
  std::map<std::string, std::vector<ZoneFrame>> out;
  const auto ids = zones.empty() ? zone_ids(devices) : std::vector<std::string>(zones.begin(), zones.end());
  for (const auto& zone : ids) {
    out[zone] = held_out(features::calendar_split(zone_frames(store, devices, zone, cfg)));
  }
  return out;
}

}  // namespace zonecast::pipeline
