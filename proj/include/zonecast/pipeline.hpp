#pragma once

// Glue between the stages: zone assembly from devices, store-wide cleaning,
// frame building and the train/evaluate loops used by the CLI.

#include "zonecast/forecast.hpp"
#include "zonecast/ingest.hpp"
#include "zonecast/preprocess.hpp"

#include <map>
#include <string>
#include <vector>

namespace zonecast::pipeline {

/// Cleans every series of a 300 s store and downsamples to the target step.
struct CleanResult {
  ingest::SeriesStore store;
  std::vector<preprocess::OutlierReport> reports;
};
CleanResult clean_store(const ingest::SeriesStore& raw, const preprocess::PreprocessConfig& cfg);

/// Zone ids of VAV devices, sorted.
std::vector<std::string> zone_ids(std::span<const DeviceMeta> devices);

/// The zone's channels: the zone's VAV readings (first VAV by device id),
/// with kinds it lacks taken from the first AHU, then the first weather
/// station, carrying them. Throws ValidationError naming a missing kind.
std::vector<TimeSeries> zone_series(const ingest::SeriesStore& store, std::span<const DeviceMeta> devices,
                                    const std::string& zone_id, std::span<const MeasurementKind> kinds);

/// Target plus the config's exogenous kinds.
std::vector<MeasurementKind> model_channels(const features::ForecastConfig& cfg);

/// Gap-free frames of at least L+1 rows.
std::vector<ZoneFrame> zone_frames(const ingest::SeriesStore& store, std::span<const DeviceMeta> devices,
                                   const std::string& zone_id, const features::ForecastConfig& cfg);

/// Test frames if any, otherwise validation frames.
std::vector<ZoneFrame> held_out(const features::SplitFrames& split);

struct TrainOptions {
  forecast::SelectOptions select;
  std::vector<regressors::RegressorSpec> candidates;
  /// Empty means every zone.
  std::vector<std::string> zones;
};

forecast::ModelBank train_bank(const ingest::SeriesStore& store, std::span<const DeviceMeta> devices,
                               const TrainOptions& options);

/// Held-out frames per zone for evaluate_bank.
std::map<std::string, std::vector<ZoneFrame>> evaluation_frames(const ingest::SeriesStore& store,
                                                                std::span<const DeviceMeta> devices,
                                                                const features::ForecastConfig& cfg,
                                                                std::span<const std::string> zones);

}  // namespace zonecast::pipeline
