#pragma once

// The `zonecast` command line. Files, relative to the configured paths:
//
//   simulate    data_dir/telemetry.csv, data_dir/devices.csv
//   ingest      work_dir/raw/ (canonical store), work_dir/devices.csv
//   preprocess  work_dir/clean_<step>/, work_dir/outliers_<step>.csv
//   train       model_store/ (bank.json + model files)
//   evaluate    output_dir/eval_<step>.csv, output_dir/eval_<step>_summary.json
//   forecast    output_dir/forecast_<zone>_<step>.csv
//   optimize    output_dir/mpc_trace.csv, mpc_baseline_trace.csv, tariff.csv, mpc_summary.json
//   report      output_dir/report/forecast_trace_<step>.csv, output_dir/report/mpc_trace.csv
//
// Every run appends one JSON line to output_dir/runs.jsonl.

#include <ostream>
#include <string>
#include <vector>

namespace zonecast::cli {

/// Exit codes: 0 success, 1 validation or usage error, 2 internal error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace zonecast::cli
