#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"
#include "fbsc/propagator.hpp"

namespace fbsc::cli {

inline constexpr const char* kCsvHeader = "t,s_expect,trace_re,trace_im,dropped";

// Shortest round-trip decimal form, so equal doubles give equal bytes.
std::string format_double(double x);

std::string series_csv(const prop::ObservableSeries& series);

struct CsvSeries {
    std::vector<double> t;
    std::vector<double> s;
    std::vector<double> trace_re;
    std::vector<double> trace_im;
    std::vector<std::size_t> dropped;
};

// Throws std::runtime_error on a missing file, a wrong header or a bad row.
CsvSeries read_csv(const std::string& path);

void write_text(const std::string& path, const std::string& text);

// Output file for a run: --output, else output.path, else <config stem>.csv.
// Relative paths resolve against FBSC_OUTPUT_DIR when it is set.
std::string resolve_output(const std::string& flag, const RunConfig& config, const std::string& config_path);

// <csv path without extension>.manifest.json
std::string manifest_path(const std::string& csv_path);

nlohmann::json run_manifest(const RunConfig& config, const std::string& command, const std::string& csv_path,
                            const prop::ObservableSeries& series, int exit_code);

}  // namespace fbsc::cli
