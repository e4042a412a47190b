#include "io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Core>

namespace fbsc::cli {

namespace fs = std::filesystem;

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string series_csv(const prop::ObservableSeries& series) {
    std::string out = std::string(kCsvHeader) + "\n";
    for (std::size_t k = 0; k < series.times.size(); ++k) {
        out += format_double(series.times[k]) + ',' + format_double(series.values[k]) + ',' +
               format_double(series.traces[k].real()) + ',' + format_double(series.traces[k].imag()) + ',' +
               std::to_string(series.dropped[k]) + '\n';
    }
    return out;
}

namespace {

double parse_number(const std::string& field, const std::string& where) {
    if (field == "nan") return std::nan("");
    double x = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), x);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size())
        throw std::runtime_error(where + ": bad number '" + field + "'");
    return x;
}

}  // namespace

CsvSeries read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader)
        throw std::runtime_error(path + ": expected header '" + std::string(kCsvHeader) + "'");
    CsvSeries s;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        const std::string where = path + ":" + std::to_string(row);
        if (fields.size() != 5) throw std::runtime_error(where + ": expected 5 fields");
        s.t.push_back(parse_number(fields[0], where));
        s.s.push_back(parse_number(fields[1], where));
        s.trace_re.push_back(parse_number(fields[2], where));
        s.trace_im.push_back(parse_number(fields[3], where));
        s.dropped.push_back(static_cast<std::size_t>(parse_number(fields[4], where)));
    }
    return s;
}

void write_text(const std::string& path, const std::string& text) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(path + ": cannot write");
    out << text;
    if (!out) throw std::runtime_error(path + ": write failed");
}

std::string resolve_output(const std::string& flag, const RunConfig& config, const std::string& config_path) {
    fs::path p;
    if (!flag.empty()) {
        p = flag;
    } else if (!config.output_path.empty()) {
        p = config.output_path;
    } else {
        p = fs::path(config_path).stem();
        p += ".csv";
    }
    if (p.is_relative()) {
        if (const char* dir = std::getenv("FBSC_OUTPUT_DIR"); dir && *dir) p = fs::path(dir) / p;
    }
    return p.string();
}

std::string manifest_path(const std::string& csv_path) {
    fs::path p(csv_path);
    p.replace_extension(".manifest.json");
    return p.string();
}

nlohmann::json run_manifest(const RunConfig& config, const std::string& command, const std::string& csv_path,
                            const prop::ObservableSeries& series, int exit_code) {
    nlohmann::json m;
    m["command"] = command;
    m["config_sha256"] = config_hash(config);
    m["config"] = config.normalized;
    m["seed"] = config.numerics.seed;
    m["output"] = csv_path;
    m["versions"] = {
        {"fbsc", FBSC_VERSION},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"compiler", __VERSION__},
    };
    m["dropped"] = series.dropped;
    m["converged"] = series.converged;
    m["steps"] = series.steps;
    m["total_dropped"] = series.total_dropped();
    m["total_evaluated"] = series.total_evaluated();
    m["drop_fraction"] = series.drop_fraction();
    m["ok"] = series.ok;
    if (!series.failure.empty()) m["failure"] = series.failure;
    m["exit_code"] = exit_code;
    return m;
}

}  // namespace fbsc::cli
