#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fbsc/bath.hpp"
#include "fbsc/propagator.hpp"
#include "fbsc/system.hpp"

namespace fbsc::cli {

// Schema violation; the message starts with the JSON pointer of the field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BathConfig {
    bath::SpectralDensity density;
    std::size_t n_modes{60};
    double omega_max{0.0};
    double mode_mass{1.0};

    bath::BathSpec build() const;
};

struct RunConfig {
    sys::SystemSpec system;
    BathConfig bath;
    prop::InitialSystemState state;
    prop::PropagatorConfig numerics;
    // allowed |trace - 1| before a run counts as degraded
    double trace_tolerance{0.05};
    std::vector<double> times;
    std::string output_path;
    // parsed config with every default filled in, keys sorted
    nlohmann::json normalized;

    bath::BathSpec build_bath() const;
};

RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

// Command-line override of numerics.seed.
void set_seed(RunConfig& config, std::uint64_t seed);

// SHA-256 over the normalized config without the output block's path.
std::string config_hash(const RunConfig& config);

}  // namespace fbsc::cli
