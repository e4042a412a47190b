#include "config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <openssl/evp.h>

namespace fbsc::cli {

using nlohmann::json;

namespace {

// Walks one JSON object, records the normalized value of every field it reads
// and rejects keys nobody asked for.
class Node {
public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("", "must be an object");
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw ConfigError(path_ + (key.empty() ? "" : "/" + key) + ": " + what);
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    double number(const std::string& key) {
        const json& v = get(key);
        if (!v.is_number()) fail(key, "must be a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail(key, "must be finite");
        out_[key] = x;
        return x;
    }
    double number(const std::string& key, double fallback) {
        if (!has(key)) {
            out_[key] = fallback;
            return fallback;
        }
        return number(key);
    }
    double positive(const std::string& key) {
        const double x = number(key);
        if (!(x > 0.0)) fail(key, "must be > 0");
        return x;
    }
    double positive(const std::string& key, double fallback) {
        const double x = number(key, fallback);
        if (!(x > 0.0)) fail(key, "must be > 0");
        return x;
    }
    double non_negative(const std::string& key, double fallback) {
        const double x = number(key, fallback);
        if (!(x >= 0.0)) fail(key, "must be >= 0");
        return x;
    }

    std::uint64_t integer(const std::string& key, std::uint64_t fallback, std::uint64_t lo,
                          std::uint64_t hi = std::numeric_limits<std::uint64_t>::max()) {
        std::uint64_t x = fallback;
        if (has(key)) {
            const json& v = get(key);
            if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
                fail(key, "must be a non-negative integer");
            x = v.get<std::uint64_t>();
        }
        if (x < lo || x > hi)
            fail(key, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        out_[key] = x;
        return x;
    }

    bool boolean(const std::string& key, bool fallback) {
        bool x = fallback;
        if (has(key)) {
            const json& v = get(key);
            if (!v.is_boolean()) fail(key, "must be true or false");
            x = v.get<bool>();
        }
        out_[key] = x;
        return x;
    }

    std::string choice(const std::string& key, const std::set<std::string>& allowed, const char* fallback = nullptr) {
        std::string x;
        if (!has(key)) {
            if (!fallback) fail(key, "is required");
            x = fallback;
        } else {
            const json& v = get(key);
            if (!v.is_string()) fail(key, "must be a string");
            x = v.get<std::string>();
        }
        if (!allowed.count(x)) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
            fail(key, "must be one of: " + list);
        }
        out_[key] = x;
        return x;
    }

    Node child(const std::string& key) {
        used_.insert(key);
        if (!has(key)) fail(key, "is required");
        return Node(j_.at(key), path_ + "/" + key);
    }
    Node child_or_empty(const std::string& key) {
        static const json empty = json::object();
        used_.insert(key);
        return Node(has(key) ? j_.at(key) : empty, path_ + "/" + key);
    }
    const json& raw(const std::string& key) {
        used_.insert(key);
        if (!has(key)) fail(key, "is required");
        return j_.at(key);
    }
    void store(const std::string& key, json value) { out_[key] = std::move(value); }
    const std::string& path() const { return path_; }

    // Rejects unknown keys and returns the normalized object.
    json finish() const {
        for (const auto& item : j_.items())
            if (!used_.count(item.key())) fail(item.key(), "unknown field");
        return out_;
    }

private:
    const json& get(const std::string& key) {
        used_.insert(key);
        if (!has(key)) fail(key, "is required");
        return j_.at(key);
    }

    const json& j_;
    std::string path_;
    std::set<std::string> used_;
    json out_ = json::object();
};

sys::SystemSpec parse_system(Node& n) {
    sys::SystemSpec s;
    s.mass = n.positive("mass");

    Node pot = n.child("potential");
    const auto kind = pot.choice("kind", {"harmonic", "morse", "quadratic"});
    if (kind == "harmonic") {
        s.potential = sys::Harmonic{pot.positive("omega")};
    } else if (kind == "morse") {
        s.potential = sys::Morse{pot.positive("depth"), pot.positive("range")};
    } else {
        s.potential = sys::Quadratic{pot.number("v0", 0.0), pot.number("v1", 0.0), pot.number("v2")};
    }
    n.store("potential", pot.finish());

    Node cpl = n.child_or_empty("coupling");
    const auto ckind = cpl.choice("kind", {"linear", "morse", "affine"}, "linear");
    if (ckind == "morse") {
        s.coupling = sys::MorseCoupling{cpl.positive("range")};
    } else if (ckind == "affine") {
        s.coupling = sys::AffineCoupling{cpl.number("f0", 0.0), cpl.number("f1")};
    } else {
        s.coupling = sys::LinearCoupling{};
    }
    n.store("coupling", cpl.finish());
    s.counter_term = n.boolean("counter_term", true);
    return s;
}

double system_frequency(const sys::SystemSpec& s, const std::string& where) {
    try {
        const double w = s.harmonic_frequency();
        if (w > 0.0 && std::isfinite(w)) return w;
    } catch (const std::exception&) {
    }
    throw ConfigError(where + ": the system has no positive harmonic frequency; set it explicitly");
}

BathConfig parse_bath(Node& n, const sys::SystemSpec& system) {
    BathConfig b;
    Node j = n.child("spectral_density");
    const auto kind = j.choice("kind", {"exp_cutoff", "linear_ohmic"});
    double default_max = 0.0;
    if (kind == "exp_cutoff") {
        const double xi = j.non_negative("xi", 0.0);
        const double wc = j.positive("omega_c");
        b.density = bath::SpectralDensity::exp_cutoff(xi, wc);
        default_max = 5.0 * wc;
    } else {
        b.density = bath::SpectralDensity::linear_ohmic(system.mass, j.non_negative("gamma", 0.0));
        if (!n.has("omega_max")) default_max = 2.0 * system_frequency(system, n.path() + "/omega_max");
    }
    n.store("spectral_density", j.finish());
    b.n_modes = n.integer("n_modes", 60, 1, 100000);
    b.omega_max = n.positive("omega_max", default_max > 0.0 ? default_max : 1.0);
    b.mode_mass = n.positive("mode_mass", 1.0);
    return b;
}

std::vector<double> parse_times(Node& out) {
    const json& grid = out.raw("t_grid");
    std::vector<double> times;
    if (grid.is_array()) {
        if (grid.empty()) out.fail("t_grid", "must not be empty");
        for (const auto& v : grid) {
            if (!v.is_number() || !std::isfinite(v.get<double>())) out.fail("t_grid", "entries must be numbers");
            times.push_back(v.get<double>());
        }
    } else {
        Node g(grid, out.path() + "/t_grid");
        const double start = g.non_negative("start", 0.0);
        const double stop = g.number("stop");
        const auto points = g.integer("points", 0, 1, 1000000);
        g.finish();
        if (points == 1) {
            times.push_back(stop);
        } else {
            for (std::uint64_t k = 0; k < points; ++k)
                times.push_back(start + (stop - start) * static_cast<double>(k) / static_cast<double>(points - 1));
        }
    }
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!(times[k] >= 0.0)) out.fail("t_grid", "times must be >= 0");
        if (k > 0 && !(times[k] > times[k - 1])) out.fail("t_grid", "times must be strictly increasing");
    }
    out.store("t_grid", times);
    return times;
}

}  // namespace

bath::BathSpec BathConfig::build() const {
    return bath::discretize(density, n_modes, omega_max, mode_mass);
}

bath::BathSpec RunConfig::build_bath() const { return bath.build(); }

RunConfig parse_config(const json& doc) {
    RunConfig c;
    Node root(doc, "");
    json norm = json::object();

    Node sys_node = root.child("system");
    c.system = parse_system(sys_node);
    norm["system"] = sys_node.finish();
    try {
        c.system.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("/system: ") + e.what());
    }

    Node bath_node = root.child("bath");
    c.bath = parse_bath(bath_node, c.system);
    norm["bath"] = bath_node.finish();
    try {
        (void)c.build_bath();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("/bath: ") + e.what());
    }

    Node init = root.child("initial_state");
    const double a = init.number("displacement");
    double width = 0.0;
    if (init.has("width")) {
        width = init.positive("width");
    } else {
        const double omega = system_frequency(c.system, "/initial_state/width");
        width = init.positive("width", std::sqrt(kHbar / (c.system.mass * omega)));
    }
    c.state = prop::InitialSystemState::from_width(a, width);
    auto& num = c.numerics;
    const auto mode = init.choice("bath_init", {"wigner", "equilibrium"}, "wigner");
    num.bath_init = mode == "wigner" ? prop::BathInit::Wigner : prop::BathInit::Equilibrium;
    const bool ground = init.boolean("ground_state", false);
    if (ground && init.has("beta")) init.fail("beta", "conflicts with ground_state = true");
    if (ground) {
        num.beta = bath::kGroundState;
    } else if (init.has("beta")) {
        num.beta = init.positive("beta");
    } else if (num.bath_init == prop::BathInit::Wigner) {
        init.fail("beta", "is required for Wigner sampling unless ground_state = true");
    } else {
        num.beta = bath::kGroundState;
    }
    num.equilibrium_position = init.number("equilibrium_position", a);
    norm["initial_state"] = init.finish();

    Node n = root.child_or_empty("numerics");
    const double period = 2.0 * std::numbers::pi / system_frequency(c.system, "/numerics/dt_max");
    num.dt_max = n.positive("dt_max", period / 32.0);
    num.min_steps = static_cast<int>(n.integer("min_steps", 16, 2, 100000));
    num.max_steps = static_cast<int>(n.integer("max_steps", 0, 0, 100000));
    if (num.max_steps != 0 && num.max_steps < num.min_steps) n.fail("max_steps", "must be 0 or >= min_steps");
    num.quadrature_nodes = static_cast<int>(n.integer("quadrature_nodes", 8, 2, 64));
    num.samples = n.integer("samples", 200, 1, 100000000);
    num.antithetic = n.boolean("antithetic", true);
    num.seed = n.integer("seed", 0, 0);
    num.max_drop_fraction = n.non_negative("max_drop_fraction", 0.01);
    if (num.max_drop_fraction > 1.0) n.fail("max_drop_fraction", "must be <= 1");
    c.trace_tolerance = n.positive("trace_tolerance", 0.05);
    num.saddle_iterations = static_cast<int>(n.integer("saddle_iterations", 30, 1, 10000));
    num.saddle_tolerance = n.positive("saddle_tolerance", 1e-9);

    Node s = n.child_or_empty("solver");
    num.solver.max_iterations = static_cast<int>(s.integer("max_iterations", 50, 1, 100000));
    num.solver.residual_tolerance = s.positive("residual_tolerance", 1e-10);
    num.solver.initial_step = s.positive("initial_step", 1.0);
    num.solver.backtrack = s.positive("backtrack", 0.5);
    if (num.solver.initial_step > 1.0) s.fail("initial_step", "must be <= 1");
    if (num.solver.backtrack >= 1.0) s.fail("backtrack", "must be < 1");
    num.solver.max_backtracks = static_cast<int>(s.integer("max_backtracks", 30, 0, 1000));
    num.solver.continuation_stages = static_cast<int>(s.integer("continuation_stages", 1, 1, 10000));
    n.store("solver", s.finish());
    norm["numerics"] = n.finish();

    Node out = root.child("output");
    c.times = parse_times(out);
    if (out.has("path")) {
        const json& p = out.raw("path");
        if (!p.is_string() || p.get<std::string>().empty()) out.fail("path", "must be a non-empty string");
        c.output_path = p.get<std::string>();
        out.store("path", c.output_path);
    }
    norm["output"] = out.finish();
    root.finish();

    try {
        num.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("/numerics: ") + e.what());
    }
    // fields the chosen bath initialization never reads stay out of the hash
    if (num.bath_init == prop::BathInit::Equilibrium) {
        for (const char* key : {"beta", "ground_state"}) norm["initial_state"].erase(key);
        for (const char* key : {"samples", "antithetic", "seed"}) norm["numerics"].erase(key);
    } else {
        norm["initial_state"].erase("equilibrium_position");
    }
    c.normalized = std::move(norm);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_config(doc);
}

void set_seed(RunConfig& config, std::uint64_t seed) {
    config.numerics.seed = seed;
    if (config.numerics.bath_init == prop::BathInit::Wigner) config.normalized["numerics"]["seed"] = seed;
}

std::string config_hash(const RunConfig& config) {
    json hashed = config.normalized;
    hashed["output"].erase("path");
    const std::string text = hashed.dump();
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(text.data(), text.size(), digest, &length, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    std::ostringstream hex;
    for (unsigned int i = 0; i < length; ++i) {
        static const char* digits = "0123456789abcdef";
        hex << digits[digest[i] >> 4] << digits[digest[i] & 15];
    }
    return hex.str();
}

}  // namespace fbsc::cli
