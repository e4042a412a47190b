// Acceptance battery: one PASS/FAIL line per criterion, tolerances fixed here.
//
//   fbsc_acceptance [--config-dir DIR] [--only 1,6,...] [--expect-fail 7a,7b]
//
// The exit status is 0 when every criterion passes or fails only among the
// --expect-fail ids; FAIL lines are printed either way.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "checks.hpp"
#include "config.hpp"
#include "fbsc/action.hpp"
#include "fbsc/bvp.hpp"
#include "fbsc/exact.hpp"
#include "fbsc/factorization.hpp"
#include "fbsc/propagator.hpp"
#include "io.hpp"

using namespace fbsc;
using nlohmann::json;
using std::numbers::pi;

namespace {

struct Outcome {
    std::string id;
    bool pass;
    std::string detail;
};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", x);
    return buf;
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    return json::parse(in);
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b, std::size_t n = SIZE_MAX) {
    double m = 0.0;
    for (std::size_t k = 0; k < std::min(n, a.size()); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

double max_abs(const std::vector<double>& a, std::size_t n = SIZE_MAX) {
    double m = 0.0;
    for (std::size_t k = 0; k < std::min(n, a.size()); ++k) m = std::max(m, std::abs(a[k]));
    return m;
}

// Leading time points whose trace is still within tolerance. Diagnostic only.
std::size_t trusted_prefix(const prop::ObservableSeries& s, double tol) {
    std::size_t k = 0;
    while (k < s.times.size() && s.valid[k] && std::abs(s.traces[k] - 1.0) <= tol) ++k;
    return k;
}

class Battery {
public:
    explicit Battery(std::string config_dir)
        : va_(read_json(config_dir + "/benchmark_va.json")), vb_(read_json(config_dir + "/benchmark_vb.json")) {}

    // Harmonic benchmark against the normal-mode oracle.
    Outcome c1() {
        const auto& run = va_run();
        const auto config = cli::parse_config(va_);
        const auto bath = config.build_bath();
        const auto exact = exact::exact_position_expectation(exact::build_normal_modes(config.system, bath),
                                                             config.state, config.times);
        const double a = config.state.center;
        double worst = 0.0, worst_excess = -INFINITY;
        int max_steps = 0;
        for (std::size_t k = 0; k < config.times.size(); ++k) {
            const double dev = std::abs(run.values[k] - exact.values[k]);
            worst = std::max(worst, dev);
            worst_excess = std::max(worst_excess, dev - (0.02 * std::abs(a) + 3.0 * run.std_errors[k]));
            max_steps = std::max(max_steps, run.steps[k]);
        }
        const bool shape = config.times.size() == 24 && config.numerics.quadrature_nodes == 8 &&
                           config.numerics.samples == 200 && max_steps <= 64 && config.times.back() <= 6.0;
        return {"1", run.ok && shape && worst_excess <= 0.0,
                "max|dev|=" + fmt(worst) + " tol=0.02a+3SE, N<=" + std::to_string(max_steps) +
                    ", samples=" + std::to_string(config.numerics.samples) +
                    ", dropped=" + std::to_string(run.total_dropped())};
    }

    // One Newton step suffices on the linear problem.
    Outcome c2() {
        const auto config = cli::parse_config(va_);
        const auto bath = config.build_bath();
        std::mt19937_64 rng(2024);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        std::uniform_int_distribution<int> steps(8, 64);
        int worst_iter = 0, failures = 0;
        double worst_res = 0.0;
        for (int rep = 0; rep < 100; ++rep) {
            const auto init = bath::sample_wigner(bath, config.numerics.beta, 77, static_cast<std::uint64_t>(rep));
            const action::Endpoints<double> ends{u(rng), u(rng), u(rng), u(rng)};
            const int n = steps(rng);
            const auto guess = bvp::harmonic_initial_guess(ends, config.system, bath, init, n, 0.1);
            const auto r = bvp::solve_stationary(guess, config.system, bath, init, {});
            worst_iter = std::max(worst_iter, r.iterations);
            worst_res = std::max(worst_res, r.residual_norm);
            if (!r.converged || r.iterations > 1 || !(r.residual_norm <= 1e-10)) ++failures;
        }
        return {"2", failures == 0,
                "100 configs, max iterations=" + std::to_string(worst_iter) + ", max residual=" + fmt(worst_res)};
    }

    // Analytic derivatives against finite differences, zero cross diagonal, antisymmetry.
    Outcome c3() {
        bool pass = true;
        std::string detail;
        for (const auto* doc : {&va_, &vb_}) {
            const auto config = cli::parse_config(*doc);
            const auto rows = cli::run_checks(config, 12, 10);
            for (const auto& r : rows) {
                if (r.name.rfind("free-particle", 0) == 0) continue;
                pass = pass && r.pass;
            }
            detail += (detail.empty() ? "" : "; ") + std::string(doc == &va_ ? "harmonic" : "morse") +
                      " grad=" + fmt(rows[0].value) + " hess=" + fmt(rows[1].value) + " cross_diag=" + fmt(rows[4].value) +
                      " antisym=" + fmt(rows[5].value);
        }
        return {"3", pass, "20 pairs N=12: " + detail};
    }

    // Second-order convergence of the discretized phase.
    Outcome c4() {
        bool pass = true;
        std::string detail;
        for (const auto* doc : {&va_, &vb_}) {
            const auto config = cli::parse_config(*doc);
            const auto bath = config.build_bath();
            const double t = 12 * config.numerics.dt_max;
            const double sc = config.state.sigma;
            const double c0 = config.state.center;
            const action::SmoothPath plus{[&](double x) { return c0 + sc * (0.3 + std::sin(1.3 * x / t)); },
                                          [&](double x) { return sc * 1.3 / t * std::cos(1.3 * x / t); }};
            const action::SmoothPath minus{
                [&](double x) { return c0 + sc * (0.1 + x / t - 0.5 * x * x / (t * t)); },
                [&](double x) { return sc * (1.0 / t - x / (t * t)); }};
            const auto init = config.numerics.bath_init == prop::BathInit::Equilibrium
                                  ? bath::equilibrium_placement(bath, config.system, config.numerics.equilibrium_position)
                                  : bath::sample_wigner(bath, config.numerics.beta, 5, 0);
            const double reference =
                action::action_phi_continuum(plus, minus, t, config.system, bath, init, {256, 10});
            std::vector<double> errors;
            for (int n : {16, 32, 64}) {
                auto traj = action::TrajectoryPair<double>::zeros(n, t / n);
                for (int k = 0; k <= n; ++k) {
                    traj.plus(k) = plus.value(k * t / n);
                    traj.minus(k) = minus.value(k * t / n);
                }
                errors.push_back(std::abs(action::action_phi(traj, config.system, bath, init) - reference));
            }
            for (std::size_t i = 1; i < errors.size(); ++i) {
                const double ratio = errors[i - 1] / errors[i];
                pass = pass && std::abs(ratio - 4.0) <= 0.5;
                detail += (detail.empty() ? "" : " ") + fmt(ratio);
            }
            detail += doc == &va_ ? " (harmonic);" : " (morse)";
        }
        return {"4", pass, "error ratios " + detail};
    }

    // Free-particle determinant and prefactor.
    Outcome c5() {
        sys::SystemSpec free;
        free.mass = 1.7;
        free.potential = sys::Quadratic{0.0, 0.0, 0.0};
        free.counter_term = false;
        const bath::BathSpec silent({1.0}, {1.0}, {0.0});
        const double dt = 0.37;
        double det_err = 0.0, pre_err = 0.0;
        for (int n : {4, 8, 16, 32}) {
            const auto traj = action::TrajectoryPair<double>::zeros(n, dt);
            const auto eval = action::hessian(traj, free, silent, bath::zero_phase_point(silent));
            const Matrix<double> block = eval.hessian.topLeftCorner(n - 1, n - 1);
            // N (M/dt)^(N-1)
            const double expected = std::log(static_cast<double>(n)) + (n - 1) * std::log(free.mass / dt);
            det_err = std::max(det_err, std::abs(SymmetricFactorization<double>(block).log_abs_det() - expected) /
                                            std::abs(expected));
            const double per_branch = std::sqrt(free.mass / (2.0 * pi * kHbar * n * dt));
            const cplx pre = action::prefactor(eval, free, n, dt);
            pre_err = std::max(pre_err, std::abs(std::abs(pre) - per_branch * per_branch) / (per_branch * per_branch));
        }
        return {"5", det_err <= 1e-10 && pre_err <= 1e-10,
                "log det rel err=" + fmt(det_err) + ", prefactor rel err=" + fmt(pre_err)};
    }

    // Zero coupling gives a cos(Omega t).
    Outcome c6() {
        json doc = va_;
        doc["bath"]["spectral_density"]["xi"] = 0.0;
        doc["numerics"]["dt_max"] = 2.0 * pi / 128.0;
        doc["numerics"]["max_steps"] = 0;
        doc["numerics"]["samples"] = 2;
        doc["output"]["t_grid"] = {{"start", 2.0 * pi / 24.0}, {"stop", 2.0 * pi}, {"points", 24}};
        const auto config = cli::parse_config(doc);
        const auto run = prop::expectation_position(config.state, config.system, config.build_bath(), config.times,
                                                    config.numerics);
        const double a = config.state.center;
        const double omega = config.system.harmonic_frequency();
        double worst = 0.0;
        for (std::size_t k = 0; k < config.times.size(); ++k)
            worst = std::max(worst, std::abs(run.values[k] - a * std::cos(omega * config.times[k])));
        return {"6", run.ok && worst <= 1e-3 * std::abs(a), "max|dev|=" + fmt(worst) + " tol=1e-3a"};
    }

    // Morse benchmark at displacement 2 sbar.
    Outcome c7a() {
        const auto& run = vb_run(20);
        const double fraction = run.drop_fraction();
        return {"7a", run.ok && fraction < 0.01,
                "drop fraction=" + fmt(fraction) + " (" + std::to_string(run.total_dropped()) + "/" +
                    std::to_string(run.total_evaluated()) + ")" + (run.failure.empty() ? "" : ", " + run.failure)};
    }

    // Small displacement against the harmonic analogue.
    Outcome c7b() {
        json doc = vb_;
        const double sbar = doc["initial_state"]["width"].get<double>();
        doc["initial_state"]["displacement"] = 0.1 * sbar;
        const auto config = cli::parse_config(doc);
        const auto bath = config.build_bath();
        const auto run =
            prop::expectation_position(config.state, config.system, bath, config.times, config.numerics);

        sys::SystemSpec harmonic;
        harmonic.mass = config.system.mass;
        harmonic.potential = sys::Harmonic{config.system.harmonic_frequency()};
        harmonic.coupling = sys::LinearCoupling{};
        harmonic.counter_term = config.system.counter_term;
        const auto mean = bath::equilibrium_placement(bath, harmonic, config.numerics.equilibrium_position);
        const auto reference = exact::exact_position_expectation(exact::build_normal_modes(harmonic, bath),
                                                                 config.state, config.times, &mean);
        const double rel = max_abs_diff(run.values, reference.values) / max_abs(reference.values);
        const auto n = trusted_prefix(run, config.trace_tolerance);
        const double early = max_abs_diff(run.values, reference.values, n) / max_abs(reference.values);
        return {"7b", run.ok && rel <= 0.05,
                "max|dev|/max|harmonic|=" + fmt(rel) + " tol=5e-2, dropped=" + std::to_string(run.total_dropped()) +
                    "; first " + std::to_string(n) + " points with sound trace: " + fmt(early)};
    }

    // 20 versus 40 bath modes.
    Outcome c7c() {
        const auto& coarse = vb_run(20);
        const auto& fine = vb_run(40);
        const double rel = max_abs_diff(coarse.values, fine.values) / max_abs(coarse.values);
        const double tol = cli::parse_config(vb_).trace_tolerance;
        const auto n = std::min(trusted_prefix(coarse, tol), trusted_prefix(fine, tol));
        const double early = max_abs_diff(coarse.values, fine.values, n) / max_abs(coarse.values, n);
        return {"7c", coarse.ok && fine.ok && rel < 0.02,
                "max|s20-s40|/max|s20|=" + fmt(rel) + " tol=2e-2, ok20=" + std::to_string(coarse.ok) +
                    " ok40=" + std::to_string(fine.ok) + "; first " + std::to_string(n) +
                    " points with sound trace: " + fmt(early)};
    }

    // (++) block positive and (--) block negative definite at stationary paths,
    // on the benchmark's own (t, N, dt) grid wherever N <= 32.
    Outcome c8() {
        const auto config = cli::parse_config(va_);
        const auto bath = config.build_bath();
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        int checked = 0, violations = 0;
        double min_plus = INFINITY, max_minus = -INFINITY, first_bad_t = NAN;
        for (double t : config.times) {
            const int n = prop::steps_for_time(config.numerics, t);
            if (n > 32) continue;
            const double dt = t / n;
            for (int rep = 0; rep < 10; ++rep) {
                const auto init = bath::sample_wigner(bath, config.numerics.beta, 88, static_cast<std::uint64_t>(rep));
                const action::Endpoints<double> ends{u(rng), u(rng), u(rng), u(rng)};
                const auto guess = bvp::harmonic_initial_guess(ends, config.system, bath, init, n, dt);
                const auto r = bvp::solve_stationary(guess, config.system, bath, init, {});
                ++checked;
                if (!r.converged) {
                    ++violations;
                    continue;
                }
                const Matrix<double>& h = r.action_eval.hessian;
                Eigen::SelfAdjointEigenSolver<Matrix<double>> pp(h.topLeftCorner(n - 1, n - 1));
                Eigen::SelfAdjointEigenSolver<Matrix<double>> mm(h.bottomRightCorner(n - 1, n - 1));
                min_plus = std::min(min_plus, pp.eigenvalues().minCoeff());
                max_minus = std::max(max_minus, mm.eigenvalues().maxCoeff());
                if (!(pp.eigenvalues().minCoeff() > 0.0) || !(mm.eigenvalues().maxCoeff() < 0.0)) {
                    ++violations;
                    if (std::isnan(first_bad_t)) first_bad_t = t;
                }
            }
        }
        return {"8", violations == 0,
                std::to_string(checked) + " solutions N<=32, min eig(++)=" + fmt(min_plus) +
                    ", max eig(--)=" + fmt(max_minus) + ", violations=" + std::to_string(violations) +
                    (violations ? ", first at t=" + fmt(first_bad_t) : "")};
    }

    // Thread-count independence of the CSV bytes.
    Outcome c9() {
        const std::string one = cli::series_csv(va_run());
        auto config = cli::parse_config(va_);
        config.numerics.threads = 3;
        const auto run = prop::expectation_position(config.state, config.system, config.build_bath(), config.times,
                                                    config.numerics);
        const std::string three = cli::series_csv(run);
        return {"9", one == three,
                "threads 1 vs 3: " + std::string(one == three ? "identical" : "differ") + " (" +
                    std::to_string(one.size()) + " bytes)"};
    }

private:
    const prop::ObservableSeries& va_run() {
        if (!va_series_) {
            const auto config = cli::parse_config(va_);
            va_series_ = prop::expectation_position(config.state, config.system, config.build_bath(), config.times,
                                                    config.numerics);
        }
        return *va_series_;
    }

    const prop::ObservableSeries& vb_run(std::size_t modes) {
        auto it = vb_series_.find(modes);
        if (it == vb_series_.end()) {
            json doc = vb_;
            doc["bath"]["n_modes"] = modes;
            const auto config = cli::parse_config(doc);
            it = vb_series_
                     .emplace(modes, prop::expectation_position(config.state, config.system, config.build_bath(),
                                                                config.times, config.numerics))
                     .first;
        }
        return it->second;
    }

    json va_;
    json vb_;
    std::optional<prop::ObservableSeries> va_series_;
    std::map<std::size_t, prop::ObservableSeries> vb_series_;
};

std::set<std::string> split(const std::string& list) {
    std::set<std::string> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.insert(item);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::string config_dir = FBSC_CONFIG_DIR;
    std::set<std::string> only, expect_fail;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (i + 1 < argc && arg == "--config-dir") {
            config_dir = argv[++i];
        } else if (i + 1 < argc && arg == "--only") {
            only = split(argv[++i]);
        } else if (i + 1 < argc && arg == "--expect-fail") {
            expect_fail = split(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: %s [--config-dir DIR] [--only IDS] [--expect-fail IDS]\n", argv[0]);
            return 2;
        }
    }

    Battery battery(config_dir);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1", [&] { return battery.c1(); }},   {"2", [&] { return battery.c2(); }},
        {"3", [&] { return battery.c3(); }},   {"4", [&] { return battery.c4(); }},
        {"5", [&] { return battery.c5(); }},   {"6", [&] { return battery.c6(); }},
        {"7a", [&] { return battery.c7a(); }}, {"7b", [&] { return battery.c7b(); }},
        {"7c", [&] { return battery.c7c(); }}, {"8", [&] { return battery.c8(); }},
        {"9", [&] { return battery.c9(); }},
    };

    int unexpected = 0;
    for (const auto& [id, fn] : criteria) {
        const std::string group = id.substr(0, 1);
        if (!only.empty() && !only.count(id) && !only.count(group)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {id, false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool expected = expect_fail.count(id) > 0;
        std::printf("criterion %-3s %s  %s [%.1fs]%s\n", id.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs,
                    !o.pass && expected ? " (known failure)" : "");
        std::fflush(stdout);
        if (!o.pass && !expected) ++unexpected;
    }
    return unexpected == 0 ? 0 : 1;
}
