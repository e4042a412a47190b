#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fbsc/action.hpp"
#include "fbsc/bath.hpp"
#include "fbsc/bvp.hpp"
#include "fbsc/system.hpp"

namespace fbsc::prop {

// Displaced Gaussian wave packet exp(-(s - a)^2 / (2 sigma^2)) up to normalization.
struct InitialSystemState {
    double center{0.0};
    double sigma{1.0};

    // sigma^2 = hbar / (M Omega)
    static InitialSystemState from_frequency(double center, double mass, double omega);
    static InitialSystemState from_width(double center, double sigma);
    void validate() const;
};

// <s0+| rho(0) |s0-> of the pure packet.
double initial_density(const InitialSystemState& state, double s0_plus, double s0_minus);
// log of the same expression continued to complex arguments
cplx log_initial_density(const InitialSystemState& state, cplx s0_plus, cplx s0_minus);

enum class BathInit { Wigner, Equilibrium };

struct PropagatorConfig {
    // per-time-point grid: N = max(min_steps, ceil(t / dt_max)), capped by max_steps when > 0
    double dt_max{0.0};
    int min_steps{16};
    int max_steps{0};

    // Gauss-Hermite nodes per endpoint dimension
    int quadrature_nodes{8};

    BathInit bath_init{BathInit::Wigner};
    double beta{1.0};
    std::size_t samples{200};
    // Pair every Wigner draw with its negative.
    bool antithetic{true};
    std::uint64_t seed{0};
    // system position used for equilibrium placement of the bath
    double equilibrium_position{0.0};

    // Newton search for the endpoint saddle of anharmonic integrands
    int saddle_iterations{30};
    double saddle_tolerance{1e-9};

    bvp::SolverConfig solver{};
    unsigned threads{1};
    double max_drop_fraction{0.01};
    bvp::JsonLinesLog* log{nullptr};

    void validate() const;
};

int steps_for_time(const PropagatorConfig& cfg, double t);

struct ObservableSeries {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> std_errors;
    // imaginary part of the normalized estimator
    std::vector<double> imag_parts;
    // bath-averaged trace estimate
    std::vector<cplx> traces;
    std::vector<int> steps;
    std::vector<std::size_t> converged;
    std::vector<std::size_t> dropped;
    std::vector<bool> valid;

    std::size_t total_dropped() const;
    std::size_t total_evaluated() const;
    double drop_fraction() const;

    bool ok{true};
    std::string failure;
};

// Q^SC for one set of endpoints and one bath initial condition.
template <typename Scalar>
action::PropagatorAmplitude qsc_amplitude(const action::Endpoints<Scalar>& ends, const bath::BathPhasePoint& init,
                                          const sys::SystemSpec& system, const bath::BathSpec& bath, int n_steps,
                                          double dt, const bvp::SolverConfig& cfg = {});

// Bath-averaged position expectation on t_grid. A run whose drop fraction
// exceeds cfg.max_drop_fraction is returned with ok = false.
ObservableSeries expectation_position(const InitialSystemState& state, const sys::SystemSpec& system,
                                      const bath::BathSpec& bath, const std::vector<double>& t_grid,
                                      const PropagatorConfig& cfg);

}  // namespace fbsc::prop
