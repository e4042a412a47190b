#pragma once

#include <vector>

#include "fbsc/bath.hpp"
#include "fbsc/propagator.hpp"
#include "fbsc/system.hpp"
#include "fbsc/types.hpp"

namespace fbsc::exact {

// Normal modes of the quadratic system + bath potential in mass-weighted
// coordinates (s, x_1, ..., x_n).
struct NormalModeDecomposition {
    Vector<double> frequencies;
    Matrix<double> transform;  // columns are the normal modes
    Vector<double> masses;
};

// Requires a harmonic system with linear coupling; the counter term follows
// system.counter_term. Throws std::domain_error on a non-positive eigenvalue.
NormalModeDecomposition build_normal_modes(const sys::SystemSpec& system, const bath::BathSpec& bath);

// Mean position of the coupled linear flow started from s = a, P = 0 and the
// bath means (x = p = 0 when bath_mean is null).
prop::ObservableSeries exact_position_expectation(const NormalModeDecomposition& decomp,
                                                  const prop::InitialSystemState& state,
                                                  const std::vector<double>& t_grid,
                                                  const bath::BathPhasePoint* bath_mean = nullptr);

// Phase point (positions then momenta) of the mean trajectory at time t.
Vector<double> mean_phase_point(const NormalModeDecomposition& decomp, const prop::InitialSystemState& state,
                                double t, const bath::BathPhasePoint* bath_mean = nullptr);

// Forced oscillator x(t) with the drive f(s(t')) sampled at t' = k dt;
// trapezoid rule for the memory integral.
double forced_oscillator_trajectory(double mass, double omega, double coupling, double x0, double p0,
                                    const std::vector<double>& drive, double dt, double t);

}  // namespace fbsc::exact
