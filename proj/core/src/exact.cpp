#include "fbsc/exact.hpp"

#include <cmath>
#include <stdexcept>
#include <variant>

#include <Eigen/Eigenvalues>

namespace fbsc::exact {

NormalModeDecomposition build_normal_modes(const sys::SystemSpec& system, const bath::BathSpec& bath) {
    system.validate();
    const auto* harmonic = std::get_if<sys::Harmonic>(&system.potential);
    if (!harmonic || !std::holds_alternative<sys::LinearCoupling>(system.coupling))
        throw std::invalid_argument("normal modes need a harmonic system with linear coupling");

    const Eigen::Index n = static_cast<Eigen::Index>(bath.n_modes()) + 1;
    Vector<double> masses(n);
    Matrix<double> v = Matrix<double>::Zero(n, n);
    masses(0) = system.mass;
    v(0, 0) = system.mass * harmonic->omega * harmonic->omega;
    if (system.counter_term) v(0, 0) += 2.0 * bath.reorganization();
    for (Eigen::Index i = 1; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i - 1);
        const double m = bath.masses()[k], w = bath.frequencies()[k];
        masses(i) = m;
        v(i, i) = m * w * w;
        v(0, i) = v(i, 0) = -bath.couplings()[k];
    }
    const Vector<double> inv_sqrt = masses.cwiseSqrt().cwiseInverse();
    const Matrix<double> weighted = inv_sqrt.asDiagonal() * v * inv_sqrt.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Matrix<double>> solver(weighted);
    if (solver.info() != Eigen::Success) throw std::runtime_error("normal-mode diagonalization failed");
    const double largest = solver.eigenvalues().cwiseAbs().maxCoeff();
    if (!(solver.eigenvalues().minCoeff() > 1e-12 * largest))
        throw std::domain_error("coupled potential has a non-positive normal-mode frequency");
    return {solver.eigenvalues().cwiseSqrt(), solver.eigenvectors(), masses};
}

Vector<double> mean_phase_point(const NormalModeDecomposition& decomp, const prop::InitialSystemState& state,
                                double t, const bath::BathPhasePoint* bath_mean) {
    const Eigen::Index n = decomp.masses.size();
    const Vector<double> sqrt_m = decomp.masses.cwiseSqrt();
    Vector<double> q0 = Vector<double>::Zero(n), v0 = Vector<double>::Zero(n);
    q0(0) = sqrt_m(0) * state.center;
    if (bath_mean) {
        const auto modes = static_cast<std::size_t>(n - 1);
        if (bath_mean->x0.size() != modes || bath_mean->p0.size() != modes)
            throw std::invalid_argument("bath phase point does not match the decomposition");
        for (Eigen::Index i = 1; i < n; ++i) {
            q0(i) = sqrt_m(i) * bath_mean->x0[i - 1];
            v0(i) = bath_mean->p0[i - 1] / sqrt_m(i);
        }
    }
    const Vector<double> eta = decomp.transform.transpose() * q0;
    const Vector<double> eta_v = decomp.transform.transpose() * v0;
    const Vector<double> wt = decomp.frequencies * t;
    const Vector<double> c = wt.array().cos().matrix(), s = wt.array().sin().matrix();
    const Vector<double> eta_t = eta.cwiseProduct(c) + eta_v.cwiseQuotient(decomp.frequencies).cwiseProduct(s);
    const Vector<double> eta_dot = -eta.cwiseProduct(decomp.frequencies).cwiseProduct(s) + eta_v.cwiseProduct(c);
    Vector<double> out(2 * n);
    out.head(n) = (decomp.transform * eta_t).cwiseQuotient(sqrt_m);
    out.tail(n) = (decomp.transform * eta_dot).cwiseProduct(sqrt_m);
    return out;
}

prop::ObservableSeries exact_position_expectation(const NormalModeDecomposition& decomp,
                                                  const prop::InitialSystemState& state,
                                                  const std::vector<double>& t_grid,
                                                  const bath::BathPhasePoint* bath_mean) {
    prop::ObservableSeries series;
    series.times = t_grid;
    for (double t : t_grid) {
        series.values.push_back(mean_phase_point(decomp, state, t, bath_mean)(0));
        series.std_errors.push_back(0.0);
        series.imag_parts.push_back(0.0);
        series.traces.emplace_back(1.0, 0.0);
        series.steps.push_back(0);
        series.converged.push_back(0);
        series.dropped.push_back(0);
        series.valid.push_back(true);
    }
    return series;
}

double forced_oscillator_trajectory(double mass, double omega, double coupling, double x0, double p0,
                                    const std::vector<double>& drive, double dt, double t) {
    if (!(mass > 0.0) || !(omega > 0.0)) throw std::invalid_argument("oscillator needs m > 0 and omega > 0");
    if (!(t >= 0.0)) throw std::invalid_argument("time must be non-negative");
    double memory = 0.0;
    if (coupling != 0.0 && t > 0.0) {
        if (drive.size() < 2 || !(dt > 0.0)) throw std::invalid_argument("drive needs at least two samples");
        if (t > dt * static_cast<double>(drive.size() - 1) * (1.0 + 1e-12))
            throw std::invalid_argument("drive does not cover the requested time");
        auto integrand = [&](double tp, double f) { return f * std::sin(omega * (t - tp)); };
        const auto full = std::min(drive.size() - 1, static_cast<std::size_t>(std::floor(t / dt + 1e-9)));
        for (std::size_t k = 0; k < full; ++k)
            memory += 0.5 * dt * (integrand(k * dt, drive[k]) + integrand((k + 1) * dt, drive[k + 1]));
        const double rest = t - full * dt;
        if (rest > 1e-12 * dt && full + 1 < drive.size()) {
            const double f_end = drive[full] + (drive[full + 1] - drive[full]) * rest / dt;
            memory += 0.5 * rest * (integrand(full * dt, drive[full]) + integrand(t, f_end));
        }
    }
    return x0 * std::cos(omega * t) + p0 / (mass * omega) * std::sin(omega * t) +
           coupling / (mass * omega) * memory;
}

}  // namespace fbsc::exact
