#include <cmath>
#include <vector>

#include <boost/numeric/odeint.hpp>
#include <gtest/gtest.h>

#include "fbsc/exact.hpp"
#include "models.hpp"

using namespace fbsc;

namespace {

using State = std::vector<double>;

// Newton's equations of system + bath integrated directly: positions then velocities.
std::vector<double> integrate_positions(const testkit::Model& m, double a, const bath::BathPhasePoint* mean,
                                        const std::vector<double>& times) {
    const std::size_t n = m.bath.n_modes();
    const double big_m = m.system.mass;
    const double omega = m.system.harmonic_frequency();
    const double kappa = m.system.counter_term ? m.bath.reorganization() : 0.0;
    State y(2 * (n + 1), 0.0);
    y[0] = a;
    if (mean)
        for (std::size_t i = 0; i < n; ++i) {
            y[i + 1] = mean->x0[i];
            y[n + 2 + i] = mean->p0[i] / m.bath.masses()[i];
        }
    auto rhs = [&](const State& q, State& dq, double) {
        double force = -big_m * omega * omega * q[0] - 2.0 * kappa * q[0];
        for (std::size_t i = 0; i < n; ++i) {
            const double mi = m.bath.masses()[i], wi = m.bath.frequencies()[i], ci = m.bath.couplings()[i];
            force += ci * q[i + 1];
            dq[i + 1] = q[n + 2 + i];
            dq[n + 2 + i] = (-mi * wi * wi * q[i + 1] + ci * q[0]) / mi;
        }
        dq[0] = q[n + 1];
        dq[n + 1] = force / big_m;
    };
    namespace ode = boost::numeric::odeint;
    auto stepper = ode::make_dense_output(1e-13, 1e-13, ode::runge_kutta_dopri5<State>());
    std::vector<double> out;
    double t0 = 0.0;
    for (double t : times) {
        ode::integrate_adaptive(stepper, rhs, y, t0, t, 1e-3);
        t0 = t;
        out.push_back(y[0]);
    }
    return out;
}

std::vector<double> grid(double t_end, int n) {
    std::vector<double> t;
    for (int k = 1; k <= n; ++k) t.push_back(t_end * k / n);
    return t;
}

}  // namespace

TEST(NormalModes, UncoupledSystemOscillates) {
    sys::SystemSpec s;
    s.mass = 2.0;
    s.potential = sys::Harmonic{1.3};
    const bath::BathSpec b({1.0, 1.0}, {0.5, 2.0}, {0.0, 0.0});
    const auto d = exact::build_normal_modes(s, b);
    const auto state = prop::InitialSystemState::from_width(0.7, 1.0);
    const auto times = grid(10.0, 13);
    const auto series = exact::exact_position_expectation(d, state, times);
    for (std::size_t k = 0; k < times.size(); ++k)
        EXPECT_NEAR(series.values[k], 0.7 * std::cos(1.3 * times[k]), 1e-13);
}

TEST(NormalModes, TwoByTwoEigenvalues) {
    sys::SystemSpec s;
    s.mass = 2.0;
    s.potential = sys::Harmonic{1.5};
    s.counter_term = false;
    const bath::BathSpec b({3.0}, {0.8}, {0.9});
    const auto d = exact::build_normal_modes(s, b);
    // mass-weighted [[W^2, -c/sqrt(Mm)], [., w^2]]
    const double p = 1.5 * 1.5, q = 0.8 * 0.8, off = 0.9 / std::sqrt(6.0);
    const double mid = 0.5 * (p + q), rad = std::sqrt(0.25 * (p - q) * (p - q) + off * off);
    EXPECT_NEAR(d.frequencies(0) * d.frequencies(0), mid - rad, 1e-13);
    EXPECT_NEAR(d.frequencies(1) * d.frequencies(1), mid + rad, 1e-13);
}

TEST(NormalModes, OrthogonalAndTraceInvariant) {
    const auto m = testkit::harmonic_model(30);
    const auto d = exact::build_normal_modes(m.system, m.bath);
    const auto n = d.transform.rows();
    EXPECT_LT((d.transform.transpose() * d.transform - Matrix<double>::Identity(n, n)).norm(), 1e-12);
    double trace = 1.0 + 2.0 * m.bath.reorganization();
    for (double w : m.bath.frequencies()) trace += w * w;
    EXPECT_NEAR(d.frequencies.squaredNorm(), trace, 1e-10 * trace);
}

TEST(NormalModes, RejectsUnsupportedAndUnstable) {
    const auto morse = testkit::morse_model(5);
    EXPECT_THROW(exact::build_normal_modes(morse.system, morse.bath), std::invalid_argument);
    sys::SystemSpec s;
    s.counter_term = false;
    const bath::BathSpec strong({1.0}, {1.0}, {2.0});
    EXPECT_THROW(exact::build_normal_modes(s, strong), std::domain_error);
    s.counter_term = true;
    EXPECT_NO_THROW(exact::build_normal_modes(s, strong));
}

TEST(ExactExpectation, MatchesDirectIntegration) {
    const auto m = testkit::harmonic_model(12);
    const auto d = exact::build_normal_modes(m.system, m.bath);
    const auto state = prop::InitialSystemState::from_width(1.0, 1.0);
    const auto times = grid(6.0, 24);
    const auto series = exact::exact_position_expectation(d, state, times);
    const auto oracle = integrate_positions(m, 1.0, nullptr, times);
    for (std::size_t k = 0; k < times.size(); ++k) EXPECT_NEAR(series.values[k], oracle[k], 1e-10) << times[k];
    // dissipation: the amplitude decays
    EXPECT_LT(std::abs(series.values.back()), 0.5);
}

TEST(ExactExpectation, BathMeanMatchesDirectIntegration) {
    const auto m = testkit::harmonic_model(8);
    const auto d = exact::build_normal_modes(m.system, m.bath);
    std::mt19937_64 rng(3);
    const auto mean = testkit::random_phase_point(m.bath, rng);
    const auto state = prop::InitialSystemState::from_width(-0.4, 1.0);
    const auto times = grid(5.0, 10);
    const auto series = exact::exact_position_expectation(d, state, times, &mean);
    const auto oracle = integrate_positions(m, -0.4, &mean, times);
    for (std::size_t k = 0; k < times.size(); ++k) EXPECT_NEAR(series.values[k], oracle[k], 1e-10) << times[k];

    bath::BathPhasePoint wrong{{0.0}, {0.0}};
    EXPECT_THROW(exact::mean_phase_point(d, state, 1.0, &wrong), std::invalid_argument);
}

TEST(ExactExpectation, EquilibriumPlacementIsStationary) {
    const auto m = testkit::harmonic_model(10);
    const auto d = exact::build_normal_modes(m.system, m.bath);
    const auto mean = bath::equilibrium_placement(m.bath, m.system, 0.8);
    const auto state = prop::InitialSystemState::from_width(0.0, 1.0);
    // bath relaxed around s = 0.8 pulls the system there
    const auto series = exact::exact_position_expectation(d, state, {0.5, 20.0, 60.0}, &mean);
    EXPECT_GT(series.values[0], 0.0);
    const auto oracle = integrate_positions(m, 0.0, &mean, {0.5, 20.0, 60.0});
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(series.values[k], oracle[k], 1e-9);
}

TEST(ExactExpectation, EnergyConserved) {
    const auto m = testkit::harmonic_model(15);
    const auto d = exact::build_normal_modes(m.system, m.bath);
    const auto state = prop::InitialSystemState::from_width(1.2, 1.0);
    const auto n = d.masses.size();
    auto energy = [&](const Vector<double>& y) {
        double e = 0.5 * (1.0 + 2.0 * m.bath.reorganization()) * y(0) * y(0) + 0.5 * y(n) * y(n);
        for (Eigen::Index i = 1; i < n; ++i) {
            const auto k = static_cast<std::size_t>(i - 1);
            const double mi = m.bath.masses()[k], wi = m.bath.frequencies()[k], ci = m.bath.couplings()[k];
            e += y(n + i) * y(n + i) / (2.0 * mi) + 0.5 * mi * wi * wi * y(i) * y(i) - ci * y(0) * y(i);
        }
        return e;
    };
    const double e0 = energy(exact::mean_phase_point(d, state, 0.0));
    EXPECT_NEAR(e0, 0.5 * (1.0 + 2.0 * m.bath.reorganization()) * 1.44, 1e-12);
    for (double t : {0.3, 2.0, 7.5, 40.0}) EXPECT_NEAR(energy(exact::mean_phase_point(d, state, t)), e0, 1e-10);
}

TEST(ExactExpectation, SeriesShape) {
    const auto m = testkit::harmonic_model(4);
    const auto d = exact::build_normal_modes(m.system, m.bath);
    const auto series =
        exact::exact_position_expectation(d, prop::InitialSystemState::from_width(1.0, 1.0), {0.0, 1.0});
    ASSERT_EQ(series.values.size(), 2u);
    EXPECT_DOUBLE_EQ(series.values[0], 1.0);
    EXPECT_TRUE(series.ok);
    EXPECT_EQ(series.traces[1], cplx(1.0, 0.0));
}

TEST(ForcedOscillator, FreeMotion) {
    for (double t : {0.0, 0.4, 3.3})
        EXPECT_NEAR(exact::forced_oscillator_trajectory(2.0, 1.5, 0.0, 0.3, -0.7, {}, 0.1, t),
                    0.3 * std::cos(1.5 * t) - 0.7 / 3.0 * std::sin(1.5 * t), 1e-15);
}

TEST(ForcedOscillator, ConstantDrive) {
    const double m = 2.0, w = 1.5, c = 0.6, f = 0.9, dt = 1e-3;
    const std::vector<double> drive(4001, f);
    for (double t : {0.5, 1.7345, 4.0}) {
        const double exact_x = 0.2 * std::cos(w * t) + c * f / (m * w * w) * (1.0 - std::cos(w * t));
        EXPECT_NEAR(exact::forced_oscillator_trajectory(m, w, c, 0.2, 0.0, drive, dt, t), exact_x, 1e-7) << t;
    }
    EXPECT_THROW(exact::forced_oscillator_trajectory(m, w, c, 0.0, 0.0, drive, dt, 4.1), std::invalid_argument);
    EXPECT_THROW(exact::forced_oscillator_trajectory(m, 0.0, c, 0.0, 0.0, drive, dt, 1.0), std::invalid_argument);
}

TEST(ForcedOscillator, MatchesDirectIntegration) {
    const double m = 1.3, w = 2.1, c = 0.8, dt = 5e-4;
    auto f = [](double t) { return std::sin(0.7 * t) + 0.3 * t; };
    std::vector<double> drive;
    for (int k = 0; k <= 8000; ++k) drive.push_back(f(k * dt));
    State y{0.4, 0.25 / m};
    auto rhs = [&](const State& q, State& dq, double t) {
        dq[0] = q[1];
        dq[1] = (-m * w * w * q[0] + c * f(t)) / m;
    };
    namespace ode = boost::numeric::odeint;
    double t0 = 0.0;
    for (double t : {0.77, 2.0, 3.9999}) {
        ode::integrate_adaptive(ode::make_controlled(1e-12, 1e-12, ode::runge_kutta_dopri5<State>()), rhs, y, t0, t,
                                1e-3);
        t0 = t;
        EXPECT_NEAR(exact::forced_oscillator_trajectory(m, w, c, 0.4, 0.25, drive, dt, t), y[0], 1e-7) << t;
    }
}
