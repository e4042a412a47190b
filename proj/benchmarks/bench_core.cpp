#include <cmath>
#include <numbers>
#include <random>

#include <benchmark/benchmark.h>

#include "fbsc/action.hpp"
#include "fbsc/bath.hpp"
#include "fbsc/bvp.hpp"
#include "fbsc/factorization.hpp"
#include "fbsc/propagator.hpp"

using namespace fbsc;

namespace {

struct Model {
    sys::SystemSpec system;
    bath::BathSpec bath;
};

Model harmonic(std::size_t modes) {
    sys::SystemSpec s;
    return {s, bath::discretize_exp_cutoff(modes, 30.0, bath::SpectralDensity::exp_cutoff(2.0, 6.0), 1.0)};
}

Model morse(std::size_t modes) {
    sys::SystemSpec s;
    s.mass = 1e5;
    s.potential = sys::Morse{0.018, 2.0};
    s.coupling = sys::MorseCoupling{2.0};
    s.counter_term = false;
    const double omega = sys::morse_frequency(0.018, 2.0, 1e5);
    return {s, bath::discretize_linear_ohmic(modes, 2.0 * omega, 1.0 / 2067.068666, 1e4, 1e5)};
}

action::TrajectoryPair<double> wavy(int n, double dt, double scale) {
    auto traj = action::TrajectoryPair<double>::zeros(n, dt);
    for (int k = 0; k <= n; ++k) {
        const double x = static_cast<double>(k) / n;
        traj.plus(k) = scale * (0.3 + std::sin(2.0 * x));
        traj.minus(k) = scale * (0.1 + x - 0.4 * x * x);
    }
    return traj;
}

void BM_Phi(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto m = harmonic(60);
    const action::ActionModel model(m.system, m.bath, bath::sample_wigner(m.bath, 1.0, 1, 0), n, 0.1);
    const auto traj = wavy(n, 0.1, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(model.phi(traj));
}
BENCHMARK(BM_Phi)->RangeMultiplier(2)->Range(16, 128);

void BM_Residual(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto m = harmonic(60);
    const action::ActionModel model(m.system, m.bath, bath::sample_wigner(m.bath, 1.0, 1, 0), n, 0.1);
    const auto traj = wavy(n, 0.1, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(model.residual(traj));
}
BENCHMARK(BM_Residual)->RangeMultiplier(2)->Range(16, 128);

void BM_HessianAndFactor(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto m = morse(20);
    const double dt = 2.0 * std::numbers::pi / m.system.harmonic_frequency() / 32.0;
    const action::ActionModel model(m.system, m.bath, bath::zero_phase_point(m.bath), n, dt);
    const auto traj = wavy(n, dt, 0.05);
    for (auto _ : state) benchmark::DoNotOptimize(model.evaluate(traj).log_fresnel);
}
BENCHMARK(BM_HessianAndFactor)->RangeMultiplier(2)->Range(16, 128);

void BM_LinearSolve(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto m = harmonic(60);
    const auto init = bath::sample_wigner(m.bath, 1.0, 3, 0);
    const action::Endpoints<double> ends{1.0, -0.5, 0.8, 0.2};
    for (auto _ : state) {
        const auto guess = bvp::harmonic_initial_guess(ends, m.system, m.bath, init, n, 0.1);
        benchmark::DoNotOptimize(bvp::solve_stationary(guess, m.system, m.bath, init, {}).residual_norm);
    }
}
BENCHMARK(BM_LinearSolve)->RangeMultiplier(2)->Range(16, 64);

void BM_MorseAmplitude(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto m = morse(20);
    const double sbar = 0.09129;
    const double t = 2.0 * std::numbers::pi / m.system.harmonic_frequency() / 4.0;
    const auto init = bath::equilibrium_placement(m.bath, m.system, 2.0 * sbar);
    const action::Endpoints<double> ends{2.0 * sbar, 1.5 * sbar, 1.8 * sbar, 1.5 * sbar};
    for (auto _ : state)
        benchmark::DoNotOptimize(prop::qsc_amplitude(ends, init, m.system, m.bath, n, t / n).log_value);
}
BENCHMARK(BM_MorseAmplitude)->Arg(16)->Arg(32);

void BM_ExpectationHarmonic(benchmark::State& state) {
    const auto m = harmonic(60);
    prop::PropagatorConfig cfg;
    cfg.dt_max = 0.1;
    cfg.max_steps = 64;
    cfg.quadrature_nodes = static_cast<int>(state.range(0));
    cfg.samples = 2;
    const auto init = prop::InitialSystemState::from_width(1.0, 1.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(prop::expectation_position(init, m.system, m.bath, {3.0}, cfg).values[0]);
}
BENCHMARK(BM_ExpectationHarmonic)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_BunchKaufman(benchmark::State& state) {
    const auto n = static_cast<Eigen::Index>(state.range(0));
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    Matrix<double> a = Matrix<double>::NullaryExpr(n, n, [&] { return g(rng); });
    a = (a + a.transpose()).eval();
    for (auto _ : state) benchmark::DoNotOptimize(SymmetricFactorization<double>(a).log_fresnel());
}
BENCHMARK(BM_BunchKaufman)->RangeMultiplier(2)->Range(32, 256);

}  // namespace

BENCHMARK_MAIN();
