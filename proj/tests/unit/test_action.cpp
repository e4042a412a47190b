#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fbsc/action.hpp"
#include "fbsc/factorization.hpp"
#include "models.hpp"

using namespace fbsc;
using action::ActionModel;
using action::TrajectoryPair;

namespace {

double rel_max(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

Eigen::VectorXd fd_gradient(const ActionModel& model, const TrajectoryPair<double>& traj, double h) {
    const int n = traj.steps();
    Eigen::VectorXd g(2 * n - 2);
    for (int k = 1; k < n; ++k) {
        for (int branch = 0; branch < 2; ++branch) {
            auto up = traj, down = traj;
            (branch == 0 ? up.plus : up.minus)(k) += h;
            (branch == 0 ? down.plus : down.minus)(k) -= h;
            g(branch * (n - 1) + k - 1) = (model.phi(up) - model.phi(down)) / (2.0 * h);
        }
    }
    return g;
}

Eigen::MatrixXd fd_jacobian(const ActionModel& model, const TrajectoryPair<double>& traj, double h) {
    const int n = traj.steps();
    Eigen::MatrixXd jac(2 * n - 2, 2 * n - 2);
    for (int k = 1; k < n; ++k) {
        for (int branch = 0; branch < 2; ++branch) {
            auto up = traj, down = traj;
            (branch == 0 ? up.plus : up.minus)(k) += h;
            (branch == 0 ? down.plus : down.minus)(k) -= h;
            jac.col(branch * (n - 1) + k - 1) = (model.residual(up) - model.residual(down)) / (2.0 * h);
        }
    }
    return jac;
}

struct Case {
    testkit::Model model;
    double dt;
    double scale;
};

std::vector<Case> cases() {
    return {{testkit::harmonic_model(), 0.25, 1.0}, {testkit::morse_model(), 200.0, 0.05}};
}

}  // namespace

TEST(Action, AntisymmetricUnderBranchSwap) {
    std::mt19937_64 rng(11);
    for (const auto& c : cases()) {
        for (int rep = 0; rep < 5; ++rep) {
            const auto traj = testkit::random_paths(12, c.dt, c.scale, rng);
            const auto init = testkit::random_phase_point(c.model.bath, rng);
            const ActionModel model(c.model.system, c.model.bath, init, 12, c.dt);
            TrajectoryPair<double> swapped{traj.dt, traj.minus, traj.plus};
            EXPECT_EQ(model.phi(traj), -model.phi(swapped));
        }
    }
}

TEST(Action, VanishesOnIdenticalBranches) {
    std::mt19937_64 rng(12);
    for (const auto& c : cases()) {
        auto traj = testkit::random_paths(10, c.dt, c.scale, rng);
        traj.minus = traj.plus;
        const auto init = testkit::random_phase_point(c.model.bath, rng);
        EXPECT_EQ(action::action_phi(traj, c.model.system, c.model.bath, init), 0.0);
    }
}

TEST(Action, FreeParticleStraightLine) {
    const auto m = testkit::free_model();
    const int n = 10;
    const double dt = 0.3, length = 1.7;
    auto traj = TrajectoryPair<double>::zeros(n, dt);
    for (int k = 0; k <= n; ++k) traj.plus(k) = length * k / n;
    const double phi = action::action_phi(traj, m.system, m.bath, bath::zero_phase_point(m.bath));
    EXPECT_NEAR(phi, m.system.mass * length * length / (2.0 * n * dt), 1e-13);
}

TEST(Action, ResidualVanishesOnZeroPaths) {
    for (const auto& c : cases()) {
        const auto traj = TrajectoryPair<double>::zeros(8, c.dt);
        const auto r = action::residual(traj, c.model.system, c.model.bath, bath::zero_phase_point(c.model.bath));
        EXPECT_EQ(r.cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(Action, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(13);
    for (const auto& c : cases()) {
        for (int rep = 0; rep < 5; ++rep) {
            const auto traj = testkit::random_paths(12, c.dt, c.scale, rng);
            const auto init = testkit::random_phase_point(c.model.bath, rng);
            const ActionModel model(c.model.system, c.model.bath, init, 12, c.dt);
            EXPECT_LT(rel_max(model.residual(traj), fd_gradient(model, traj, 1e-5 * c.scale)), 1e-6);
        }
    }
}

TEST(Action, HessianMatchesFiniteDifferences) {
    std::mt19937_64 rng(14);
    for (const auto& c : cases()) {
        for (int rep = 0; rep < 5; ++rep) {
            const auto traj = testkit::random_paths(12, c.dt, c.scale, rng);
            const auto init = testkit::random_phase_point(c.model.bath, rng);
            const ActionModel model(c.model.system, c.model.bath, init, 12, c.dt);
            const Eigen::MatrixXd h = model.hessian(traj);
            EXPECT_LT(rel_max(h, fd_jacobian(model, traj, 1e-5 * c.scale)), 1e-6);
            EXPECT_EQ((h - h.transpose()).cwiseAbs().maxCoeff(), 0.0);
            for (int k = 0; k < 11; ++k) EXPECT_EQ(h(k, 11 + k), 0.0);
        }
    }
}

TEST(Action, FullGradientIncludesEndpoints) {
    std::mt19937_64 rng(15);
    const auto c = cases().front();
    const auto traj = testkit::random_paths(6, c.dt, c.scale, rng);
    const auto init = testkit::random_phase_point(c.model.bath, rng);
    const ActionModel model(c.model.system, c.model.bath, init, 6, c.dt);
    const auto g = model.full_gradient(traj);
    const double h = 1e-5;
    auto up = traj, down = traj;
    up.minus(6) += h;
    down.minus(6) -= h;
    EXPECT_NEAR(g(13), (model.phi(up) - model.phi(down)) / (2 * h), 1e-7);
}

TEST(Action, ComplexEvaluationMatchesReal) {
    std::mt19937_64 rng(16);
    for (const auto& c : cases()) {
        const auto traj = testkit::random_paths(9, c.dt, c.scale, rng);
        const auto init = testkit::random_phase_point(c.model.bath, rng);
        const ActionModel model(c.model.system, c.model.bath, init, 9, c.dt);
        const TrajectoryPair<cplx> ctraj{traj.dt, traj.plus.cast<cplx>(), traj.minus.cast<cplx>()};
        EXPECT_NEAR(std::abs(model.phi(ctraj) - model.phi(traj)), 0.0, 1e-12 * (1 + std::abs(model.phi(traj))));
        EXPECT_LT((model.hessian(ctraj) - model.hessian(traj).cast<cplx>()).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Action, UncoupledHessianIsTridiagonal) {
    const auto m = testkit::free_model();
    const int n = 9;
    std::mt19937_64 rng(17);
    const auto traj = testkit::random_paths(n, 0.2, 1.0, rng);
    const auto eval = action::hessian(traj, m.system, m.bath, bath::zero_phase_point(m.bath));
    for (int i = 0; i < 2 * n - 2; ++i)
        for (int j = 0; j < 2 * n - 2; ++j) {
            const bool same_block = (i < n - 1) == (j < n - 1);
            if (!same_block || std::abs(i - j) > 1) EXPECT_EQ(eval.hessian(i, j), 0.0);
        }
}

TEST(Action, CoupledHessianHasLongRangeMemory) {
    std::mt19937_64 rng(18);
    const auto c = cases().front();
    const auto traj = testkit::random_paths(12, c.dt, c.scale, rng);
    const auto eval = action::hessian(traj, c.model.system, c.model.bath, testkit::random_phase_point(c.model.bath, rng));
    EXPECT_NE(eval.hessian(0, 10), 0.0);
    EXPECT_NE(eval.hessian(0, 11 + 10), 0.0);
}

TEST(Action, FreeParticleDeterminant) {
    const auto m = testkit::free_model();
    for (int n : {4, 8, 16, 32}) {
        const double dt = 0.37;
        const auto traj = TrajectoryPair<double>::zeros(n, dt);
        const auto eval = action::hessian(traj, m.system, m.bath, bath::zero_phase_point(m.bath));
        const Eigen::MatrixXd block = eval.hessian.topLeftCorner(n - 1, n - 1);
        const double expected = std::log(n) + (n - 1) * std::log(m.system.mass / dt);
        const SymmetricFactorization<double> f(block);
        EXPECT_NEAR(f.log_abs_det(), expected, 1e-10 * std::abs(expected));
        EXPECT_EQ(eval.signature.positive, n - 1);
        EXPECT_EQ(eval.signature.negative, n - 1);

        // one branch per factor sqrt(M / (2 pi hbar t))
        const double t = n * dt;
        const cplx pre = action::prefactor(eval, m.system, n, dt);
        EXPECT_NEAR(std::abs(pre), m.system.mass / (2.0 * std::numbers::pi * t), 1e-10);
        EXPECT_NEAR(std::arg(pre), 0.0, 1e-12);
    }
}

TEST(Action, CausticFlaggedAndRejected) {
    action::ActionEvaluation<double> eval;
    eval.caustic = true;
    EXPECT_THROW(action::log_prefactor(eval, testkit::free_model().system, 4, 0.1), action::CausticError);
}

TEST(ContinuumAction, ConstantPathsSingleModeClosedForm) {
    sys::SystemSpec s;
    s.potential = sys::Quadratic{0.0, 0.0, 0.0};
    s.counter_term = true;
    const double m = 1.3, w = 0.7, c = 0.9, x0 = 0.4, p0 = -0.6;
    const bath::BathSpec bath({m}, {w}, {c});
    const bath::BathPhasePoint init{{x0}, {p0}};
    const double sp = 0.8, sm = -0.3, t = 2.9;
    const action::SmoothPath plus{[&](double) { return sp; }, [](double) { return 0.0; }};
    const action::SmoothPath minus{[&](double) { return sm; }, [](double) { return 0.0; }};
    // elementary integrals of the sin/cos factors for constant f
    const double delta = sp - sm, sigma = sp + sm;
    const double drive = c * x0 * std::sin(w * t) / w + c * p0 / (m * w) * (1.0 - std::cos(w * t)) / w;
    const double memory = c * c / (2.0 * m * w) * (t - std::sin(w * t) / w) / w;
    const double counter = c * c / (2.0 * m * w * w) * t;
    const double expected = delta * drive + delta * sigma * memory - counter * delta * sigma;
    EXPECT_NEAR(action::action_phi_continuum(plus, minus, t, s, bath, init), expected, 1e-12);
}

TEST(ContinuumAction, SecondOrderAgreementOnSmoothPaths) {
    for (const auto& c : cases()) {
        const double t = 12 * c.dt;
        const double sc = c.scale;
        const action::SmoothPath plus{[&](double x) { return sc * (0.3 + std::sin(1.3 * x / t)); },
                                      [&](double x) { return sc * 1.3 / t * std::cos(1.3 * x / t); }};
        const action::SmoothPath minus{[&](double x) { return sc * (0.1 + x / t - 0.5 * x * x / (t * t)); },
                                       [&](double x) { return sc * (1.0 / t - x / (t * t)); }};
        std::mt19937_64 rng(19);
        const auto init = testkit::random_phase_point(c.model.bath, rng);
        const double exact = action::action_phi_continuum(plus, minus, t, c.model.system, c.model.bath, init, {256, 10});
        double previous = 0.0;
        for (int n : {16, 32, 64}) {
            auto traj = TrajectoryPair<double>::zeros(n, t / n);
            for (int k = 0; k <= n; ++k) {
                traj.plus(k) = plus.value(k * t / n);
                traj.minus(k) = minus.value(k * t / n);
            }
            const double err = std::abs(action::action_phi(traj, c.model.system, c.model.bath, init) - exact);
            if (previous > 0.0) {
                EXPECT_NEAR(previous / err, 4.0, 0.5) << "N=" << n;
            }
            previous = err;
        }
    }
}

TEST(ContinuumAction, SplineOverloadVanishesOnIdenticalBranches) {
    std::mt19937_64 rng(20);
    const auto c = cases().front();
    auto traj = testkit::random_paths(12, c.dt, c.scale, rng);
    traj.minus = traj.plus;
    EXPECT_NEAR(action::action_phi_continuum(traj, c.model.system, c.model.bath,
                                             testkit::random_phase_point(c.model.bath, rng)),
                0.0, 1e-12);
}
