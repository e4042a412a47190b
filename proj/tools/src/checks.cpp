#include "checks.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fbsc/action.hpp"
#include "fbsc/factorization.hpp"

namespace fbsc::cli {

using action::ActionModel;
using action::TrajectoryPair;

namespace {

TrajectoryPair<double> smooth_paths(int n, double dt, double center, double scale, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto traj = TrajectoryPair<double>::zeros(n, dt);
    double c[2][4];
    for (auto& row : c)
        for (auto& v : row) v = u(rng);
    for (int k = 0; k <= n; ++k) {
        const double x = static_cast<double>(k) / n;
        traj.plus(k) = center + scale * (c[0][0] + c[0][1] * x + c[0][2] * std::sin(3.0 * x) + c[0][3] * x * x);
        traj.minus(k) = center + scale * (c[1][0] + c[1][1] * x + c[1][2] * std::cos(2.0 * x) + c[1][3] * x * x);
    }
    return traj;
}

double rel_max(const Matrix<double>& a, const Matrix<double>& b) {
    const double norm = std::max(b.cwiseAbs().maxCoeff(), 1e-300);
    return (a - b).cwiseAbs().maxCoeff() / norm;
}

TrajectoryPair<double> nudged(const TrajectoryPair<double>& traj, int index, double h) {
    auto out = traj;
    const int n = traj.steps();
    if (index <= n)
        out.plus(index) += h;
    else
        out.minus(index - n - 1) += h;
    return out;
}

}  // namespace

std::vector<CheckRow> run_checks(const RunConfig& config, int n_steps, int repeats) {
    const auto bath = config.build_bath();
    const double dt = config.numerics.dt_max;
    const double scale = config.state.sigma;
    const double h = 1e-5 * scale;
    std::mt19937_64 rng(config.numerics.seed);

    double grad_err = 0.0, hess_err = 0.0, endpoint_err = 0.0, antisym_err = 0.0, cross_diag = 0.0, asym = 0.0;
    for (int rep = 0; rep < repeats; ++rep) {
        const auto init = config.numerics.bath_init == prop::BathInit::Equilibrium
                              ? bath::equilibrium_placement(bath, config.system, config.numerics.equilibrium_position)
                              : bath::sample_wigner(bath, config.numerics.beta, config.numerics.seed,
                                                    static_cast<std::uint64_t>(rep));
        const ActionModel model(config.system, bath, init, n_steps, dt);
        const auto traj = smooth_paths(n_steps, dt, config.state.center, scale, rng);
        const int n = n_steps;

        const Vector<double> full = model.full_gradient(traj);
        Vector<double> fd_full(2 * n + 2);
        for (int i = 0; i < 2 * n + 2; ++i)
            fd_full(i) = (model.phi(nudged(traj, i, h)) - model.phi(nudged(traj, i, -h))) / (2.0 * h);
        Vector<double> fd_interior(2 * n - 2);
        fd_interior << fd_full.segment(1, n - 1), fd_full.segment(n + 2, n - 1);
        grad_err = std::max(grad_err, rel_max(model.residual(traj), fd_interior));
        endpoint_err = std::max(endpoint_err, rel_max(full, fd_full));

        const Matrix<double> hess = model.hessian(traj);
        Matrix<double> fd_hess(2 * n - 2, 2 * n - 2);
        for (int j = 0; j < 2 * n - 2; ++j) {
            const int index = j < n - 1 ? j + 1 : j - (n - 1) + n + 2;
            fd_hess.col(j) =
                (model.residual(nudged(traj, index, h)) - model.residual(nudged(traj, index, -h))) / (2.0 * h);
        }
        hess_err = std::max(hess_err, rel_max(hess, fd_hess));
        asym = std::max(asym, (hess - hess.transpose()).cwiseAbs().maxCoeff());
        for (int k = 0; k < n - 1; ++k) cross_diag = std::max(cross_diag, std::abs(hess(k, n - 1 + k)));

        TrajectoryPair<double> swapped{traj.dt, traj.minus, traj.plus};
        const double phi = model.phi(traj);
        antisym_err = std::max(antisym_err, std::abs(model.phi(swapped) + phi) / std::max(std::abs(phi), 1e-300));
    }

    // free particle with the configured mass
    sys::SystemSpec free;
    free.mass = config.system.mass;
    free.potential = sys::Quadratic{0.0, 0.0, 0.0};
    free.counter_term = false;
    const bath::BathSpec silent({1.0}, {1.0}, {0.0});
    double det_err = 0.0;
    for (int n : {4, 8, 16, 32}) {
        const auto zero = TrajectoryPair<double>::zeros(n, dt);
        const ActionModel model(free, silent, bath::zero_phase_point(silent), n, dt);
        const Matrix<double> block = model.hessian(zero).topLeftCorner(n - 1, n - 1);
        const double expected = std::log(static_cast<double>(n)) + (n - 1) * std::log(free.mass / dt);
        const SymmetricFactorization<double> f(block);
        det_err = std::max(det_err, std::abs(f.log_abs_det() - expected) / std::abs(expected));
    }

    auto row = [](std::string name, double value, double tol) {
        return CheckRow{std::move(name), value, tol, value <= tol};
    };
    return {
        row("residual vs finite-difference gradient", grad_err, 1e-6),
        row("Hessian vs finite-difference residual", hess_err, 1e-6),
        row("full gradient incl. endpoints", endpoint_err, 1e-6),
        row("Hessian symmetry", asym, 0.0),
        row("(+-) diagonal entries zero", cross_diag, 0.0),
        row("branch-swap antisymmetry", antisym_err, 1e-12),
        row("free-particle log det", det_err, 1e-10),
    };
}

}  // namespace fbsc::cli
