#include "fbsc/bvp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fbsc::bvp {

using action::ActionModel;
using action::Endpoints;
using action::TrajectoryPair;

void SolverConfig::validate() const {
    if (max_iterations < 0) throw std::invalid_argument("max_iterations must be non-negative");
    if (!(residual_tolerance > 0.0)) throw std::invalid_argument("residual_tolerance must be positive");
    if (!(initial_step > 0.0 && initial_step <= 1.0)) throw std::invalid_argument("initial_step must lie in (0, 1]");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw std::invalid_argument("backtrack must lie in (0, 1)");
    if (max_backtracks < 0) throw std::invalid_argument("max_backtracks must be non-negative");
    if (continuation_stages < 1) throw std::invalid_argument("continuation_stages must be at least 1");
    if (!(homotopy_step > 0.0 && homotopy_step <= 1.0)) throw std::invalid_argument("homotopy_step must lie in (0, 1]");
    if (!(homotopy_min_step > 0.0 && homotopy_min_step <= homotopy_step))
        throw std::invalid_argument("homotopy_min_step must lie in (0, homotopy_step]");
    if (homotopy_stage_iterations < 1) throw std::invalid_argument("homotopy_stage_iterations must be at least 1");
}

namespace {

template <typename Scalar>
double max_norm(const Vector<Scalar>& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

template <typename Scalar>
void set_interior(TrajectoryPair<Scalar>& traj, const Vector<Scalar>& interior) {
    const int n = traj.steps();
    traj.plus.segment(1, n - 1) = interior.head(n - 1);
    traj.minus.segment(1, n - 1) = interior.tail(n - 1);
}

template <typename Scalar>
Vector<Scalar> get_interior(const TrajectoryPair<Scalar>& traj) {
    const int n = traj.steps();
    Vector<Scalar> out(2 * n - 2);
    out.head(n - 1) = traj.plus.segment(1, n - 1);
    out.tail(n - 1) = traj.minus.segment(1, n - 1);
    return out;
}

}  // namespace

LinearizedProblem::LinearizedProblem(const sys::SystemSpec& system,
                                     std::shared_ptr<const action::MemoryKernel> kernel)
    : model_(system.linearized(), kernel, Vector<double>::Zero(kernel->grid().n_steps + 1)) {
    const int n = model_.steps();
    auto zero = TrajectoryPair<double>::zeros(n, model_.dt());
    hessian_ = model_.hessian(zero);
    factorization_ = SymmetricFactorization<double>(hessian_);
    base_ = model_.residual(zero);
    endpoint_response_.resize(2 * n - 2, 4);
    if (singular()) return;
    for (int j = 0; j < 4; ++j) {
        auto unit = zero;
        (j < 2 ? unit.plus : unit.minus)(j % 2 == 0 ? 0 : n) = 1.0;
        endpoint_response_.col(j) = -factorization_.solve(Vector<double>(model_.residual(unit) - base_));
    }
}

bool LinearizedProblem::singular() const {
    return !factorization_.ok() || factorization_.pivot_ratio() < action::kCausticTolerance;
}

Vector<double> LinearizedProblem::drive_response(const Vector<double>& drive) const {
    if (singular()) throw action::CausticError("linearized stationarity system is singular");
    const int n = model_.steps();
    const ActionModel driven(model_.system(), model_.shared_kernel(), drive);
    const Vector<double> h = driven.residual(TrajectoryPair<double>::zeros(n, model_.dt()));
    return -factorization_.solve(h);
}

template <typename Scalar>
TrajectoryPair<Scalar> LinearizedProblem::guess(const Endpoints<Scalar>& ends,
                                                const Vector<double>& drive_response) const {
    if (singular()) throw action::CausticError("linearized stationarity system is singular");
    const int n = model_.steps();
    auto traj = TrajectoryPair<Scalar>::zeros(n, model_.dt());
    traj.plus(0) = ends.plus_initial;
    traj.plus(n) = ends.plus_final;
    traj.minus(0) = ends.minus_initial;
    traj.minus(n) = ends.minus_final;
    const Scalar e[4] = {ends.plus_initial, ends.plus_final, ends.minus_initial, ends.minus_final};
    Vector<Scalar> interior = drive_response.template cast<Scalar>();
    for (int j = 0; j < 4; ++j) {
        if (e[j] == Scalar(0.0)) continue;
        interior += e[j] * endpoint_response_.col(j).template cast<Scalar>();
    }
    set_interior(traj, interior);
    return traj;
}

template TrajectoryPair<double> LinearizedProblem::guess(const Endpoints<double>&, const Vector<double>&) const;
template TrajectoryPair<cplx> LinearizedProblem::guess(const Endpoints<cplx>&, const Vector<double>&) const;

TrajectoryPair<double> harmonic_initial_guess(const Endpoints<double>& ends, const sys::SystemSpec& system,
                                              const bath::BathSpec& bath, const bath::BathPhasePoint& init,
                                              int n_steps, double dt) {
    auto kernel = std::make_shared<action::MemoryKernel>(bath, n_steps, dt, system.counter_term);
    const LinearizedProblem problem(system, kernel);
    if (problem.singular()) throw action::CausticError("linearized stationarity system is singular");
    return problem.guess(ends, problem.drive_response(action::drive_table(bath, init, kernel->grid())));
}

template <typename Scalar>
StationaryResult<Scalar> solve_stationary(const TrajectoryPair<Scalar>& guess, const ActionModel& model,
                                          const SolverConfig& cfg,
                                          const SymmetricFactorization<double>* constant_jacobian) {
    cfg.validate();
    guess.validate();
    StationaryResult<Scalar> result;
    result.trajectory = guess;
    auto& traj = result.trajectory;

    Vector<Scalar> r = model.residual(traj);
    double norm = max_norm(r);
    result.residual_history.push_back(norm);
    result.best_residual = norm;

    SymmetricFactorization<Scalar> last_factorization;

    while (norm > cfg.residual_tolerance && result.iterations < cfg.max_iterations && std::isfinite(norm)) {
        Vector<Scalar> step;
        if (constant_jacobian) {
            if (!constant_jacobian->ok()) {
                result.message = "singular constant Jacobian";
                break;
            }
            step = -constant_jacobian->solve(r);
        } else {
            Matrix<Scalar> jac = model.hessian(traj);
            last_factorization = SymmetricFactorization<Scalar>(jac);
            if (!last_factorization.ok()) {
                // one retry with a small diagonal shift
                const double shift = 1e-8 * std::max(1.0, jac.cwiseAbs().maxCoeff());
                jac.diagonal().array() += shift;
                last_factorization = SymmetricFactorization<Scalar>(jac);
                if (!last_factorization.ok()) {
                    result.message = "singular Jacobian";
                    break;
                }
            }
            step = -last_factorization.solve(r);
        }
        if (!step.allFinite()) {
            result.message = "non-finite Newton step";
            break;
        }

        const Vector<Scalar> x0 = get_interior(traj);
        double alpha = cfg.initial_step;
        bool accepted = false;
        for (int b = 0; b <= cfg.max_backtracks; ++b, alpha *= cfg.backtrack) {
            auto trial = traj;
            set_interior(trial, Vector<Scalar>(x0 + alpha * step));
            Vector<Scalar> trial_r = model.residual(trial);
            const double trial_norm = max_norm(trial_r);
            if (std::isfinite(trial_norm) && trial_norm < norm) {
                traj = std::move(trial);
                r = std::move(trial_r);
                norm = trial_norm;
                accepted = true;
                break;
            }
        }
        ++result.iterations;
        if (!accepted) {
            result.message = "line search failed";
            break;
        }
        result.residual_history.push_back(norm);
        result.best_residual = std::min(result.best_residual, norm);
    }

    result.residual_norm = norm;
    result.converged = std::isfinite(norm) && norm <= cfg.residual_tolerance;
    if (!result.converged && result.message.empty())
        result.message = std::isfinite(norm) ? "iteration limit reached" : "non-finite residual";

    auto& eval = result.action_eval;
    if (constant_jacobian) {
        eval.phi = model.phi(traj);
        eval.gradient = r;
        if (cfg.store_hessian) eval.hessian = model.hessian(traj);
        eval.caustic = !constant_jacobian->ok() || constant_jacobian->pivot_ratio() < action::kCausticTolerance;
        eval.signature = constant_jacobian->inertia(action::kCausticTolerance);
        if (!eval.caustic) eval.log_fresnel = constant_jacobian->log_fresnel();
    } else {
        Matrix<Scalar> h = model.hessian(traj);
        const SymmetricFactorization<Scalar> factorization(h);
        eval = action::make_evaluation(model.phi(traj), r, cfg.store_hessian ? std::move(h) : Matrix<Scalar>(),
                                       factorization);
    }
    return result;
}

template StationaryResult<double> solve_stationary(const TrajectoryPair<double>&, const ActionModel&,
                                                   const SolverConfig&, const SymmetricFactorization<double>*);
template StationaryResult<cplx> solve_stationary(const TrajectoryPair<cplx>&, const ActionModel&, const SolverConfig&,
                                                 const SymmetricFactorization<double>*);

StationaryResult<double> solve_stationary(const TrajectoryPair<double>& guess, const sys::SystemSpec& system,
                                          const bath::BathSpec& bath, const bath::BathPhasePoint& init,
                                          const SolverConfig& cfg) {
    guess.validate();
    const ActionModel model(system, bath, init, guess.steps(), guess.dt);
    return solve_stationary(guess, model, cfg);
}

template <typename Scalar>
StationaryResult<Scalar> solve_with_continuation(const TrajectoryPair<Scalar>& guess, const sys::SystemSpec& system,
                                                 const bath::BathSpec& bath, const bath::BathPhasePoint& init,
                                                 const SolverConfig& cfg) {
    cfg.validate();
    guess.validate();
    const int stages = cfg.continuation_stages;
    StationaryResult<Scalar> result;
    TrajectoryPair<Scalar> current = guess;
    int total_iterations = 0;
    std::vector<double> history;
    for (int k = 1; k <= stages; ++k) {
        const double lambda = static_cast<double>(k) / stages;
        const bath::BathSpec scaled = k == stages ? bath : bath.scaled(lambda);
        const ActionModel model(system, scaled, init, guess.steps(), guess.dt);
        result = solve_stationary(current, model, cfg);
        total_iterations += result.iterations;
        history.insert(history.end(), result.residual_history.begin(), result.residual_history.end());
        if (!result.converged) {
            result.failed_lambda = lambda;
            result.message = "stage lambda=" + std::to_string(lambda) + ": " + result.message;
            break;
        }
        current = result.trajectory;
    }
    result.iterations = total_iterations;
    result.residual_history = std::move(history);
    return result;
}

template StationaryResult<double> solve_with_continuation(const TrajectoryPair<double>&, const sys::SystemSpec&,
                                                          const bath::BathSpec&, const bath::BathPhasePoint&,
                                                          const SolverConfig&);
template StationaryResult<cplx> solve_with_continuation(const TrajectoryPair<cplx>&, const sys::SystemSpec&,
                                                        const bath::BathSpec&, const bath::BathPhasePoint&,
                                                        const SolverConfig&);

template <typename Scalar>
StationaryResult<Scalar> solve_with_homotopy(const TrajectoryPair<Scalar>& guess, const ActionModel& model,
                                             const SolverConfig& cfg) {
    cfg.validate();
    guess.validate();
    SolverConfig stage_cfg = cfg;
    stage_cfg.store_hessian = false;
    stage_cfg.max_iterations = std::min(cfg.max_iterations, cfg.homotopy_stage_iterations);
    SolverConfig final_cfg = stage_cfg;
    final_cfg.store_hessian = cfg.store_hessian;

    TrajectoryPair<Scalar> current = guess;
    TrajectoryPair<Scalar> previous = guess;
    double lambda = 0.0;
    double last_step = 0.0;
    double step = cfg.homotopy_step;
    int total_iterations = 0;
    std::vector<double> history;
    StationaryResult<Scalar> result;
    while (true) {
        const double target = std::min(1.0, lambda + step);
        // secant predictor along the solution branch
        TrajectoryPair<Scalar> start = current;
        if (last_step > 0.0) {
            const double ratio = (target - lambda) / last_step;
            start.plus += ratio * (current.plus - previous.plus);
            start.minus += ratio * (current.minus - previous.minus);
        }
        const bool last = target == 1.0;
        result = solve_stationary(start, model.with_nonlinearity(target), last ? final_cfg : stage_cfg);
        total_iterations += result.iterations;
        history.insert(history.end(), result.residual_history.begin(), result.residual_history.end());
        if (result.converged) {
            previous = current;
            current = result.trajectory;
            last_step = target - lambda;
            lambda = target;
            if (last) break;
            if (result.iterations <= stage_cfg.max_iterations / 2) step = std::min(2.0 * step, 1.0);
            continue;
        }
        step *= 0.5;
        if (step < cfg.homotopy_min_step) {
            result.failed_lambda = target;
            result.message = "homotopy stalled at lambda=" + std::to_string(target) + ": " + result.message;
            break;
        }
    }
    result.iterations = total_iterations;
    result.residual_history = std::move(history);
    return result;
}

template StationaryResult<double> solve_with_homotopy(const TrajectoryPair<double>&, const ActionModel&,
                                                      const SolverConfig&);
template StationaryResult<cplx> solve_with_homotopy(const TrajectoryPair<cplx>&, const ActionModel&,
                                                    const SolverConfig&);

template <typename Scalar>
SolveRecord make_record(const StationaryResult<Scalar>& result) {
    SolveRecord record;
    const auto ends = action::endpoints_of(result.trajectory);
    record.endpoints = {cplx(ends.plus_initial), cplx(ends.plus_final), cplx(ends.minus_initial),
                        cplx(ends.minus_final)};
    record.iterations = result.iterations;
    record.residual = result.residual_norm;
    record.converged = result.converged;
    record.time = result.trajectory.duration();
    return record;
}

template SolveRecord make_record(const StationaryResult<double>&);
template SolveRecord make_record(const StationaryResult<cplx>&);

void JsonLinesLog::write(const SolveRecord& record) {
    nlohmann::json endpoints = nlohmann::json::array();
    for (const auto& e : record.endpoints) endpoints.push_back({e.real(), e.imag()});
    const nlohmann::json line = {{"t", record.time},           {"sample", record.sample},
                                 {"endpoints", endpoints},     {"iterations", record.iterations},
                                 {"residual", record.residual}, {"converged", record.converged}};
    const std::string text = line.dump();
    std::lock_guard lock(mutex_);
    out_ << text << '\n';
}

}  // namespace fbsc::bvp
