#pragma once

#include <array>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <vector>

#include "fbsc/action.hpp"

namespace fbsc::bvp {

struct SolverConfig {
    int max_iterations{50};
    // absolute max-norm of the residual
    double residual_tolerance{1e-10};
    double initial_step{1.0};
    double backtrack{0.5};
    int max_backtracks{30};
    int continuation_stages{1};
    // Nonlinearity homotopy: first step in lambda, smallest step before giving
    // up, and the Newton budget of each intermediate stage.
    double homotopy_step{0.25};
    double homotopy_min_step{1.0 / 1024.0};
    int homotopy_stage_iterations{8};
    // Keep the interior Hessian in the returned evaluation.
    bool store_hessian{true};

    void validate() const;
};

template <typename Scalar>
struct StationaryResult {
    action::TrajectoryPair<Scalar> trajectory;
    double residual_norm{std::numeric_limits<double>::infinity()};
    int iterations{0};
    bool converged{false};
    action::ActionEvaluation<Scalar> action_eval;
    // residual max-norm after each accepted step, starting with the guess
    std::vector<double> residual_history;
    double best_residual{std::numeric_limits<double>::infinity()};
    // coupling scale of the failing continuation stage, NaN otherwise
    double failed_lambda{std::numeric_limits<double>::quiet_NaN()};
    std::string message;
};

// Stationarity problem of the model with V0 expanded to second order and f to
// first order about the potential minimum. Its residual is affine in the
// path, so the stationary pair follows from one linear solve.
class LinearizedProblem {
public:
    LinearizedProblem(const sys::SystemSpec& system, std::shared_ptr<const action::MemoryKernel> kernel);

    const sys::SystemSpec& system() const noexcept { return model_.system(); }
    int steps() const noexcept { return model_.steps(); }
    double dt() const noexcept { return model_.dt(); }
    // Interior Hessian of the linearized model; independent of the path.
    const Matrix<double>& hessian() const noexcept { return hessian_; }
    const SymmetricFactorization<double>& factorization() const noexcept { return factorization_; }
    bool singular() const;

    // Interior response to a bath drive with all endpoints at zero.
    Vector<double> drive_response(const Vector<double>& drive) const;

    template <typename Scalar>
    action::TrajectoryPair<Scalar> guess(const action::Endpoints<Scalar>& ends,
                                         const Vector<double>& drive_response) const;

private:
    action::ActionModel model_;
    Matrix<double> hessian_;
    SymmetricFactorization<double> factorization_;
    Vector<double> base_;               // residual at the zero path with zero drive
    Matrix<double> endpoint_response_;  // columns for s0+, sN+, s0-, sN-
};

// Throws action::CausticError when the linearized system is singular.
action::TrajectoryPair<double> harmonic_initial_guess(const action::Endpoints<double>& ends,
                                                      const sys::SystemSpec& system, const bath::BathSpec& bath,
                                                      const bath::BathPhasePoint& init, int n_steps, double dt);

// Damped Newton on the interior residual with a backtracking line search on
// its max-norm. With `constant_jacobian` the Jacobian is not re-evaluated and
// the returned evaluation takes its signature and Fresnel factor from it.
template <typename Scalar>
StationaryResult<Scalar> solve_stationary(const action::TrajectoryPair<Scalar>& guess,
                                          const action::ActionModel& model, const SolverConfig& cfg,
                                          const SymmetricFactorization<double>* constant_jacobian = nullptr);

StationaryResult<double> solve_stationary(const action::TrajectoryPair<double>& guess,
                                          const sys::SystemSpec& system, const bath::BathSpec& bath,
                                          const bath::BathPhasePoint& init, const SolverConfig& cfg);

// Couplings scaled by k/K for k = 1..K, each stage warm-started from the last.
template <typename Scalar>
StationaryResult<Scalar> solve_with_continuation(const action::TrajectoryPair<Scalar>& guess,
                                                 const sys::SystemSpec& system, const bath::BathSpec& bath,
                                                 const bath::BathPhasePoint& init, const SolverConfig& cfg);

// Path following in the nonlinearity of V0 and f (ActionModel::with_nonlinearity)
// from lambda = 0, where `guess` must be the root of the linearized model, to
// lambda = 1. Steps adapt: halved on a failed stage, grown after an easy one.
template <typename Scalar>
StationaryResult<Scalar> solve_with_homotopy(const action::TrajectoryPair<Scalar>& guess,
                                             const action::ActionModel& model, const SolverConfig& cfg);

struct SolveRecord {
    std::array<cplx, 4> endpoints{};
    int iterations{0};
    double residual{0.0};
    bool converged{false};
    double time{0.0};
    std::size_t sample{0};
};

template <typename Scalar>
SolveRecord make_record(const StationaryResult<Scalar>& result);

// One JSON object per line. Safe to share between threads.
class JsonLinesLog {
public:
    explicit JsonLinesLog(std::ostream& out) : out_(out) {}
    void write(const SolveRecord& record);

private:
    std::ostream& out_;
    std::mutex mutex_;
};

}  // namespace fbsc::bvp
