#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "fbsc/bath.hpp"
#include "fbsc/factorization.hpp"
#include "fbsc/system.hpp"
#include "fbsc/types.hpp"

namespace fbsc::action {

// Forward (plus) and backward (minus) paths on a uniform grid, indices 0..N.
// Entries 0 and N are boundary data.
template <typename Scalar>
struct TrajectoryPair {
    double dt{0.0};
    Vector<Scalar> plus;
    Vector<Scalar> minus;

    int steps() const noexcept { return static_cast<int>(plus.size()) - 1; }
    double duration() const noexcept { return dt * steps(); }
    // Throws std::invalid_argument unless N >= 2, dt > 0 and lengths agree.
    void validate() const;

    static TrajectoryPair zeros(int n_steps, double dt);
};

template <typename Scalar>
struct Endpoints {
    Scalar plus_initial{};
    Scalar plus_final{};
    Scalar minus_initial{};
    Scalar minus_final{};
};

template <typename Scalar>
Endpoints<Scalar> endpoints_of(const TrajectoryPair<Scalar>& traj) {
    const int n = traj.steps();
    return {traj.plus(0), traj.plus(n), traj.minus(0), traj.minus(n)};
}

// Straight lines between the endpoints.
template <typename Scalar>
TrajectoryPair<Scalar> linear_paths(const Endpoints<Scalar>& ends, int n_steps, double dt) {
    auto traj = TrajectoryPair<Scalar>::zeros(n_steps, dt);
    for (int k = 0; k <= n_steps; ++k) {
        const double w = static_cast<double>(k) / n_steps;
        traj.plus(k) = (1.0 - w) * ends.plus_initial + w * ends.plus_final;
        traj.minus(k) = (1.0 - w) * ends.minus_initial + w * ends.minus_final;
    }
    return traj;
}

// Segment k holds s_k. The first and last segments are half steps.
struct TimeGrid {
    int n_steps{0};
    double dt{0.0};
    std::vector<double> length;
    std::vector<double> midpoint;
};
TimeGrid make_time_grid(int n_steps, double dt);

// Lower-triangular matrix K with the bath memory and counter terms so that
// the influence part of the action is (F+ - F-)^T K (F+ + F-), F = f(s).
class MemoryKernel {
public:
    MemoryKernel(const bath::BathSpec& bath, int n_steps, double dt, bool counter_term);

    const TimeGrid& grid() const noexcept { return grid_; }
    const Matrix<double>& matrix() const noexcept { return k_; }
    double reorganization() const noexcept { return kappa_; }

private:
    TimeGrid grid_;
    Matrix<double> k_;
    double kappa_{0.0};
};

// Segment-integrated bath drive from the initial phase point.
Vector<double> drive_table(const bath::BathSpec& bath, const bath::BathPhasePoint& init, const TimeGrid& grid);

template <typename Scalar>
struct ActionEvaluation {
    Scalar phi{};
    Vector<Scalar> gradient;
    Matrix<Scalar> hessian;
    Inertia signature;
    cplx log_fresnel{};
    bool caustic{false};
};

struct PropagatorAmplitude {
    cplx log_value{};
    bool caustic{false};
    bool converged{true};

    bool usable() const noexcept { return converged && !caustic; }
    cplx value() const { return std::exp(log_value); }
};

class CausticError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Pivot ratio below which the fluctuation Hessian is treated as singular.
inline constexpr double kCausticTolerance = 1e-10;

// Discretized forward-backward phase for one system, bath and bath initial
// condition at fixed N and dt.
class ActionModel {
public:
    ActionModel(const sys::SystemSpec& system, const bath::BathSpec& bath, const bath::BathPhasePoint& init,
                int n_steps, double dt);
    // Shares a kernel across bath samples.
    ActionModel(const sys::SystemSpec& system, std::shared_ptr<const MemoryKernel> kernel,
                Vector<double> drive);

    int steps() const noexcept { return kernel_->grid().n_steps; }
    double dt() const noexcept { return kernel_->grid().dt; }
    const sys::SystemSpec& system() const noexcept { return system_; }
    const MemoryKernel& kernel() const noexcept { return *kernel_; }
    const std::shared_ptr<const MemoryKernel>& shared_kernel() const noexcept { return kernel_; }
    const Vector<double>& drive() const noexcept { return drive_; }

    // Same model with V0 and f replaced by lin + lambda (full - lin), where lin
    // is the expansion about the potential minimum. lambda = 1 is the model itself.
    ActionModel with_nonlinearity(double lambda) const;
    double nonlinearity() const noexcept { return lambda_; }

    template <typename Scalar>
    Scalar phi(const TrajectoryPair<Scalar>& traj) const;

    // Derivative with respect to all 2N+2 points, plus 0..N then minus 0..N.
    template <typename Scalar>
    Vector<Scalar> full_gradient(const TrajectoryPair<Scalar>& traj) const;

    // Interior components: plus 1..N-1 then minus 1..N-1.
    template <typename Scalar>
    Vector<Scalar> residual(const TrajectoryPair<Scalar>& traj) const;

    template <typename Scalar>
    Matrix<Scalar> full_hessian(const TrajectoryPair<Scalar>& traj) const;

    template <typename Scalar>
    Matrix<Scalar> hessian(const TrajectoryPair<Scalar>& traj) const;

    template <typename Scalar>
    ActionEvaluation<Scalar> evaluate(const TrajectoryPair<Scalar>& traj) const;

private:
    template <typename Scalar>
    struct PointData;
    template <typename Scalar>
    PointData<Scalar> point_data(const TrajectoryPair<Scalar>& traj) const;
    template <typename Scalar>
    Matrix<Scalar> assemble_hessian(const TrajectoryPair<Scalar>& traj, bool interior) const;

    sys::SystemSpec system_;
    sys::SystemSpec linear_;
    double lambda_{1.0};
    std::shared_ptr<const MemoryKernel> kernel_;
    Vector<double> drive_;
};

// Evaluation assembled from an existing factorization of its Hessian.
template <typename Scalar>
ActionEvaluation<Scalar> make_evaluation(Scalar phi, Vector<Scalar> gradient, Matrix<Scalar> hessian,
                                         const SymmetricFactorization<Scalar>& factorization);

double action_phi(const TrajectoryPair<double>& traj, const sys::SystemSpec& system, const bath::BathSpec& bath,
                  const bath::BathPhasePoint& init);
Vector<double> residual(const TrajectoryPair<double>& traj, const sys::SystemSpec& system,
                        const bath::BathSpec& bath, const bath::BathPhasePoint& init);
ActionEvaluation<double> hessian(const TrajectoryPair<double>& traj, const sys::SystemSpec& system,
                                 const bath::BathSpec& bath, const bath::BathPhasePoint& init);

// log of (M/(2 pi hbar dt))^N (2 pi hbar)^(N-1) times the Fresnel factor.
// Throws CausticError when eval.caustic is set.
cplx log_prefactor(const ActionEvaluation<double>& eval, const sys::SystemSpec& system, int n_steps, double dt);
cplx log_prefactor(const ActionEvaluation<cplx>& eval, const sys::SystemSpec& system, int n_steps, double dt);
cplx prefactor(const ActionEvaluation<double>& eval, const sys::SystemSpec& system, int n_steps, double dt);

// Smooth path with its time derivative.
struct SmoothPath {
    std::function<double(double)> value;
    std::function<double(double)> velocity;
};

struct ContinuumOptions {
    int panels{64};
    int order{8};
};

// Continuous-time phase by composite Gauss-Legendre quadrature, including the
// nested memory integral and the counter term.
double action_phi_continuum(const SmoothPath& plus, const SmoothPath& minus, double duration,
                            const sys::SystemSpec& system, const bath::BathSpec& bath,
                            const bath::BathPhasePoint& init, ContinuumOptions options = {});

// Same, on cubic B-spline interpolants of the sampled paths.
double action_phi_continuum(const TrajectoryPair<double>& traj, const sys::SystemSpec& system,
                            const bath::BathSpec& bath, const bath::BathPhasePoint& init, int quadrature_order = 8);

}  // namespace fbsc::action
