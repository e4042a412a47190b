#include "fbsc/action.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fbsc::action {

template <typename Scalar>
void TrajectoryPair<Scalar>::validate() const {
    if (plus.size() != minus.size()) throw std::invalid_argument("forward and backward paths differ in length");
    if (steps() < 2) throw std::invalid_argument("trajectory needs at least 2 steps");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("time step must be positive");
}

template <typename Scalar>
TrajectoryPair<Scalar> TrajectoryPair<Scalar>::zeros(int n_steps, double dt) {
    if (n_steps < 2) throw std::invalid_argument("trajectory needs at least 2 steps");
    return {dt, Vector<Scalar>::Zero(n_steps + 1), Vector<Scalar>::Zero(n_steps + 1)};
}

template struct TrajectoryPair<double>;
template struct TrajectoryPair<cplx>;

TimeGrid make_time_grid(int n_steps, double dt) {
    if (n_steps < 2) throw std::invalid_argument("time grid needs at least 2 steps");
    if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
    TimeGrid g{n_steps, dt, std::vector<double>(n_steps + 1, dt), std::vector<double>(n_steps + 1)};
    g.length.front() = g.length.back() = 0.5 * dt;
    for (int k = 0; k <= n_steps; ++k) g.midpoint[k] = k * dt;
    g.midpoint.front() = 0.25 * dt;
    g.midpoint.back() = n_steps * dt - 0.25 * dt;
    return g;
}

namespace {

// (x - sin x) / x^2 without cancellation for small x
double x_minus_sin_over_x2(double x) {
    if (std::abs(x) < 1e-2) {
        const double x2 = x * x;
        return x / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)));
    }
    return (x - std::sin(x)) / (x * x);
}

// 2 sin(w L / 2) / w, the integral of exp(i w u) over a centred segment of length L
double segment_weight(double omega, double length) { return 2.0 * std::sin(0.5 * omega * length) / omega; }

template <typename Scalar>
Vector<Scalar> kernel_times(const Matrix<double>& a, const Vector<Scalar>& v) {
    if constexpr (is_complex_v<Scalar>) {
        Vector<Scalar> out(a.rows());
        out.real() = a * v.real();
        out.imag() = a * v.imag();
        return out;
    } else {
        return a * v;
    }
}

template <typename Scalar>
Vector<Scalar> kernel_transpose_times(const Matrix<double>& a, const Vector<Scalar>& v) {
    if constexpr (is_complex_v<Scalar>) {
        Vector<Scalar> out(a.cols());
        out.real() = a.transpose() * v.real();
        out.imag() = a.transpose() * v.imag();
        return out;
    } else {
        return a.transpose() * v;
    }
}

}  // namespace

MemoryKernel::MemoryKernel(const bath::BathSpec& bath, int n_steps, double dt, bool counter_term)
    : grid_(make_time_grid(n_steps, dt)) {
    const Eigen::Index n = n_steps + 1;
    const Eigen::Index modes = static_cast<Eigen::Index>(bath.n_modes());
    Matrix<double> sin_part(n, modes), cos_part(n, modes);
    Vector<double> weight(modes);
    Vector<double> diagonal = Vector<double>::Zero(n);
    for (Eigen::Index i = 0; i < modes; ++i) {
        const double m = bath.masses()[i], w = bath.frequencies()[i], c = bath.couplings()[i];
        const double g = c * c / (2.0 * m * w);
        weight(i) = g;
        for (Eigen::Index k = 0; k < n; ++k) {
            const double a = segment_weight(w, grid_.length[k]);
            sin_part(k, i) = a * std::sin(w * grid_.midpoint[k]);
            cos_part(k, i) = a * std::cos(w * grid_.midpoint[k]);
            const double len = grid_.length[k];
            diagonal(k) += g * len * len * x_minus_sin_over_x2(w * len);
        }
        if (counter_term) kappa_ += c * c / (2.0 * m * w * w);
    }
    // sin w(m_k - m_l) = sin w m_k cos w m_l - cos w m_k sin w m_l
    const Matrix<double> ws = sin_part * weight.asDiagonal();
    const Matrix<double> wc = cos_part * weight.asDiagonal();
    Matrix<double> full = ws * cos_part.transpose() - wc * sin_part.transpose();
    k_ = full.triangularView<Eigen::StrictlyLower>();
    for (Eigen::Index k = 0; k < n; ++k) k_(k, k) = diagonal(k) - kappa_ * grid_.length[k];
}

Vector<double> drive_table(const bath::BathSpec& bath, const bath::BathPhasePoint& init, const TimeGrid& grid) {
    if (init.x0.size() != bath.n_modes() || init.p0.size() != bath.n_modes())
        throw std::invalid_argument("bath phase point does not match the bath");
    Vector<double> d = Vector<double>::Zero(grid.n_steps + 1);
    for (std::size_t i = 0; i < bath.n_modes(); ++i) {
        const double m = bath.masses()[i], w = bath.frequencies()[i], c = bath.couplings()[i];
        const double ax = c * init.x0[i];
        const double ap = c * init.p0[i] / (m * w);
        if (ax == 0.0 && ap == 0.0) continue;
        for (int k = 0; k <= grid.n_steps; ++k) {
            const double tk = grid.midpoint[k];
            d(k) += segment_weight(w, grid.length[k]) * (ax * std::cos(w * tk) + ap * std::sin(w * tk));
        }
    }
    return d;
}

ActionModel::ActionModel(const sys::SystemSpec& system, const bath::BathSpec& bath,
                         const bath::BathPhasePoint& init, int n_steps, double dt)
    : system_(system),
      linear_(system.linearized()),
      kernel_(std::make_shared<MemoryKernel>(bath, n_steps, dt, system.counter_term)),
      drive_(drive_table(bath, init, kernel_->grid())) {}

ActionModel::ActionModel(const sys::SystemSpec& system, std::shared_ptr<const MemoryKernel> kernel,
                         Vector<double> drive)
    : system_(system), linear_(system.linearized()), kernel_(std::move(kernel)), drive_(std::move(drive)) {
    if (!kernel_) throw std::invalid_argument("missing memory kernel");
    if (drive_.size() != kernel_->grid().n_steps + 1) throw std::invalid_argument("drive table has wrong length");
}

ActionModel ActionModel::with_nonlinearity(double lambda) const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("nonlinearity must lie in [0, 1]");
    ActionModel out = *this;
    out.lambda_ = lambda;
    return out;
}

namespace {

template <typename Scalar>
sys::Taylor<Scalar> blend(const sys::Taylor<Scalar>& lin, const sys::Taylor<Scalar>& full, double lambda) {
    return {lin.value + lambda * (full.value - lin.value), lin.d1 + lambda * (full.d1 - lin.d1),
            lin.d2 + lambda * (full.d2 - lin.d2)};
}

}  // namespace

template <typename Scalar>
struct ActionModel::PointData {
    Vector<Scalar> fp, fm, fp1, fm1, fp2, fm2;
    Vector<Scalar> vp, vm, vp1, vm1, vp2, vm2;
    Vector<Scalar> delta, sigma, k_sigma, kt_delta;
};

template <typename Scalar>
ActionModel::PointData<Scalar> ActionModel::point_data(const TrajectoryPair<Scalar>& traj) const {
    if (traj.steps() != steps()) throw std::invalid_argument("trajectory length does not match the action model");
    const int n = steps() + 1;
    PointData<Scalar> d;
    for (auto* v : {&d.fp, &d.fm, &d.fp1, &d.fm1, &d.fp2, &d.fm2, &d.vp, &d.vm, &d.vp1, &d.vm1, &d.vp2, &d.vm2})
        v->resize(n);
    for (int k = 0; k < n; ++k) {
        auto cp = sys::coupling_eval(system_, traj.plus(k));
        auto cm = sys::coupling_eval(system_, traj.minus(k));
        auto pp = sys::potential_eval(system_, traj.plus(k));
        auto pm = sys::potential_eval(system_, traj.minus(k));
        if (lambda_ != 1.0) {
            cp = blend(sys::coupling_eval(linear_, traj.plus(k)), cp, lambda_);
            cm = blend(sys::coupling_eval(linear_, traj.minus(k)), cm, lambda_);
            pp = blend(sys::potential_eval(linear_, traj.plus(k)), pp, lambda_);
            pm = blend(sys::potential_eval(linear_, traj.minus(k)), pm, lambda_);
        }
        d.fp(k) = cp.value, d.fp1(k) = cp.d1, d.fp2(k) = cp.d2;
        d.fm(k) = cm.value, d.fm1(k) = cm.d1, d.fm2(k) = cm.d2;
        d.vp(k) = pp.value, d.vp1(k) = pp.d1, d.vp2(k) = pp.d2;
        d.vm(k) = pm.value, d.vm1(k) = pm.d1, d.vm2(k) = pm.d2;
    }
    d.delta = d.fp - d.fm;
    d.sigma = d.fp + d.fm;
    d.k_sigma = kernel_times(kernel_->matrix(), d.sigma);
    d.kt_delta = kernel_transpose_times(kernel_->matrix(), d.delta);
    return d;
}

template <typename Scalar>
Scalar ActionModel::phi(const TrajectoryPair<Scalar>& traj) const {
    const auto d = point_data(traj);
    const auto& grid = kernel_->grid();
    const double half_m_over_dt = 0.5 * system_.mass / grid.dt;
    Scalar total{};
    for (int k = 1; k <= grid.n_steps; ++k) {
        const Scalar ap = traj.plus(k) - traj.plus(k - 1);
        const Scalar am = traj.minus(k) - traj.minus(k - 1);
        total += half_m_over_dt * (ap * ap - am * am);
    }
    for (int k = 0; k <= grid.n_steps; ++k) {
        total -= grid.length[k] * (d.vp(k) - d.vm(k));
        total += drive_(k) * d.delta(k);
        total += d.delta(k) * d.k_sigma(k);
    }
    return total;
}

template <typename Scalar>
Vector<Scalar> ActionModel::full_gradient(const TrajectoryPair<Scalar>& traj) const {
    const auto d = point_data(traj);
    const auto& grid = kernel_->grid();
    const int n = grid.n_steps;
    const double m_over_dt = system_.mass / grid.dt;
    auto kinetic = [&](const Vector<Scalar>& x, int j) {
        Scalar out{};
        if (j >= 1) out += x(j) - x(j - 1);
        if (j < n) out -= x(j + 1) - x(j);
        return m_over_dt * out;
    };
    Vector<Scalar> g(2 * n + 2);
    for (int j = 0; j <= n; ++j) {
        const Scalar memory = d.k_sigma(j);
        g(j) = kinetic(traj.plus, j) - grid.length[j] * d.vp1(j) +
               d.fp1(j) * (drive_(j) + memory + d.kt_delta(j));
        g(n + 1 + j) = -kinetic(traj.minus, j) + grid.length[j] * d.vm1(j) +
                       d.fm1(j) * (-drive_(j) - memory + d.kt_delta(j));
    }
    return g;
}

template <typename Scalar>
Vector<Scalar> ActionModel::residual(const TrajectoryPair<Scalar>& traj) const {
    const Vector<Scalar> g = full_gradient(traj);
    const int n = steps();
    Vector<Scalar> r(2 * n - 2);
    r.head(n - 1) = g.segment(1, n - 1);
    r.tail(n - 1) = g.segment(n + 2, n - 1);
    return r;
}

template <typename Scalar>
Matrix<Scalar> ActionModel::assemble_hessian(const TrajectoryPair<Scalar>& traj, bool interior) const {
    const auto d = point_data(traj);
    const auto& grid = kernel_->grid();
    const auto& k = kernel_->matrix();
    const int n = grid.n_steps;
    const double m_over_dt = system_.mass / grid.dt;

    const int dim = interior ? 2 * n - 2 : 2 * n + 2;
    auto index_plus = [&](int j) { return interior ? (j >= 1 && j < n ? j - 1 : -1) : j; };
    auto index_minus = [&](int j) { return interior ? (j >= 1 && j < n ? n - 2 + j : -1) : n + 1 + j; };

    Matrix<Scalar> h = Matrix<Scalar>::Zero(dim, dim);
    for (int j = 0; j <= n; ++j) {
        const int pj = index_plus(j), mj = index_minus(j);
        if (pj < 0) continue;
        for (int l = 0; l <= n; ++l) {
            const int pl = index_plus(l), ml = index_minus(l);
            if (pl < 0) continue;
            double kin = 0.0;
            if (j == l) kin = m_over_dt * ((j > 0 ? 1.0 : 0.0) + (j < n ? 1.0 : 0.0));
            else if (std::abs(j - l) == 1) kin = -m_over_dt;
            const double k_sym = k(j, l) + k(l, j);
            const double k_anti = k(j, l) - k(l, j);
            h(pj, pl) = kin + d.fp1(j) * d.fp1(l) * k_sym;
            h(mj, ml) = -kin - d.fm1(j) * d.fm1(l) * k_sym;
            h(pj, ml) = d.fp1(j) * d.fm1(l) * k_anti;
        }
        h(pj, pj) += -grid.length[j] * d.vp2(j) + d.fp2(j) * (drive_(j) + d.k_sigma(j) + d.kt_delta(j));
        h(mj, mj) += grid.length[j] * d.vm2(j) + d.fm2(j) * (-drive_(j) - d.k_sigma(j) + d.kt_delta(j));
    }
    // the lower-left block mirrors the upper-right one
    const int half = dim / 2;
    h.bottomLeftCorner(half, half) = h.topRightCorner(half, half).transpose();
    return h;
}

template <typename Scalar>
Matrix<Scalar> ActionModel::full_hessian(const TrajectoryPair<Scalar>& traj) const {
    return assemble_hessian(traj, false);
}

template <typename Scalar>
Matrix<Scalar> ActionModel::hessian(const TrajectoryPair<Scalar>& traj) const {
    return assemble_hessian(traj, true);
}

template <typename Scalar>
ActionEvaluation<Scalar> make_evaluation(Scalar phi, Vector<Scalar> gradient, Matrix<Scalar> hessian,
                                         const SymmetricFactorization<Scalar>& factorization) {
    ActionEvaluation<Scalar> eval;
    eval.phi = phi;
    eval.gradient = std::move(gradient);
    eval.hessian = std::move(hessian);
    eval.caustic = !factorization.ok() || factorization.pivot_ratio() < kCausticTolerance;
    eval.signature = factorization.inertia(kCausticTolerance);
    if (!eval.caustic) eval.log_fresnel = factorization.log_fresnel();
    return eval;
}

template <typename Scalar>
ActionEvaluation<Scalar> ActionModel::evaluate(const TrajectoryPair<Scalar>& traj) const {
    Matrix<Scalar> h = hessian(traj);
    SymmetricFactorization<Scalar> factorization(h);
    return make_evaluation(phi(traj), residual(traj), std::move(h), factorization);
}

#define FBSC_INSTANTIATE(S)                                                                                 \
    template S ActionModel::phi<S>(const TrajectoryPair<S>&) const;                                         \
    template Vector<S> ActionModel::full_gradient<S>(const TrajectoryPair<S>&) const;                       \
    template Vector<S> ActionModel::residual<S>(const TrajectoryPair<S>&) const;                            \
    template Matrix<S> ActionModel::full_hessian<S>(const TrajectoryPair<S>&) const;                        \
    template Matrix<S> ActionModel::hessian<S>(const TrajectoryPair<S>&) const;                             \
    template ActionEvaluation<S> ActionModel::evaluate<S>(const TrajectoryPair<S>&) const;                  \
    template ActionEvaluation<S> make_evaluation<S>(S, Vector<S>, Matrix<S>, const SymmetricFactorization<S>&);

FBSC_INSTANTIATE(double)
FBSC_INSTANTIATE(cplx)
#undef FBSC_INSTANTIATE

double action_phi(const TrajectoryPair<double>& traj, const sys::SystemSpec& system, const bath::BathSpec& bath,
                  const bath::BathPhasePoint& init) {
    traj.validate();
    return ActionModel(system, bath, init, traj.steps(), traj.dt).phi(traj);
}

Vector<double> residual(const TrajectoryPair<double>& traj, const sys::SystemSpec& system,
                        const bath::BathSpec& bath, const bath::BathPhasePoint& init) {
    traj.validate();
    return ActionModel(system, bath, init, traj.steps(), traj.dt).residual(traj);
}

ActionEvaluation<double> hessian(const TrajectoryPair<double>& traj, const sys::SystemSpec& system,
                                 const bath::BathSpec& bath, const bath::BathPhasePoint& init) {
    traj.validate();
    return ActionModel(system, bath, init, traj.steps(), traj.dt).evaluate(traj);
}

namespace {

template <typename Scalar>
cplx log_prefactor_impl(const ActionEvaluation<Scalar>& eval, const sys::SystemSpec& system, int n_steps,
                        double dt) {
    if (eval.caustic) throw CausticError("fluctuation Hessian is singular");
    const double two_pi_hbar = 2.0 * std::numbers::pi * kHbar;
    return n_steps * std::log(system.mass / (two_pi_hbar * dt)) + (n_steps - 1) * std::log(two_pi_hbar) +
           eval.log_fresnel;
}

}  // namespace

cplx log_prefactor(const ActionEvaluation<double>& eval, const sys::SystemSpec& system, int n_steps, double dt) {
    return log_prefactor_impl(eval, system, n_steps, dt);
}

cplx log_prefactor(const ActionEvaluation<cplx>& eval, const sys::SystemSpec& system, int n_steps, double dt) {
    return log_prefactor_impl(eval, system, n_steps, dt);
}

cplx prefactor(const ActionEvaluation<double>& eval, const sys::SystemSpec& system, int n_steps, double dt) {
    return std::exp(log_prefactor(eval, system, n_steps, dt));
}

}  // namespace fbsc::action
