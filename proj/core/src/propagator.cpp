#include "fbsc/propagator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "fbsc/quadrature.hpp"

namespace fbsc::prop {

using action::ActionModel;
using action::Endpoints;
using action::MemoryKernel;
using action::PropagatorAmplitude;
using action::TrajectoryPair;

InitialSystemState InitialSystemState::from_frequency(double center, double mass, double omega) {
    if (!(mass > 0.0) || !(omega > 0.0)) throw std::invalid_argument("packet width needs M > 0 and Omega > 0");
    return {center, std::sqrt(kHbar / (mass * omega))};
}

InitialSystemState InitialSystemState::from_width(double center, double sigma) {
    InitialSystemState s{center, sigma};
    s.validate();
    return s;
}

void InitialSystemState::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("packet width must be positive");
    if (!std::isfinite(center)) throw std::invalid_argument("packet centre must be finite");
}

cplx log_initial_density(const InitialSystemState& state, cplx s0_plus, cplx s0_minus) {
    const double inv = 1.0 / (2.0 * state.sigma * state.sigma);
    const cplx dp = s0_plus - state.center, dm = s0_minus - state.center;
    return -std::log(state.sigma * std::sqrt(std::numbers::pi)) - inv * (dp * dp + dm * dm);
}

double initial_density(const InitialSystemState& state, double s0_plus, double s0_minus) {
    return std::exp(log_initial_density(state, s0_plus, s0_minus).real());
}

void PropagatorConfig::validate() const {
    if (!(dt_max > 0.0)) throw std::invalid_argument("dt_max must be positive");
    if (min_steps < 2) throw std::invalid_argument("min_steps must be at least 2");
    if (max_steps != 0 && max_steps < min_steps) throw std::invalid_argument("max_steps must be 0 or >= min_steps");
    if (quadrature_nodes < 2) throw std::invalid_argument("quadrature needs at least 2 nodes per dimension");
    if (bath_init == BathInit::Wigner) {
        if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
        if (samples < 1) throw std::invalid_argument("at least one bath sample is required");
    }
    if (!(max_drop_fraction >= 0.0)) throw std::invalid_argument("max_drop_fraction must be non-negative");
    solver.validate();
}

int steps_for_time(const PropagatorConfig& cfg, double t) {
    int n = std::max(cfg.min_steps, static_cast<int>(std::ceil(t / cfg.dt_max - 1e-9)));
    if (cfg.max_steps > 0) n = std::min(n, cfg.max_steps);
    return n;
}

std::size_t ObservableSeries::total_dropped() const {
    std::size_t n = 0;
    for (auto d : dropped) n += d;
    return n;
}

std::size_t ObservableSeries::total_evaluated() const {
    std::size_t n = total_dropped();
    for (auto c : converged) n += c;
    return n;
}

double ObservableSeries::drop_fraction() const {
    const auto total = total_evaluated();
    return total == 0 ? 0.0 : static_cast<double>(total_dropped()) / static_cast<double>(total);
}

namespace {

template <typename Scalar>
PropagatorAmplitude amplitude_of(const bvp::StationaryResult<Scalar>& result, const sys::SystemSpec& system) {
    PropagatorAmplitude amp;
    amp.converged = result.converged;
    amp.caustic = result.action_eval.caustic;
    if (!amp.usable()) return amp;
    const int n = result.trajectory.steps();
    amp.log_value = action::log_prefactor(result.action_eval, system, n, result.trajectory.dt) +
                    cplx(0.0, 1.0) * cplx(result.action_eval.phi) / kHbar;
    return amp;
}

// Unpivoted complex LDL^T of a small symmetric matrix.
struct SmallLdlt {
    Matrix<cplx> unit_lower;
    Vector<cplx> pivots;
    bool ok{true};

    explicit SmallLdlt(const Matrix<cplx>& a) {
        const Eigen::Index n = a.rows();
        unit_lower = Matrix<cplx>::Identity(n, n);
        pivots.resize(n);
        Matrix<cplx> work = a;
        const double scale = a.cwiseAbs().maxCoeff();
        for (Eigen::Index j = 0; j < n; ++j) {
            const cplx d = work(j, j);
            if (!(std::abs(d) > 1e-14 * scale)) {
                ok = false;
                return;
            }
            pivots(j) = d;
            for (Eigen::Index i = j + 1; i < n; ++i) unit_lower(i, j) = work(i, j) / d;
            for (Eigen::Index i = j + 1; i < n; ++i)
                for (Eigen::Index k = j + 1; k < n; ++k) work(i, k) -= unit_lower(i, j) * d * unit_lower(k, j);
        }
    }

    Vector<cplx> solve(const Vector<cplx>& b) const {
        Vector<cplx> y = unit_lower.triangularView<Eigen::UnitLower>().solve(b);
        y = y.cwiseQuotient(pivots);
        return unit_lower.transpose().triangularView<Eigen::UnitUpper>().solve(y);
    }
};

// Gaussian change of variables u = centre + L z with L^T A L = 2 I.
struct Contour {
    Vector<cplx> centre;
    Matrix<cplx> l;
    cplx log_det_l{};
    bool ok{false};
};

Contour make_contour(const Matrix<cplx>& a, const Vector<cplx>& centre) {
    Contour c;
    const SmallLdlt f(a);
    if (!f.ok) return c;
    // L = sqrt(2) C^-T D^-1/2
    Matrix<cplx> d_inv_sqrt = Matrix<cplx>::Zero(3, 3);
    c.log_det_l = 1.5 * std::log(2.0);
    for (int j = 0; j < 3; ++j) {
        const cplx root = std::sqrt(f.pivots(j));
        d_inv_sqrt(j, j) = 1.0 / root;
        c.log_det_l -= std::log(root);
    }
    const Matrix<cplx> c_inv_t =
        f.unit_lower.transpose().triangularView<Eigen::UnitUpper>().solve(Matrix<cplx>::Identity(3, 3));
    c.l = std::sqrt(2.0) * c_inv_t * d_inv_sqrt;
    c.centre = centre;
    c.ok = true;
    return c;
}

// endpoint slot -> index of u = (s0+, s0-, sf)
constexpr int kSlotToU[4] = {0, 2, 1, 2};

std::vector<int> endpoint_indices(int n) { return {0, n, n + 1, 2 * n + 1}; }

std::vector<int> interior_indices(int n) {
    std::vector<int> out;
    for (int k = 1; k < n; ++k) out.push_back(k);
    for (int k = 1; k < n; ++k) out.push_back(n + 1 + k);
    return out;
}

Endpoints<cplx> endpoints_at(const Vector<cplx>& u) { return {u(0), u(2), u(1), u(2)}; }

Vector<cplx> slots_of(const Vector<cplx>& u) {
    Vector<cplx> e(4);
    for (int p = 0; p < 4; ++p) e(p) = u(kSlotToU[p]);
    return e;
}

// A = diag(1/sigma^2, 1/sigma^2, 0) - (i/hbar) P^T S P for the endpoint Schur complement S.
template <typename Scalar>
Matrix<cplx> gaussian_form(const InitialSystemState& state, const Matrix<Scalar>& schur) {
    const double inv_var = 1.0 / (state.sigma * state.sigma);
    Matrix<cplx> a = Matrix<cplx>::Zero(3, 3);
    a(0, 0) = inv_var;
    a(1, 1) = inv_var;
    for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q) a(kSlotToU[p], kSlotToU[q]) -= cplx(0.0, 1.0 / kHbar) * cplx(schur(p, q));
    return a;
}

// Everything about one reporting time that does not depend on the bath sample.
struct TimeSetup {
    int n_steps{0};
    double dt{0.0};
    std::shared_ptr<const MemoryKernel> kernel;
    std::unique_ptr<bvp::LinearizedProblem> lin;
    Matrix<double> x;  // G_ii^-1 G_ie of the linearized model
    Matrix<cplx> a;    // quadratic form of the linearized endpoint Gaussian
    std::unique_ptr<SmallLdlt> a_factor;
    Contour contour;
    bool usable{false};
};

TimeSetup prepare_time(const InitialSystemState& state, const sys::SystemSpec& system, const bath::BathSpec& bath,
                       double t, const PropagatorConfig& cfg) {
    TimeSetup setup;
    setup.n_steps = steps_for_time(cfg, t);
    setup.dt = t / setup.n_steps;
    setup.kernel = std::make_shared<MemoryKernel>(bath, setup.n_steps, setup.dt, system.counter_term);
    setup.lin = std::make_unique<bvp::LinearizedProblem>(system, setup.kernel);
    if (setup.lin->singular()) return setup;

    const int n = setup.n_steps;
    const ActionModel lin_model(system.linearized(), setup.kernel, Vector<double>::Zero(n + 1));
    const Matrix<double> g = lin_model.full_hessian(TrajectoryPair<double>::zeros(n, setup.dt));
    const auto ends = endpoint_indices(n);
    const Matrix<double> g_ie = g(interior_indices(n), ends);
    setup.x.resize(2 * n - 2, 4);
    for (int j = 0; j < 4; ++j) setup.x.col(j) = setup.lin->factorization().solve(Vector<double>(g_ie.col(j)));
    const Matrix<double> schur = g(ends, ends) - g_ie.transpose() * setup.x;

    setup.a = gaussian_form(state, schur);
    setup.a_factor = std::make_unique<SmallLdlt>(setup.a);
    if (!setup.a_factor->ok) return setup;
    setup.contour = make_contour(setup.a, Vector<cplx>::Zero(3));
    setup.usable = setup.contour.ok;
    return setup;
}

bath::BathPhasePoint bath_sample(const bath::BathSpec& bath, const sys::SystemSpec& system,
                                 const PropagatorConfig& cfg, std::size_t index) {
    if (cfg.bath_init == BathInit::Equilibrium) return bath::equilibrium_placement(bath, system, cfg.equilibrium_position);
    if (!cfg.antithetic) return bath::sample_wigner(bath, cfg.beta, cfg.seed, index);
    auto p = bath::sample_wigner(bath, cfg.beta, cfg.seed, index / 2);
    return index % 2 == 0 ? p : -p;
}

// Stationary point of log rho + i Phi / hbar over the endpoints together with
// the interior response to endpoint shifts there.
struct EndpointSaddle {
    Vector<cplx> u;
    TrajectoryPair<cplx> path;
    Matrix<cplx> response;  // d interior / d slots
    Matrix<cplx> a;
    // log rho + log Q^SC at the saddle
    cplx log_integrand{};
    bool ok{false};
};

EndpointSaddle find_saddle(const InitialSystemState& state, const ActionModel& model, const Vector<cplx>& start,
                           const TrajectoryPair<cplx>& start_path, const PropagatorConfig& cfg) {
    EndpointSaddle saddle;
    const int n = model.steps();
    const auto ends = endpoint_indices(n);
    const auto interior = interior_indices(n);
    const double inv_var = 1.0 / (state.sigma * state.sigma);
    bvp::SolverConfig solver = cfg.solver;
    solver.store_hessian = false;

    Vector<cplx> u = start;
    TrajectoryPair<cplx> path = start_path;
    for (int it = 0; it <= cfg.saddle_iterations; ++it) {
        const auto e = endpoints_at(u);
        path.plus(0) = e.plus_initial, path.plus(n) = e.plus_final;
        path.minus(0) = e.minus_initial, path.minus(n) = e.minus_final;
        const auto root = bvp::solve_stationary(path, model, solver);
        if (!root.converged) return saddle;
        path = root.trajectory;

        const Matrix<cplx> h = model.full_hessian(path);
        const Matrix<cplx> h_ie = h(interior, ends);
        const SymmetricFactorization<cplx> f(Matrix<cplx>(h(interior, interior)));
        if (!f.ok()) return saddle;
        Matrix<cplx> x(2 * n - 2, 4);
        for (int j = 0; j < 4; ++j) x.col(j) = f.solve(Vector<cplx>(h_ie.col(j)));
        const Matrix<cplx> schur = h(ends, ends) - h_ie.transpose() * x;
        const Vector<cplx> g = model.full_gradient(path)(ends);

        Vector<cplx> grad(3);
        grad << -(u(0) - state.center) * inv_var, -(u(1) - state.center) * inv_var, 0.0;
        for (int p = 0; p < 4; ++p) grad(kSlotToU[p]) += cplx(0.0, 1.0 / kHbar) * g(p);
        const Matrix<cplx> a = gaussian_form(state, schur);

        if (grad.cwiseAbs().maxCoeff() * state.sigma <= cfg.saddle_tolerance) {
            saddle.u = u;
            saddle.path = path;
            saddle.response = -x;
            saddle.a = a;
            const auto amp = amplitude_of(bvp::solve_stationary(path, model, solver), model.system());
            if (!amp.usable()) return saddle;
            saddle.log_integrand = log_initial_density(state, u(0), u(1)) + amp.log_value;
            saddle.ok = true;
            return saddle;
        }
        const SmallLdlt af(a);
        if (!af.ok) return saddle;
        const Vector<cplx> du = af.solve(grad);
        u += du;
        // first-order predictor for the interior at the new endpoints
        const Vector<cplx> shift = -x * slots_of(du);
        for (int k = 1; k < n; ++k) {
            path.plus(k) += shift(k - 1);
            path.minus(k) += shift(n - 2 + k);
        }
    }
    return saddle;
}

TrajectoryPair<cplx> with_endpoints(TrajectoryPair<cplx> path, const Vector<cplx>& u) {
    const int n = path.steps();
    const auto e = endpoints_at(u);
    path.plus(0) = e.plus_initial, path.plus(n) = e.plus_final;
    path.minus(0) = e.minus_initial, path.minus(n) = e.minus_final;
    return path;
}

// Root at endpoints `target`, followed along the straight line from the saddle
// so that it stays on the branch through the saddle path.
bvp::StationaryResult<cplx> follow_from_saddle(const EndpointSaddle& saddle, const Vector<cplx>& target,
                                               const ActionModel& model, const bvp::SolverConfig& cfg) {
    const int n = model.steps();
    bvp::SolverConfig stage = cfg;
    stage.max_iterations = std::min(cfg.max_iterations, cfg.homotopy_stage_iterations);
    TrajectoryPair<cplx> current = saddle.path, previous = saddle.path;
    double tau = 0.0, last_step = 0.0, step = 1.0;
    int iterations = 0;
    bvp::StationaryResult<cplx> result;
    while (true) {
        const double next = std::min(1.0, tau + step);
        const Vector<cplx> u = saddle.u + next * (target - saddle.u);
        TrajectoryPair<cplx> guess = current;
        if (last_step > 0.0) {
            const double ratio = (next - tau) / last_step;
            guess.plus += ratio * (current.plus - previous.plus);
            guess.minus += ratio * (current.minus - previous.minus);
        } else {
            const Vector<cplx> shift = saddle.response * slots_of(Vector<cplx>(u - saddle.u));
            for (int k = 1; k < n; ++k) {
                guess.plus(k) += shift(k - 1);
                guess.minus(k) += shift(n - 2 + k);
            }
        }
        result = bvp::solve_stationary(with_endpoints(guess, u), model, stage);
        iterations += result.iterations;
        if (result.converged) {
            previous = current;
            current = result.trajectory;
            last_step = next - tau;
            tau = next;
            if (tau == 1.0) break;
            if (result.iterations <= stage.max_iterations / 2) step = std::min(2.0 * step, 1.0);
            continue;
        }
        step *= 0.5;
        if (step < cfg.homotopy_min_step) {
            result.message = "endpoint continuation stalled at tau=" + std::to_string(next) + ": " + result.message;
            break;
        }
    }
    result.iterations = iterations;
    return result;
}

struct SampleSums {
    cplx numerator{};
    cplx denominator{};
    double magnitude{0.0};
    std::size_t converged{0};
    std::size_t dropped{0};
};

SampleSums run_sample(const TimeSetup& setup, const InitialSystemState& state, const sys::SystemSpec& system,
                      const bath::BathSpec& bath, const bath::BathPhasePoint& init, const QuadratureRule& gh,
                      const PropagatorConfig& cfg, std::size_t sample_index, double t) {
    SampleSums sums;
    const std::size_t q = gh.nodes.size();
    const std::size_t total = q * q * q;
    if (!setup.usable) {
        sums.dropped = total;
        return sums;
    }
    const int n = setup.n_steps;
    const Vector<double> drive = action::drive_table(bath, init, setup.kernel->grid());
    const ActionModel model(system, setup.kernel, drive);
    const Vector<double> response = setup.lin->drive_response(drive);

    // centre of the linearized endpoint Gaussian for this sample
    const ActionModel lin_model(system.linearized(), setup.kernel, drive);
    const Vector<double> h = lin_model.full_gradient(TrajectoryPair<double>::zeros(n, setup.dt));
    const auto ends = endpoint_indices(n);
    const Vector<double> h_i = h(interior_indices(n));
    const Vector<double> r = h(ends) - setup.x.transpose() * h_i;
    const double inv_var = 1.0 / (state.sigma * state.sigma);
    Vector<cplx> b(3);
    b << state.center * inv_var, state.center * inv_var, 0.0;
    for (int p = 0; p < 4; ++p) b(kSlotToU[p]) += cplx(0.0, 1.0 / kHbar) * r(p);
    Contour contour = setup.contour;
    contour.centre = setup.a_factor->solve(b);

    // Anharmonic systems: recentre and reshape the Gaussian at the saddle of
    // the full integrand, and predict node paths from the saddle path.
    EndpointSaddle saddle;
    if (!system.is_quadratic()) {
        saddle = find_saddle(state, model, contour.centre,
                             setup.lin->guess(endpoints_at(contour.centre), response), cfg);
        if (saddle.ok) {
            const Contour adapted = make_contour(saddle.a, saddle.u);
            if (adapted.ok) contour = adapted;
            else saddle.ok = false;
        }
    }

    bvp::SolverConfig solver = cfg.solver;
    solver.store_hessian = false;
    for (std::size_t i0 = 0; i0 < q; ++i0) {
        for (std::size_t i1 = 0; i1 < q; ++i1) {
            for (std::size_t i2 = 0; i2 < q; ++i2) {
                Vector<cplx> z(3);
                z << gh.nodes[i0], gh.nodes[i1], gh.nodes[i2];
                const Vector<cplx> u = contour.centre + contour.l * z;
                const cplx log_weight = contour.log_det_l +
                                        std::log(gh.weights[i0] * gh.weights[i1] * gh.weights[i2]) +
                                        (z.array() * z.array()).sum();
                const Endpoints<cplx> e = endpoints_at(u);
                bvp::StationaryResult<cplx> result;
                if (system.is_quadratic()) {
                    result = bvp::solve_stationary(setup.lin->guess(e, response), model, solver,
                                                   &setup.lin->factorization());
                } else {
                    if (saddle.ok) result = follow_from_saddle(saddle, u, model, solver);
                    if (!result.converged) {
                        const auto guess = setup.lin->guess(e, response);
                        result = solver.continuation_stages > 1
                                     ? bvp::solve_with_continuation(guess, system, bath, init, solver)
                                     : bvp::solve_with_homotopy(guess, model, solver);
                    }
                }
                if (cfg.log) {
                    auto record = bvp::make_record(result);
                    record.time = t;
                    record.sample = sample_index;
                    cfg.log->write(record);
                }
                const auto amp = amplitude_of(result, system);
                if (!amp.usable()) {
                    ++sums.dropped;
                    continue;
                }
                const cplx term = std::exp(log_weight + log_initial_density(state, u(0), u(1)) + amp.log_value);
                if (!std::isfinite(term.real()) || !std::isfinite(term.imag())) {
                    ++sums.dropped;
                    continue;
                }
                ++sums.converged;
                sums.denominator += term;
                sums.numerator += u(2) * term;
                sums.magnitude += std::abs(term);
            }
        }
    }
    return sums;
}

}  // namespace

template <typename Scalar>
PropagatorAmplitude qsc_amplitude(const Endpoints<Scalar>& ends, const bath::BathPhasePoint& init,
                                  const sys::SystemSpec& system, const bath::BathSpec& bath, int n_steps, double dt,
                                  const bvp::SolverConfig& cfg) {
    auto kernel = std::make_shared<MemoryKernel>(bath, n_steps, dt, system.counter_term);
    const bvp::LinearizedProblem lin(system, kernel);
    if (lin.singular()) return {cplx{}, true, false};
    const Vector<double> drive = action::drive_table(bath, init, kernel->grid());
    const ActionModel model(system, kernel, drive);
    const auto guess = lin.guess(ends, lin.drive_response(drive));
    bvp::StationaryResult<Scalar> result;
    if (system.is_quadratic()) {
        result = bvp::solve_stationary(guess, model, cfg, &lin.factorization());
    } else if (cfg.continuation_stages > 1) {
        result = bvp::solve_with_continuation(guess, system, bath, init, cfg);
    } else {
        result = bvp::solve_stationary(guess, model, cfg);
    }
    return amplitude_of(result, system);
}

template PropagatorAmplitude qsc_amplitude(const Endpoints<double>&, const bath::BathPhasePoint&,
                                           const sys::SystemSpec&, const bath::BathSpec&, int, double,
                                           const bvp::SolverConfig&);
template PropagatorAmplitude qsc_amplitude(const Endpoints<cplx>&, const bath::BathPhasePoint&,
                                           const sys::SystemSpec&, const bath::BathSpec&, int, double,
                                           const bvp::SolverConfig&);

ObservableSeries expectation_position(const InitialSystemState& state, const sys::SystemSpec& system,
                                      const bath::BathSpec& bath, const std::vector<double>& t_grid,
                                      const PropagatorConfig& cfg) {
    state.validate();
    system.validate();
    cfg.validate();
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        if (!(t_grid[k] >= 0.0) || (k > 0 && !(t_grid[k] > t_grid[k - 1])))
            throw std::invalid_argument("time grid must be non-negative and increasing");
    }

    const std::size_t samples = cfg.bath_init == BathInit::Equilibrium ? 1 : cfg.samples;
    const bool paired = cfg.bath_init == BathInit::Wigner && cfg.antithetic;
    const auto gh = gauss_hermite(static_cast<std::size_t>(cfg.quadrature_nodes));
    std::vector<bath::BathPhasePoint> inits;
    inits.reserve(samples);
    for (std::size_t s = 0; s < samples; ++s) inits.push_back(bath_sample(bath, system, cfg, s));

    ObservableSeries series;
    const std::size_t n_times = t_grid.size();
    series.times = t_grid;
    series.values.assign(n_times, std::numeric_limits<double>::quiet_NaN());
    series.std_errors.assign(n_times, 0.0);
    series.imag_parts.assign(n_times, 0.0);
    series.traces.assign(n_times, cplx{});
    series.steps.assign(n_times, 0);
    series.converged.assign(n_times, 0);
    series.dropped.assign(n_times, 0);
    series.valid.assign(n_times, false);

    const unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;

    for (std::size_t ti = 0; ti < n_times; ++ti) {
        const double t = t_grid[ti];
        if (t == 0.0) {
            // Q is the identity kernel
            series.values[ti] = state.center;
            series.traces[ti] = 1.0;
            series.valid[ti] = true;
            continue;
        }
        const TimeSetup setup = prepare_time(state, system, bath, t, cfg);
        series.steps[ti] = setup.n_steps;

        std::vector<SampleSums> sums(samples);
        std::atomic<std::size_t> next{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        auto worker = [&] {
            for (std::size_t s = next++; s < samples; s = next++) {
                try {
                    sums[s] = run_sample(setup, state, system, bath, inits[s], gh, cfg, s, t);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        };
        if (threads <= 1 || samples == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (unsigned k = 0; k < std::min<std::size_t>(threads, samples); ++k) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
        if (error) std::rethrow_exception(error);

        // fixed-order reduction over statistical units (antithetic pairs or single samples)
        std::vector<std::pair<cplx, cplx>> units;
        cplx num{}, den{};
        double magnitude = 0.0;
        for (std::size_t s = 0; s < samples; ++s) {
            series.converged[ti] += sums[s].converged;
            series.dropped[ti] += sums[s].dropped;
            magnitude += sums[s].magnitude;
            num += sums[s].numerator;
            den += sums[s].denominator;
            if (paired && s % 2 == 1) {
                units.back().first = 0.5 * (units.back().first + sums[s].numerator);
                units.back().second = 0.5 * (units.back().second + sums[s].denominator);
            } else {
                units.emplace_back(sums[s].numerator, sums[s].denominator);
            }
        }
        series.traces[ti] = den / static_cast<double>(samples);
        if (!(std::abs(den) > 1e-12 * magnitude) || series.converged[ti] == 0) continue;
        const cplx ratio = num / den;
        series.values[ti] = ratio.real();
        series.imag_parts[ti] = ratio.imag();
        series.valid[ti] = true;
        const std::size_t m = units.size();
        if (m > 1) {
            cplx mean_den{};
            for (const auto& u : units) mean_den += u.second;
            mean_den /= static_cast<double>(m);
            double acc = 0.0;
            for (const auto& u : units) acc += std::norm(u.first - ratio * u.second);
            series.std_errors[ti] = std::sqrt(acc / (static_cast<double>(m) * (m - 1))) / std::abs(mean_den);
        }
    }

    if (series.drop_fraction() > cfg.max_drop_fraction) {
        series.ok = false;
        series.failure = "dropped " + std::to_string(series.total_dropped()) + " of " +
                         std::to_string(series.total_evaluated()) + " endpoint evaluations";
    }
    return series;
}

}  // namespace fbsc::prop
