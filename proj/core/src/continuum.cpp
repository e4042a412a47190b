#include <cmath>
#include <stdexcept>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "fbsc/action.hpp"
#include "fbsc/quadrature.hpp"

namespace fbsc::action {

double action_phi_continuum(const SmoothPath& plus, const SmoothPath& minus, double duration,
                            const sys::SystemSpec& system, const bath::BathSpec& bath,
                            const bath::BathPhasePoint& init, ContinuumOptions options) {
    if (!(duration > 0.0)) throw std::invalid_argument("duration must be positive");
    if (options.panels < 1 || options.order < 1) throw std::invalid_argument("quadrature needs panels and nodes");
    const auto rule = gauss_legendre(static_cast<std::size_t>(options.order));
    const int q = options.order;
    const int panels = options.panels;
    const double h = duration / panels;

    double kappa = 0.0;
    if (system.counter_term) kappa = bath.reorganization();

    // Outer nodes and, for each, inner nodes covering [panel start, node].
    std::vector<double> t_outer, w_outer, delta, sigma;
    std::vector<double> t_inner, w_inner, sigma_inner;
    std::vector<double> t_panel, w_panel, sigma_panel;  // full-panel rules for the running integral
    double local = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double a = p * h;
        for (int i = 0; i < q; ++i) {
            const double t = a + 0.5 * h * (rule.nodes[i] + 1.0);
            const double w = 0.5 * h * rule.weights[i];
            const double sp = plus.value(t), sm = minus.value(t);
            const double vp = plus.velocity(t), vm = minus.velocity(t);
            const double fp = sys::coupling_eval(system, sp).value, fm = sys::coupling_eval(system, sm).value;
            t_outer.push_back(t);
            w_outer.push_back(w);
            delta.push_back(fp - fm);
            sigma.push_back(fp + fm);
            local += w * (0.5 * system.mass * (vp * vp - vm * vm) - sys::potential_eval(system, sp).value +
                          sys::potential_eval(system, sm).value - kappa * (fp * fp - fm * fm));
            t_panel.push_back(t);
            w_panel.push_back(w);
            sigma_panel.push_back(fp + fm);
            const double span = t - a;
            for (int j = 0; j < q; ++j) {
                const double tau = a + 0.5 * span * (rule.nodes[j] + 1.0);
                t_inner.push_back(tau);
                w_inner.push_back(0.5 * span * rule.weights[j]);
                sigma_inner.push_back(sys::coupling_eval(system, plus.value(tau)).value +
                                      sys::coupling_eval(system, minus.value(tau)).value);
            }
        }
    }

    double influence = 0.0;
    for (std::size_t i = 0; i < bath.n_modes(); ++i) {
        const double m = bath.masses()[i], w = bath.frequencies()[i], c = bath.couplings()[i];
        const double g = c * c / (2.0 * m * w);
        const double ax = c * init.x0[i], ap = c * init.p0[i] / (m * w);
        double running_cos = 0.0, running_sin = 0.0;
        for (int p = 0; p < panels; ++p) {
            for (int a = 0; a < q; ++a) {
                const std::size_t o = static_cast<std::size_t>(p * q + a);
                double inner_cos = running_cos, inner_sin = running_sin;
                for (int b = 0; b < q; ++b) {
                    const std::size_t n = o * q + b;
                    inner_cos += w_inner[n] * sigma_inner[n] * std::cos(w * t_inner[n]);
                    inner_sin += w_inner[n] * sigma_inner[n] * std::sin(w * t_inner[n]);
                }
                const double ct = std::cos(w * t_outer[o]), st = std::sin(w * t_outer[o]);
                influence += w_outer[o] * delta[o] *
                             (ax * ct + ap * st + g * (st * inner_cos - ct * inner_sin));
            }
            for (int a = 0; a < q; ++a) {
                const std::size_t o = static_cast<std::size_t>(p * q + a);
                running_cos += w_panel[o] * sigma_panel[o] * std::cos(w * t_panel[o]);
                running_sin += w_panel[o] * sigma_panel[o] * std::sin(w * t_panel[o]);
            }
        }
    }
    return local + influence;
}

double action_phi_continuum(const TrajectoryPair<double>& traj, const sys::SystemSpec& system,
                            const bath::BathSpec& bath, const bath::BathPhasePoint& init, int quadrature_order) {
    traj.validate();
    using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;
    auto sp = std::make_shared<Spline>(traj.plus.data(), static_cast<std::size_t>(traj.plus.size()), 0.0, traj.dt);
    auto sm = std::make_shared<Spline>(traj.minus.data(), static_cast<std::size_t>(traj.minus.size()), 0.0, traj.dt);
    const SmoothPath plus{[sp](double t) { return (*sp)(t); }, [sp](double t) { return sp->prime(t); }};
    const SmoothPath minus{[sm](double t) { return (*sm)(t); }, [sm](double t) { return sm->prime(t); }};
    // panel edges on the spline knots
    return action_phi_continuum(plus, minus, traj.duration(), system, bath, init,
                                {2 * traj.steps(), quadrature_order});
}

}  // namespace fbsc::action
