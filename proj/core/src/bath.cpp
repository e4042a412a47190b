#include "fbsc/bath.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "fbsc/system.hpp"

namespace fbsc::bath {

SpectralDensity SpectralDensity::exp_cutoff(double xi, double omega_c) {
    if (!(omega_c > 0.0)) throw std::invalid_argument("exp-cutoff spectral density needs omega_c > 0");
    if (!(xi >= 0.0)) throw std::invalid_argument("exp-cutoff spectral density needs xi >= 0");
    SpectralDensity J;
    J.kind = SpectralKind::ExpCutoffOhmic;
    J.xi = xi;
    J.omega_c = omega_c;
    return J;
}

SpectralDensity SpectralDensity::linear_ohmic(double system_mass, double gamma) {
    if (!(system_mass > 0.0)) throw std::invalid_argument("Ohmic spectral density needs M > 0");
    if (!(gamma > 0.0)) throw std::invalid_argument("Ohmic spectral density needs gamma > 0");
    SpectralDensity J;
    J.kind = SpectralKind::LinearOhmic;
    J.system_mass = system_mass;
    J.gamma = gamma;
    return J;
}

double SpectralDensity::operator()(double omega) const {
    if (omega < 0.0) throw std::domain_error("spectral density evaluated at negative frequency");
    switch (kind) {
        case SpectralKind::ExpCutoffOhmic:
            return 0.5 * std::numbers::pi * hbar * xi * omega * std::exp(-omega / omega_c);
        case SpectralKind::LinearOhmic:
            return system_mass * gamma * omega;
    }
    return 0.0;
}

double evaluate_spectral_density(const SpectralDensity& J, double omega) { return J(omega); }

BathSpec::BathSpec(std::vector<double> masses, std::vector<double> frequencies, std::vector<double> couplings)
    : masses_(std::move(masses)), frequencies_(std::move(frequencies)), couplings_(std::move(couplings)) {
    if (frequencies_.empty()) throw std::invalid_argument("bath needs at least one mode");
    if (masses_.size() != frequencies_.size() || couplings_.size() != frequencies_.size())
        throw std::invalid_argument("bath arrays must have equal length");
    for (std::size_t i = 0; i < frequencies_.size(); ++i) {
        if (!(masses_[i] > 0.0)) throw std::invalid_argument("bath mass " + std::to_string(i) + " must be > 0");
        if (!(frequencies_[i] > 0.0))
            throw std::invalid_argument("bath frequency " + std::to_string(i) + " must be > 0");
        if (i > 0 && !(frequencies_[i] > frequencies_[i - 1]))
            throw std::invalid_argument("bath frequencies must be strictly increasing");
        if (!std::isfinite(couplings_[i])) throw std::invalid_argument("bath coupling must be finite");
    }
}

BathSpec BathSpec::scaled(double lambda) const {
    auto c = couplings_;
    for (auto& ci : c) ci *= lambda;
    return BathSpec(masses_, frequencies_, std::move(c));
}

double BathSpec::reorganization() const {
    double sum = 0.0;
    for (std::size_t i = 0; i < n_modes(); ++i) {
        const double w = frequencies_[i];
        sum += couplings_[i] * couplings_[i] / (2.0 * masses_[i] * w * w);
    }
    return sum;
}

BathPhasePoint BathPhasePoint::operator-() const {
    BathPhasePoint out{x0, p0};
    for (auto& x : out.x0) x = -x;
    for (auto& p : out.p0) p = -p;
    return out;
}

BathPhasePoint zero_phase_point(const BathSpec& bath) {
    return {std::vector<double>(bath.n_modes(), 0.0), std::vector<double>(bath.n_modes(), 0.0)};
}

BathSpec discretize_linear_ohmic(std::size_t n_modes, double omega_f, double gamma, double mode_mass,
                                 double system_mass) {
    if (n_modes < 1) throw std::invalid_argument("need at least one bath mode");
    if (!(omega_f > 0.0)) throw std::invalid_argument("omega_f must be > 0");
    const double dw = omega_f / static_cast<double>(n_modes);
    const double unit = std::sqrt(2.0 * mode_mass * system_mass * gamma * dw * dw * dw / std::numbers::pi);
    std::vector<double> m(n_modes, mode_mass), w(n_modes), c(n_modes);
    for (std::size_t i = 0; i < n_modes; ++i) {
        const double index = static_cast<double>(i + 1);
        w[i] = index * dw;
        c[i] = index * unit;
    }
    return BathSpec(std::move(m), std::move(w), std::move(c));
}

BathSpec discretize_exp_cutoff(std::size_t n_modes, double omega_max, const SpectralDensity& J,
                               double mode_mass) {
    if (J.kind != SpectralKind::ExpCutoffOhmic)
        throw std::invalid_argument("discretize_exp_cutoff needs an exp-cutoff spectral density");
    if (n_modes < 1) throw std::invalid_argument("need at least one bath mode");
    if (!(omega_max > 0.0)) throw std::invalid_argument("omega_max must be > 0");
    const double dw = omega_max / static_cast<double>(n_modes);
    std::vector<double> m(n_modes, mode_mass), w(n_modes), c(n_modes);
    for (std::size_t i = 0; i < n_modes; ++i) {
        w[i] = static_cast<double>(i + 1) * dw;
        c[i] = std::sqrt(2.0 / std::numbers::pi * mode_mass * w[i] * J(w[i]) * dw);
    }
    return BathSpec(std::move(m), std::move(w), std::move(c));
}

BathSpec discretize(const SpectralDensity& J, std::size_t n_modes, double omega_max, double mode_mass) {
    if (J.kind == SpectralKind::LinearOhmic)
        return discretize_linear_ohmic(n_modes, omega_max, J.gamma, mode_mass, J.system_mass);
    return discretize_exp_cutoff(n_modes, omega_max, J, mode_mass);
}

WignerVariance wigner_variance(double mass, double omega, double beta) {
    if (!(beta > 0.0)) throw std::domain_error("inverse temperature must be > 0");
    const double t = std::isinf(beta) ? 1.0 : std::tanh(0.5 * kHbar * omega * beta);
    return {kHbar / (2.0 * mass * omega * t), mass * omega * kHbar / (2.0 * t)};
}

BathPhasePoint sample_wigner(const BathSpec& bath, double beta, std::uint64_t seed, std::uint64_t sample_index) {
    if (!(beta > 0.0)) throw std::domain_error("inverse temperature must be > 0");
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(sample_index), static_cast<std::uint32_t>(sample_index >> 32)};
    std::mt19937_64 engine(seq);
    std::normal_distribution<double> normal(0.0, 1.0);

    BathPhasePoint point = zero_phase_point(bath);
    for (std::size_t i = 0; i < bath.n_modes(); ++i) {
        const auto var = wigner_variance(bath.masses()[i], bath.frequencies()[i], beta);
        point.x0[i] = std::sqrt(var.position) * normal(engine);
        point.p0[i] = std::sqrt(var.momentum) * normal(engine);
    }
    return point;
}

BathPhasePoint equilibrium_placement(const BathSpec& bath, const sys::SystemSpec& system, double s0) {
    const double f = sys::coupling_eval(system, s0).value;
    BathPhasePoint point = zero_phase_point(bath);
    for (std::size_t i = 0; i < bath.n_modes(); ++i) {
        const double w = bath.frequencies()[i];
        point.x0[i] = bath.couplings()[i] * f / (bath.masses()[i] * w * w);
    }
    return point;
}

}  // namespace fbsc::bath
