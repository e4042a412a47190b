#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace fbsc::sys {
struct SystemSpec;
}

namespace fbsc::bath {

enum class SpectralKind { ExpCutoffOhmic, LinearOhmic };

// J(w) = (pi/2) hbar xi w exp(-w/wc)   (ExpCutoffOhmic)
// J(w) = M gamma w                     (LinearOhmic)
struct SpectralDensity {
    SpectralKind kind{SpectralKind::ExpCutoffOhmic};
    double xi{0.0};
    double omega_c{1.0};
    double system_mass{1.0};
    double gamma{0.0};
    double hbar{1.0};

    static SpectralDensity exp_cutoff(double xi, double omega_c);
    static SpectralDensity linear_ohmic(double system_mass, double gamma);

    double operator()(double omega) const;
};

double evaluate_spectral_density(const SpectralDensity& J, double omega);

// Discrete harmonic bath. Frequencies are strictly increasing.
class BathSpec {
public:
    BathSpec(std::vector<double> masses, std::vector<double> frequencies, std::vector<double> couplings);

    std::size_t n_modes() const noexcept { return frequencies_.size(); }
    const std::vector<double>& masses() const noexcept { return masses_; }
    const std::vector<double>& frequencies() const noexcept { return frequencies_; }
    const std::vector<double>& couplings() const noexcept { return couplings_; }

    // Same modes with every c_i multiplied by lambda (coupling continuation).
    BathSpec scaled(double lambda) const;

    // sum_i c_i^2 / (2 m_i w_i^2): the counter-term coefficient and the
    // static reorganization strength.
    double reorganization() const;

private:
    std::vector<double> masses_;
    std::vector<double> frequencies_;
    std::vector<double> couplings_;
};

struct BathPhasePoint {
    std::vector<double> x0;
    std::vector<double> p0;

    BathPhasePoint operator-() const;
};

BathPhasePoint zero_phase_point(const BathSpec& bath);

// w_i = i dw, dw = omega_f / n, c_i = i sqrt(2 m M gamma dw^3 / pi).
BathSpec discretize_linear_ohmic(std::size_t n_modes, double omega_f, double gamma, double mode_mass,
                                 double system_mass);

// Equally spaced modes with c_i^2 = (2/pi) m w_i J(w_i) dw.
BathSpec discretize_exp_cutoff(std::size_t n_modes, double omega_max, const SpectralDensity& J,
                               double mode_mass);

// Discretize whichever kind J is, using the matching rule above.
BathSpec discretize(const SpectralDensity& J, std::size_t n_modes, double omega_max, double mode_mass);

inline constexpr double kGroundState = std::numeric_limits<double>::infinity();

// Thermal Wigner sample. beta = kGroundState gives the zero-point distribution.
// The draw is a pure function of (seed, sample_index).
BathPhasePoint sample_wigner(const BathSpec& bath, double beta, std::uint64_t seed,
                             std::uint64_t sample_index = 0);

struct WignerVariance {
    double position;
    double momentum;
};
WignerVariance wigner_variance(double mass, double omega, double beta);

// Oscillators at rest at the minimum of m w^2 x^2 / 2 - c f(s0) x.
BathPhasePoint equilibrium_placement(const BathSpec& bath, const sys::SystemSpec& system, double s0);

}  // namespace fbsc::bath
