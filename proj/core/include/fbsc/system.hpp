#pragma once

#include <cmath>
#include <type_traits>
#include <utility>
#include <variant>

#include "fbsc/bath.hpp"
#include "fbsc/types.hpp"

namespace fbsc::sys {

// V0(s) = M Omega^2 s^2 / 2
struct Harmonic {
    double omega;
};

// V0(s) = D (exp(-2 a s) - 2 exp(-a s))
struct Morse {
    double depth;
    double range;
};

// V0(s) = v0 + v1 s + v2 s^2 / 2. Produced by SystemSpec::linearized().
struct Quadratic {
    double v0;
    double v1;
    double v2;
};

// f(s) = s
struct LinearCoupling {};

// f(s) = (1 - exp(-a s)) / a
struct MorseCoupling {
    double range;
};

// f(s) = f0 + f1 s
struct AffineCoupling {
    double f0;
    double f1;
};

using Potential = std::variant<Harmonic, Morse, Quadratic>;
using Coupling = std::variant<LinearCoupling, MorseCoupling, AffineCoupling>;

struct SystemSpec {
    double mass{1.0};
    Potential potential{Harmonic{1.0}};
    Coupling coupling{LinearCoupling{}};
    bool counter_term{true};

    // Throws std::invalid_argument when a parameter is out of range.
    void validate() const;

    // Quadratic potential and affine coupling: the residual is affine in the path.
    bool is_quadratic() const;

    // Position of the potential minimum (0 for both supported families).
    double potential_minimum() const { return 0.0; }

    // Second-order expansion of V0 and first-order expansion of f about the
    // potential minimum.
    SystemSpec linearized() const;

    // Harmonic frequency at the minimum, sqrt(V0''(min)/M).
    double harmonic_frequency() const;
};

template <typename Scalar>
struct Taylor {
    Scalar value;
    Scalar d1;
    Scalar d2;
};

template <typename Scalar>
Taylor<Scalar> potential_eval(const SystemSpec& sys, Scalar s) {
    return std::visit(
        [&](const auto& p) -> Taylor<Scalar> {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, Harmonic>) {
                const double k = sys.mass * p.omega * p.omega;
                return {0.5 * k * s * s, k * s, Scalar(k)};
            } else if constexpr (std::is_same_v<P, Morse>) {
                const Scalar e1 = std::exp(-p.range * s);
                const Scalar e2 = e1 * e1;
                const double a = p.range;
                return {p.depth * (e2 - 2.0 * e1), 2.0 * p.depth * a * (e1 - e2),
                        2.0 * p.depth * a * a * (2.0 * e2 - e1)};
            } else {
                return {p.v0 + p.v1 * s + 0.5 * p.v2 * s * s, p.v1 + p.v2 * s, Scalar(p.v2)};
            }
        },
        sys.potential);
}

template <typename Scalar>
Taylor<Scalar> coupling_eval(const SystemSpec& sys, Scalar s) {
    return std::visit(
        [&](const auto& c) -> Taylor<Scalar> {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, LinearCoupling>) {
                return {s, Scalar(1.0), Scalar(0.0)};
            } else if constexpr (std::is_same_v<C, MorseCoupling>) {
                const Scalar e = std::exp(-c.range * s);
                return {(1.0 - e) / c.range, e, -c.range * e};
            } else {
                return {c.f0 + c.f1 * s, Scalar(c.f1), Scalar(0.0)};
            }
        },
        sys.coupling);
}

// Omega = a sqrt(2 D / M)
double morse_frequency(double depth, double range, double mass);

// sum_i c_i^2 f(s)^2 / (2 m_i w_i^2) and its derivative in s.
std::pair<double, double> counter_term_eval(const SystemSpec& sys, const bath::BathSpec& bath, double s);

}  // namespace fbsc::sys
