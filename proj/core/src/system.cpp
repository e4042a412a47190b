#include "fbsc/system.hpp"

#include <stdexcept>

namespace fbsc::sys {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

void SystemSpec::validate() const {
    if (!(mass > 0.0)) throw std::invalid_argument("system mass must be > 0");
    std::visit(overloaded{[](const Harmonic& h) {
                              if (!(h.omega > 0.0)) throw std::invalid_argument("harmonic Omega must be > 0");
                          },
                          [](const Morse& m) {
                              if (!(m.depth > 0.0) || !(m.range > 0.0))
                                  throw std::invalid_argument("Morse D and a must be > 0");
                          },
                          [](const Quadratic&) {}},
               potential);
    std::visit(overloaded{[](const LinearCoupling&) {},
                          [](const MorseCoupling& c) {
                              if (!(c.range > 0.0)) throw std::invalid_argument("Morse coupling a must be > 0");
                          },
                          [](const AffineCoupling&) {}},
               coupling);
}

bool SystemSpec::is_quadratic() const {
    const bool quadratic_potential = !std::holds_alternative<Morse>(potential);
    const bool affine_coupling = !std::holds_alternative<MorseCoupling>(coupling);
    return quadratic_potential && affine_coupling;
}

SystemSpec SystemSpec::linearized() const {
    const double s0 = potential_minimum();
    const auto v = potential_eval(*this, s0);
    const auto f = coupling_eval(*this, s0);
    SystemSpec out = *this;
    // Expansion about s0 rewritten as a polynomial in s.
    out.potential = Quadratic{v.value - v.d1 * s0 + 0.5 * v.d2 * s0 * s0, v.d1 - v.d2 * s0, v.d2};
    out.coupling = AffineCoupling{f.value - f.d1 * s0, f.d1};
    return out;
}

double SystemSpec::harmonic_frequency() const {
    const double curvature = potential_eval(*this, potential_minimum()).d2;
    if (!(curvature > 0.0)) throw std::domain_error("potential has no positive curvature at its minimum");
    return std::sqrt(curvature / mass);
}

double morse_frequency(double depth, double range, double mass) {
    if (!(depth > 0.0) || !(range > 0.0) || !(mass > 0.0))
        throw std::invalid_argument("Morse frequency needs D, a, M > 0");
    return range * std::sqrt(2.0 * depth / mass);
}

std::pair<double, double> counter_term_eval(const SystemSpec& sys, const bath::BathSpec& bath, double s) {
    const auto f = coupling_eval(sys, s);
    const double kappa = bath.reorganization();
    return {kappa * f.value * f.value, 2.0 * kappa * f.value * f.d1};
}

}  // namespace fbsc::sys
