#pragma once

#include <complex>
#include <type_traits>

#include <Eigen/Dense>

namespace fbsc {

using cplx = std::complex<double>;

// Action units. Everything in the library works in units where hbar = 1.
inline constexpr double kHbar = 1.0;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename T>
struct is_complex : std::false_type {};
template <typename T>
struct is_complex<std::complex<T>> : std::true_type {};
template <typename T>
inline constexpr bool is_complex_v = is_complex<T>::value;

}  // namespace fbsc
