#include "fbsc/factorization.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace fbsc {

namespace {

lapack_int sytrf(Matrix<double>& a, std::vector<lapack_int>& ipiv) {
    return LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', static_cast<lapack_int>(a.rows()), a.data(),
                          static_cast<lapack_int>(a.outerStride()), ipiv.data());
}

lapack_int sytrf(Matrix<cplx>& a, std::vector<lapack_int>& ipiv) {
    return LAPACKE_zsytrf(LAPACK_COL_MAJOR, 'L', static_cast<lapack_int>(a.rows()), a.data(),
                          static_cast<lapack_int>(a.outerStride()), ipiv.data());
}

lapack_int sytrs(const Matrix<double>& a, const std::vector<lapack_int>& ipiv, Vector<double>& b) {
    return LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', static_cast<lapack_int>(a.rows()), 1, a.data(),
                          static_cast<lapack_int>(a.outerStride()), ipiv.data(), b.data(),
                          static_cast<lapack_int>(b.size()));
}

lapack_int sytrs(const Matrix<cplx>& a, const std::vector<lapack_int>& ipiv, Vector<cplx>& b) {
    return LAPACKE_zsytrs(LAPACK_COL_MAJOR, 'L', static_cast<lapack_int>(a.rows()), 1, a.data(),
                          static_cast<lapack_int>(a.outerStride()), ipiv.data(), b.data(),
                          static_cast<lapack_int>(b.size()));
}

double real_part(double x) { return x; }
double real_part(cplx x) { return x.real(); }

}  // namespace

template <typename Scalar>
SymmetricFactorization<Scalar>::SymmetricFactorization(Matrix<Scalar> a) : factors_(std::move(a)) {
    const Eigen::Index n = factors_.rows();
    if (n == 0 || factors_.cols() != n) return;
    std::vector<lapack_int> ipiv(static_cast<std::size_t>(n));
    const lapack_int info = sytrf(factors_, ipiv);
    if (info < 0) return;
    pivots_.assign(ipiv.begin(), ipiv.end());

    block_eigenvalues_.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        if (ipiv[static_cast<std::size_t>(k)] > 0) {
            block_eigenvalues_.push_back(factors_(k, k));
            continue;
        }
        const Scalar a11 = factors_(k, k);
        const Scalar a21 = factors_(k + 1, k);
        const Scalar a22 = factors_(k + 1, k + 1);
        const Scalar mean = 0.5 * (a11 + a22);
        const Scalar half = 0.5 * (a11 - a22);
        const Scalar disc = std::sqrt(half * half + a21 * a21);
        block_eigenvalues_.push_back(mean + disc);
        block_eigenvalues_.push_back(mean - disc);
        ++k;
    }
    ok_ = info == 0 && std::all_of(block_eigenvalues_.begin(), block_eigenvalues_.end(), [](Scalar d) {
              return std::isfinite(std::abs(d)) && std::abs(d) > 0.0;
          });
}

template <typename Scalar>
Inertia SymmetricFactorization<Scalar>::inertia(double relative_tolerance) const {
    Inertia out;
    double largest = 0.0;
    for (const auto& d : block_eigenvalues_) largest = std::max(largest, std::abs(d));
    for (const auto& d : block_eigenvalues_) {
        if (std::abs(d) <= relative_tolerance * largest) {
            ++out.zero;
        } else if (real_part(d) > 0.0) {
            ++out.positive;
        } else {
            ++out.negative;
        }
    }
    return out;
}

template <typename Scalar>
double SymmetricFactorization<Scalar>::pivot_ratio() const {
    if (block_eigenvalues_.empty()) return 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& d : block_eigenvalues_) {
        lo = std::min(lo, std::abs(d));
        hi = std::max(hi, std::abs(d));
    }
    return hi > 0.0 ? lo / hi : 0.0;
}

template <typename Scalar>
cplx SymmetricFactorization<Scalar>::log_fresnel() const {
    const cplx minus_i(0.0, -1.0);
    cplx sum = 0.0;
    for (const auto& d : block_eigenvalues_) sum += -0.5 * std::log(minus_i * cplx(d));
    return sum;
}

template <typename Scalar>
double SymmetricFactorization<Scalar>::log_abs_det() const {
    double sum = 0.0;
    for (const auto& d : block_eigenvalues_) sum += std::log(std::abs(d));
    return sum;
}

template <typename Scalar>
Vector<Scalar> SymmetricFactorization<Scalar>::solve(const Vector<Scalar>& rhs) const {
    Vector<Scalar> x = rhs;
    std::vector<lapack_int> ipiv(pivots_.begin(), pivots_.end());
    sytrs(factors_, ipiv, x);
    return x;
}

template class SymmetricFactorization<double>;
template class SymmetricFactorization<cplx>;

}  // namespace fbsc
