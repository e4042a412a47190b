#pragma once

#include <vector>

#include "fbsc/types.hpp"

namespace fbsc {

struct Inertia {
    int positive{0};
    int negative{0};
    int zero{0};
};

// Bunch-Kaufman factorization P A P^T = L D L^T of a symmetric (not Hermitian)
// matrix, real or complex. Only the lower triangle of the input is read.
template <typename Scalar>
class SymmetricFactorization {
public:
    SymmetricFactorization() = default;
    explicit SymmetricFactorization(Matrix<Scalar> a);

    // False when the matrix is empty or exactly singular.
    bool ok() const noexcept { return ok_; }
    Eigen::Index size() const noexcept { return factors_.rows(); }

    // Eigenvalues of the 1x1 and 2x2 diagonal blocks of D. By Sylvester's law
    // they carry the inertia of A (real case).
    const std::vector<Scalar>& block_eigenvalues() const noexcept { return block_eigenvalues_; }

    // Real case: exact inertia. Complex case: counts by sign of the real part.
    // Block eigenvalues below `relative_tolerance * max|d|` count as zero.
    Inertia inertia(double relative_tolerance = 1e-10) const;

    // min |d| / max |d| over the block eigenvalues.
    double pivot_ratio() const;

    // sum_j Log((d_j / i)^(-1/2)) with the principal branch per block
    // eigenvalue. For a real matrix this is
    //   -1/2 log|det A| + i pi (n_plus - n_minus) / 4.
    cplx log_fresnel() const;

    // log|det A|
    double log_abs_det() const;

    Vector<Scalar> solve(const Vector<Scalar>& rhs) const;
    template <typename T = Scalar>
        requires(!std::is_same_v<T, cplx>)
    Vector<cplx> solve(const Vector<cplx>& rhs) const {
        Vector<double> re = rhs.real(), im = rhs.imag();
        Vector<cplx> out(rhs.size());
        out.real() = solve(re);
        out.imag() = solve(im);
        return out;
    }
    template <typename T = Scalar>
        requires(std::is_same_v<T, cplx>)
    Vector<cplx> solve(const Vector<double>& rhs) const {
        return solve(Vector<cplx>(rhs.template cast<cplx>()));
    }

private:
    Matrix<Scalar> factors_;
    std::vector<int> pivots_;
    std::vector<Scalar> block_eigenvalues_;
    bool ok_{false};
};

extern template class SymmetricFactorization<double>;
extern template class SymmetricFactorization<cplx>;

}  // namespace fbsc
