#include "fbsc/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace fbsc {

namespace {

// Golub-Welsch: nodes are the eigenvalues of the symmetric Jacobi matrix,
// weights mu0 * (first eigenvector component)^2.
QuadratureRule golub_welsch(const Eigen::VectorXd& off_diagonal, double mu0) {
    const Eigen::Index n = off_diagonal.size() + 1;
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        jacobi(k, k + 1) = off_diagonal(k);
        jacobi(k + 1, k) = off_diagonal(k);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        const double v = solver.eigenvectors()(0, k);
        rule.nodes[static_cast<std::size_t>(k)] = solver.eigenvalues()(k);
        rule.weights[static_cast<std::size_t>(k)] = mu0 * v * v;
    }
    return rule;
}

}  // namespace

QuadratureRule gauss_legendre(std::size_t n) {
    if (n == 0) throw std::invalid_argument("quadrature rule needs at least one node");
    if (n == 1) return {{0.0}, {2.0}};
    Eigen::VectorXd beta(static_cast<Eigen::Index>(n - 1));
    for (Eigen::Index k = 1; k < static_cast<Eigen::Index>(n); ++k) {
        const double kk = static_cast<double>(k);
        beta(k - 1) = kk / std::sqrt(4.0 * kk * kk - 1.0);
    }
    return golub_welsch(beta, 2.0);
}

QuadratureRule gauss_hermite(std::size_t n) {
    if (n == 0) throw std::invalid_argument("quadrature rule needs at least one node");
    if (n == 1) return {{0.0}, {std::sqrt(std::numbers::pi)}};
    Eigen::VectorXd beta(static_cast<Eigen::Index>(n - 1));
    for (Eigen::Index k = 1; k < static_cast<Eigen::Index>(n); ++k) beta(k - 1) = std::sqrt(0.5 * static_cast<double>(k));
    return golub_welsch(beta, std::sqrt(std::numbers::pi));
}

}  // namespace fbsc
