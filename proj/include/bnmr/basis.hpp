#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace bnmr {

/// Bernstein basis of order M evaluated at x: entry k is C(M,k) x^k (1-x)^(M-k).
/// Throws std::domain_error if x is outside [0,1] or M < 1.
std::vector<double> bernstein_row(double x, int order);

/// Maps Bernstein coefficients beta to increments theta (theta_0 = beta_0,
/// theta_k = beta_k - beta_{k-1}). Monotone nondecreasing f <=> theta_k >= 0 for k >= 1.
struct IncrementTransform {
    Eigen::MatrixXi a_matrix;   // 1 on the diagonal, -1 on the subdiagonal
    Eigen::MatrixXi a_inverse;  // lower-triangular ones

    static IncrementTransform build(int order);
};

/// Dense design matrices for a fixed order and x grid.
struct BasisSet {
    int order = 0;
    std::vector<double> x_grid;
    Eigen::MatrixXd psi;     // n x (M+1), Bernstein basis
    Eigen::MatrixXd lambda;  // n x (M+1), psi * A^{-1}: column j = sum_{k>=j} psi_k
    Eigen::MatrixXd dpsi;    // n x M, M * Bernstein basis of order M-1

    int n() const { return static_cast<int>(x_grid.size()); }
};

BasisSet build_basis_set(std::span<const double> x_grid, int order);

/// f = lambda * theta.
Eigen::VectorXd evaluate_f(const BasisSet& basis, const Eigen::VectorXd& theta);

/// f' = dpsi * theta[1..M]; the intercept theta_0 does not contribute.
Eigen::VectorXd evaluate_derivative(const BasisSet& basis, const Eigen::VectorXd& theta);

/// Reverse cumulative sum: column j of psi*A^{-1} without materializing A^{-1}.
Eigen::MatrixXd apply_increment_inverse(const Eigen::MatrixXd& psi);

}  // namespace bnmr
