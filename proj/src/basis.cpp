#include "bnmr/basis.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bnmr {

namespace {

void check_order(int order) {
    if (order < 1) {
        throw std::domain_error("Bernstein order must be >= 1, got " + std::to_string(order));
    }
}

void check_unit(double x) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::domain_error("x must lie in [0,1], got " + std::to_string(x));
    }
}

}  // namespace

std::vector<double> bernstein_row(double x, int order) {
    check_order(order);
    check_unit(x);
    std::vector<double> row(static_cast<std::size_t>(order) + 1, 0.0);
    if (x == 0.0) {
        row.front() = 1.0;
        return row;
    }
    if (x == 1.0) {
        row.back() = 1.0;
        return row;
    }
    const double log_x = std::log(x);
    const double log_1mx = std::log1p(-x);
    const double lg_m = std::lgamma(order + 1.0);
    for (int k = 0; k <= order; ++k) {
        const double log_binom = lg_m - std::lgamma(k + 1.0) - std::lgamma(order - k + 1.0);
        row[k] = std::exp(log_binom + k * log_x + (order - k) * log_1mx);
    }
    return row;
}

IncrementTransform IncrementTransform::build(int order) {
    check_order(order);
    const int p = order + 1;
    IncrementTransform t;
    t.a_matrix = Eigen::MatrixXi::Identity(p, p);
    for (int k = 1; k < p; ++k) t.a_matrix(k, k - 1) = -1;
    t.a_inverse = Eigen::MatrixXi::Zero(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j <= i; ++j) t.a_inverse(i, j) = 1;
    return t;
}

Eigen::MatrixXd apply_increment_inverse(const Eigen::MatrixXd& psi) {
    Eigen::MatrixXd out(psi.rows(), psi.cols());
    if (psi.cols() == 0) return out;
    const Eigen::Index last = psi.cols() - 1;
    out.col(last) = psi.col(last);
    for (Eigen::Index j = last - 1; j >= 0; --j) out.col(j) = out.col(j + 1) + psi.col(j);
    return out;
}

BasisSet build_basis_set(std::span<const double> x_grid, int order) {
    check_order(order);
    const auto n = static_cast<Eigen::Index>(x_grid.size());
    BasisSet b;
    b.order = order;
    b.x_grid.assign(x_grid.begin(), x_grid.end());
    b.psi.resize(n, order + 1);
    b.dpsi.resize(n, order);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto row = bernstein_row(x_grid[i], order);
        for (int k = 0; k <= order; ++k) b.psi(i, k) = row[k];
        if (order == 1) {
            b.dpsi(i, 0) = 1.0;
        } else {
            const auto lower = bernstein_row(x_grid[i], order - 1);
            for (int k = 0; k < order; ++k) b.dpsi(i, k) = order * lower[k];
        }
    }
    b.lambda = apply_increment_inverse(b.psi);
    // Partition of unity makes column 0 exactly one; remove accumulated rounding.
    b.lambda.col(0).setOnes();
    return b;
}

Eigen::VectorXd evaluate_f(const BasisSet& basis, const Eigen::VectorXd& theta) {
    if (theta.size() != basis.order + 1) {
        throw std::invalid_argument("theta has length " + std::to_string(theta.size()) +
                                    ", expected " + std::to_string(basis.order + 1));
    }
    return basis.lambda * theta;
}

Eigen::VectorXd evaluate_derivative(const BasisSet& basis, const Eigen::VectorXd& theta) {
    if (theta.size() != basis.order + 1) {
        throw std::invalid_argument("theta has length " + std::to_string(theta.size()) +
                                    ", expected " + std::to_string(basis.order + 1));
    }
    return basis.dpsi * theta.tail(basis.order);
}

}  // namespace bnmr
