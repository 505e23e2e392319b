#ifndef TECHLAND_PROJECT_HPP
#define TECHLAND_PROJECT_HPP

#include "techland/common.hpp"

#include <string>
#include <vector>

namespace techland {

/// Exact t-SNE settings. Early exaggeration multiplies P for the first
/// `exaggeration_iterations`; momentum switches at `momentum_switch`.
struct TsneConfig {
    double perplexity = 30.0;
    int iterations = 1000;
    double exaggeration = 12.0;
    int exaggeration_iterations = 250;
    double learning_rate = 200.0;
    double initial_momentum = 0.5;
    double final_momentum = 0.8;
    int momentum_switch = 250;
    double init_stddev = 1e-4;
    int calibration_iterations = 50;
    std::uint64_t seed = 1;
};

template <typename Scalar>
struct PerplexityRow {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> probabilities; // p_{j|i} over the given neighbors
    Scalar beta = Scalar(1);                                // Gaussian precision 1 / (2 sigma^2)
    Scalar perplexity = Scalar(0);                          // achieved 2^H
    int iterations = 0;
    bool converged = false;
};

/// Binary search on the Gaussian precision so the row's perplexity 2^H matches
/// `target` within `tolerance`. `squared_distances` excludes the point itself.
/// Non-convergence keeps the best bandwidth found and reports converged = false.
template <typename Derived>
PerplexityRow<typename Derived::Scalar>
perplexity_calibration(const Eigen::MatrixBase<Derived>& squared_distances, typename Derived::Scalar target,
                       int max_iterations = 50, typename Derived::Scalar tolerance = 1e-5) {
    using Scalar = typename Derived::Scalar;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    const Eigen::Index m = squared_distances.size();
    if (m < 1) {
        throw std::invalid_argument("perplexity_calibration: empty row");
    }
    if (!(target > Scalar(0)) || !(target < Scalar(m))) {
        throw std::invalid_argument("perplexity_calibration: perplexity must be in (0, n - 1)");
    }
    const Vector shifted = squared_distances.array() - squared_distances.minCoeff();
    const Scalar log_target = std::log(target);

    auto evaluate = [&](Scalar beta, Vector& p) {
        p = (-beta * shifted.array()).exp();
        const Scalar sum = p.sum();
        p /= sum;
        return std::log(sum) + beta * p.dot(shifted); // entropy in nats
    };

    PerplexityRow<Scalar> row;
    const Scalar mean = shifted.mean();
    Scalar beta = mean > Scalar(0) ? Scalar(1) / mean : Scalar(1);
    Scalar lo = Scalar(0);
    Scalar hi = std::numeric_limits<Scalar>::infinity();
    Scalar best_gap = std::numeric_limits<Scalar>::infinity();
    Vector p;
    for (int it = 0; it < max_iterations; ++it) {
        const Scalar entropy = evaluate(beta, p);
        const Scalar achieved = std::exp(entropy);
        const Scalar gap = std::abs(achieved - target);
        row.iterations = it + 1;
        if (gap < best_gap) {
            best_gap = gap;
            row.probabilities = p;
            row.beta = beta;
            row.perplexity = achieved;
        }
        if (gap < tolerance) {
            row.converged = true;
            break;
        }
        if (entropy > log_target) {
            lo = beta;
            beta = std::isinf(hi) ? beta * Scalar(2) : (beta + hi) / Scalar(2);
        } else {
            hi = beta;
            beta = (beta + lo) / Scalar(2);
        }
    }
    return row;
}

/// Pairwise squared Euclidean distances between rows.
template <typename Derived>
RowMatrix<typename Derived::Scalar> squared_distances(const Eigen::MatrixBase<Derived>& points) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = points.rows();
    RowMatrix<Scalar> d(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d(i, i) = Scalar(0);
        for (Eigen::Index j = i + 1; j < n; ++j) {
            d(i, j) = d(j, i) = (points.row(i) - points.row(j)).squaredNorm();
        }
    }
    return d;
}

/// KL(P || Q) with Q the Student-t similarities of the embedding `y`.
template <typename DerivedP, typename DerivedY>
typename DerivedY::Scalar kl_divergence(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedY>& y) {
    using Scalar = typename DerivedY::Scalar;
    const Eigen::Index n = y.rows();
    RowMatrix<Scalar> num(n, n);
    Scalar z = Scalar(0);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            num(i, j) = i == j ? Scalar(0) : Scalar(1) / (Scalar(1) + (y.row(i) - y.row(j)).squaredNorm());
            z += num(i, j);
        }
    }
    Scalar kl = Scalar(0);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i != j && p(i, j) > Scalar(0)) {
                kl += p(i, j) * std::log(p(i, j) / std::max(num(i, j) / z, Scalar(1e-300)));
            }
        }
    }
    return kl;
}

/// dKL/dy_i = 4 sum_j (p_ij - q_ij) (y_i - y_j) / (1 + |y_i - y_j|^2).
template <typename DerivedP, typename DerivedY>
RowMatrix<typename DerivedY::Scalar> kl_gradient(const Eigen::MatrixBase<DerivedP>& p,
                                                 const Eigen::MatrixBase<DerivedY>& y) {
    using Scalar = typename DerivedY::Scalar;
    const Eigen::Index n = y.rows();
    RowMatrix<Scalar> num(n, n);
    Scalar z = Scalar(0);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            num(i, j) = i == j ? Scalar(0) : Scalar(1) / (Scalar(1) + (y.row(i) - y.row(j)).squaredNorm());
            z += num(i, j);
        }
    }
    RowMatrix<Scalar> grad = RowMatrix<Scalar>::Zero(n, y.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i != j) {
                grad.row(i) += Scalar(4) * (p(i, j) - num(i, j) / z) * num(i, j) * (y.row(i) - y.row(j));
            }
        }
    }
    return grad;
}

/// Symmetric joint probabilities P = (P_{j|i} + P_{i|j}) / 2n from high-dimensional points.
RowMatrixXd joint_probabilities(const RowMatrixXd& points, double perplexity, int calibration_iterations = 50,
                                std::vector<std::string>* warnings = nullptr);

struct Projection2D {
    std::vector<std::string> nodes;
    RowMatrixXd coordinates;        // n x 2
    TsneConfig config;
    double kl_divergence = 0.0;     // final, without exaggeration
    std::vector<double> kl_trace;   // KL before each update (true P)
    std::vector<std::string> warnings;
};

/// Exact O(n^2) t-SNE with momentum, adaptive gains and early exaggeration.
Projection2D tsne(const RowMatrixXd& points, const std::vector<std::string>& nodes, const TsneConfig& config);

/// Trustworthiness of a low-dimensional embedding at neighborhood size k, in [0, 1].
double trustworthiness(const RowMatrixXd& high, const RowMatrixXd& low, int k);

} // namespace techland

#endif // TECHLAND_PROJECT_HPP
