#include "techland/project.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>
#include <utility>

namespace techland {

RowMatrixXd joint_probabilities(const RowMatrixXd& points, double perplexity, int calibration_iterations,
                                std::vector<std::string>* warnings) {
    const Eigen::Index n = points.rows();
    const RowMatrixXd dist = squared_distances(points);
    RowMatrixXd conditional = RowMatrixXd::Zero(n, n);
    int unconverged = 0;
#pragma omp parallel for schedule(static) reduction(+ : unconverged)
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd others(n - 1);
        for (Eigen::Index j = 0, c = 0; j < n; ++j) {
            if (j != i) {
                others(c++) = dist(i, j);
            }
        }
        const auto row = perplexity_calibration(others, perplexity, calibration_iterations);
        if (!row.converged) {
            ++unconverged;
        }
        for (Eigen::Index j = 0, c = 0; j < n; ++j) {
            if (j != i) {
                conditional(i, j) = row.probabilities(c++);
            }
        }
    }
    if (unconverged > 0 && warnings != nullptr) {
        warnings->push_back("perplexity calibration did not converge for " + std::to_string(unconverged) +
                            " point(s); best bandwidth kept");
    }
    RowMatrixXd joint = (conditional + conditional.transpose()) / (2.0 * static_cast<double>(n));
    return joint;
}

Projection2D tsne(const RowMatrixXd& points, const std::vector<std::string>& nodes, const TsneConfig& config) {
    const Eigen::Index n = points.rows();
    if (n < 3) {
        throw InputError("tsne: need at least 3 points");
    }
    if (!nodes.empty() && static_cast<Eigen::Index>(nodes.size()) != n) {
        throw InputError("tsne: node list does not match point count");
    }
    if (!points.allFinite()) {
        throw InputError("tsne: non-finite input");
    }
    if (!(config.perplexity > 0.0) || !(config.perplexity < static_cast<double>(n - 1))) {
        throw InputError("tsne: perplexity must be in (0, n - 1) = (0, " + std::to_string(n - 1) + ")");
    }
    if (config.iterations < 0 || !(config.learning_rate > 0.0)) {
        throw InputError("tsne: invalid iteration count or learning rate");
    }

    Projection2D out;
    out.nodes = nodes;
    out.config = config;
    Rng rng(config.seed);

    RowMatrixXd input = points;
    const double spread = (input.rowwise() - input.colwise().mean()).squaredNorm();
    if (spread == 0.0) {
        for (Eigen::Index i = 0; i < input.size(); ++i) {
            input.data()[i] += 1e-8 * standard_normal(rng);
        }
        out.warnings.push_back("all input points identical; jittered by 1e-8");
    }

    const RowMatrixXd p = joint_probabilities(input, config.perplexity, config.calibration_iterations, &out.warnings);

    RowMatrixXd y(n, 2);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        y.data()[i] = config.init_stddev * standard_normal(rng);
    }
    RowMatrixXd velocity = RowMatrixXd::Zero(n, 2);
    RowMatrixXd gains = RowMatrixXd::Ones(n, 2);
    RowMatrixXd num(n, n);
    RowMatrixXd trial_num(n, n);
    RowMatrixXd grad(n, 2);
    Eigen::VectorXd row_sums(n);

    // Fills the Student-t kernel for `at` and returns {normalizer, KL(P || Q)}.
    auto evaluate = [&](const RowMatrixXd& at, RowMatrixXd& kernel) {
#pragma omp parallel for schedule(static)
        for (Eigen::Index i = 0; i < n; ++i) {
            double s = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                kernel(i, j) = i == j ? 0.0 : 1.0 / (1.0 + (at.row(i) - at.row(j)).squaredNorm());
                s += kernel(i, j);
            }
            row_sums(i) = s;
        }
        const double z = row_sums.sum();
        double kl = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                if (i != j && p(i, j) > 0.0) {
                    kl += p(i, j) * std::log(p(i, j) / std::max(kernel(i, j) / z, 1e-300));
                }
            }
        }
        return std::pair{z, kl};
    };

    auto [z, kl] = evaluate(y, num);
    RowMatrixXd trial(n, 2);
    for (int iter = 0; iter < config.iterations; ++iter) {
        out.kl_trace.push_back(kl);

        const double exaggeration = iter < config.exaggeration_iterations ? config.exaggeration : 1.0;
#pragma omp parallel for schedule(static)
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::RowVector2d g = Eigen::RowVector2d::Zero();
            for (Eigen::Index j = 0; j < n; ++j) {
                if (i != j) {
                    g += 4.0 * (exaggeration * p(i, j) - num(i, j) / z) * num(i, j) * (y.row(i) - y.row(j));
                }
            }
            grad.row(i) = g;
        }

        const double momentum = iter < config.momentum_switch ? config.initial_momentum : config.final_momentum;
        for (Eigen::Index i = 0; i < grad.size(); ++i) {
            double& gain = gains.data()[i];
            const bool same_sign = (grad.data()[i] > 0.0) == (velocity.data()[i] > 0.0);
            gain = same_sign ? gain * 0.8 : gain + 0.2;
            gain = std::max(gain, 0.01);
            velocity.data()[i] = momentum * velocity.data()[i] - config.learning_rate * gain * grad.data()[i];
        }
        trial = y + velocity;
        trial.rowwise() -= trial.colwise().mean();
        auto next = evaluate(trial, trial_num);

        // Once exaggeration is over, a step that raises KL is replaced by a
        // backtracking gradient step and the momentum state is dropped.
        if (iter >= config.exaggeration_iterations && !(next.second <= kl)) {
            velocity.setZero();
            gains.setOnes();
            double step = config.learning_rate;
            for (int halving = 0; halving < 40 && !(next.second <= kl); ++halving, step /= 2.0) {
                trial = y - step * grad;
                trial.rowwise() -= trial.colwise().mean();
                next = evaluate(trial, trial_num);
            }
            if (!(next.second <= kl)) {
                trial = y;
                next = evaluate(trial, trial_num);
            }
        }
        y.swap(trial);
        num.swap(trial_num);
        std::tie(z, kl) = next;
        if (!y.allFinite()) {
            throw std::runtime_error("tsne: embedding diverged at iteration " + std::to_string(iter));
        }
    }
    out.kl_divergence = kl;
    out.coordinates = std::move(y);
    return out;
}

double trustworthiness(const RowMatrixXd& high, const RowMatrixXd& low, int k) {
    const Eigen::Index n = high.rows();
    if (low.rows() != n) {
        throw std::invalid_argument("trustworthiness: row counts differ");
    }
    if (k < 1 || 2 * k >= n - 1) {
        throw std::invalid_argument("trustworthiness: k must satisfy 1 <= k < (n - 1) / 2");
    }
    const RowMatrixXd dh = squared_distances(high);
    const RowMatrixXd dl = squared_distances(low);
    double penalty = 0.0;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::vector<Eigen::Index> rank(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        auto sorted_by = [&](const RowMatrixXd& d) {
            std::iota(order.begin(), order.end(), Eigen::Index(0));
            std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
                if (a == i || b == i) {
                    return a == i && b != i;
                }
                return d(i, a) < d(i, b);
            });
            return order;
        };
        const auto high_order = sorted_by(dh);
        for (Eigen::Index r = 1; r < n; ++r) {
            rank[static_cast<std::size_t>(high_order[static_cast<std::size_t>(r)])] = r;
        }
        const auto low_order = sorted_by(dl);
        for (Eigen::Index r = 1; r <= k; ++r) {
            const Eigen::Index j = low_order[static_cast<std::size_t>(r)];
            const Eigen::Index rj = rank[static_cast<std::size_t>(j)];
            if (rj > k) {
                penalty += static_cast<double>(rj - k);
            }
        }
    }
    const double nk = static_cast<double>(n) * k;
    return 1.0 - 2.0 / (nk * (2.0 * static_cast<double>(n) - 3.0 * k - 1.0)) * penalty;
}

} // namespace techland
