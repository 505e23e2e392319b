#ifndef TECHLAND_NEGATIVE_SAMPLING_HPP
#define TECHLAND_NEGATIVE_SAMPLING_HPP

#include "techland/common.hpp"

#include <algorithm>
#include <span>

namespace techland {

/// Skip-gram style objective shared by the document and graph embedders:
///
///   L = -log sigma(a . b) - sum_n log sigma(-a . c_n)
///
/// `negatives` holds one candidate c_n per row.
template <typename DerivedA, typename DerivedB, typename DerivedN>
typename DerivedA::Scalar negative_sampling_loss(const Eigen::MatrixBase<DerivedA>& anchor,
                                                 const Eigen::MatrixBase<DerivedB>& positive,
                                                 const Eigen::MatrixBase<DerivedN>& negatives) {
    using Scalar = typename DerivedA::Scalar;
    Scalar loss = -clamped_log(sigmoid(anchor.dot(positive)));
    for (Eigen::Index n = 0; n < negatives.rows(); ++n) {
        loss -= clamped_log(sigmoid(-anchor.dot(negatives.row(n).transpose())));
    }
    return loss;
}

template <typename Scalar>
struct NegativeSamplingGradient {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> anchor;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> positive;
    RowMatrix<Scalar> negatives; // one row per negative
};

/// Analytic gradient of negative_sampling_loss (ignoring the log clamp).
template <typename DerivedA, typename DerivedB, typename DerivedN>
NegativeSamplingGradient<typename DerivedA::Scalar>
negative_sampling_gradient(const Eigen::MatrixBase<DerivedA>& anchor,
                           const Eigen::MatrixBase<DerivedB>& positive,
                           const Eigen::MatrixBase<DerivedN>& negatives) {
    using Scalar = typename DerivedA::Scalar;
    NegativeSamplingGradient<Scalar> grad;
    const Scalar pos_coeff = sigmoid(anchor.dot(positive)) - Scalar(1);
    grad.anchor = pos_coeff * positive;
    grad.positive = pos_coeff * anchor;
    grad.negatives.resize(negatives.rows(), anchor.size());
    for (Eigen::Index n = 0; n < negatives.rows(); ++n) {
        const Scalar coeff = sigmoid(anchor.dot(negatives.row(n).transpose()));
        grad.anchor += coeff * negatives.row(n).transpose();
        grad.negatives.row(n) = coeff * anchor.transpose();
    }
    return grad;
}

/// Draws indices proportionally to nonnegative weights (inverse CDF on a cumulative table).
class DiscreteSampler {
public:
    DiscreteSampler() = default;

    explicit DiscreteSampler(std::span<const double> weights) : cumulative_(weights.size()) {
        double total = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (weights[i] < 0.0) {
                throw std::invalid_argument("DiscreteSampler: negative weight");
            }
            total += weights[i];
            cumulative_[i] = total;
        }
        if (!(total > 0.0)) {
            throw std::invalid_argument("DiscreteSampler: weights sum to zero");
        }
    }

    std::size_t operator()(Rng& rng) const {
        const double target = uniform01(rng) * cumulative_.back();
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
        if (it == cumulative_.end()) {
            --it;
        }
        // upper_bound never lands on a zero-weight entry.
        return static_cast<std::size_t>(it - cumulative_.begin());
    }

    std::size_t size() const { return cumulative_.size(); }
    bool empty() const { return cumulative_.empty(); }

private:
    std::vector<double> cumulative_;
};

} // namespace techland

#endif // TECHLAND_NEGATIVE_SAMPLING_HPP
