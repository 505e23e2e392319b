#ifndef TECHLAND_GRAPHEMBED_HPP
#define TECHLAND_GRAPHEMBED_HPP

#include "techland/common.hpp"
#include "techland/corpus.hpp"
#include "techland/negative_sampling.hpp"
#include "techland/textembed.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace techland {

using Eigen::Index;

/// Hyperparameters of the inductive neighborhood-aggregation embedder.
struct SageConfig {
    int depth = 2;                        // K
    std::vector<int> sample_sizes{32, 32}; // neighbors drawn for layer k = 1..K
    int hidden_dim = 32;
    int output_dim = 32;
    std::string nonlinearity = "sigmoid";
    std::string aggregator = "mean";

    // Unsupervised link-prediction objective.
    int negatives = 5;       // Q per positive pair, drawn from degree^0.75
    int walk_length = 5;     // nodes per walk, including the start
    int walks_per_node = 10;
    int window = 2;

    double learning_rate = 0.005;
    int epochs = 20;
    int batch_size = 64;
    std::string optimizer = "adam"; // adam | sgd

    NeighborPolicy policy = NeighborPolicy::undirected;
    bool weighted_sampling = false; // neighbor draws proportional to w
    bool weighted_walks = false;
    bool full_neighborhood = false; // aggregate every neighbor instead of sampling
    bool frozen_samples = false;    // same neighbor sample for a (node, layer) on every pass
    bool standardize_features = true; // z-score each feature column before the first layer (pipeline stage)

    std::uint64_t seed = 1;

    /// Throws InputError on inconsistent settings.
    void validate() const;

    /// Layer widths [input, hidden..., output], length depth + 1.
    std::vector<int> layer_dims(int input_dim) const;
};

struct FeatureScaling {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale; // population standard deviation; 1 for constant columns
};

/// Replaces every column by its z-scores. Constant columns become zero.
FeatureScaling standardize_columns(RowMatrixXd& values);

/// One weight matrix per layer; layer k maps CONCAT(h_self, h_neigh) to its output width.
struct SageModel {
    std::vector<Eigen::MatrixXd> weights; // weights[k-1] is (out_k, 2 * in_k)

    int depth() const { return static_cast<int>(weights.size()); }
    int input_dim() const { return static_cast<int>(weights.front().cols() / 2); }
    int output_dim() const { return static_cast<int>(weights.back().rows()); }
};

/// Xavier-uniform initialization from the seeded generator.
SageModel init_model(const SageConfig& config, int input_dim, std::uint64_t seed);

struct EmbeddingSpace {
    std::vector<DomainCode> nodes;
    RowMatrixXd vectors;          // row v is z_v
    std::vector<bool> degenerate; // zero before normalization; left as zero
};

/// Exactly `size` draws. Without replacement when the neighborhood has at least
/// `size` members, with replacement otherwise. An isolated node samples itself.
std::vector<Index> sample_neighbors(const Neighborhood& neighborhood, Index self, int size, Rng& rng,
                                    bool weighted);

/// Elementwise mean of the given rows.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 1, Eigen::Dynamic>
aggregate_mean(const Eigen::MatrixBase<Derived>& rows) {
    if (rows.rows() == 0) {
        throw std::invalid_argument("aggregate_mean: empty neighbor set");
    }
    return rows.colwise().sum() / static_cast<typename Derived::Scalar>(rows.rows());
}

/// Decides which neighbors a node aggregates at a given layer.
class NeighborSampler {
public:
    NeighborSampler(const std::vector<Neighborhood>& neighborhoods, const SageConfig& config,
                    std::uint64_t seed);

    std::vector<Index> draw(Index node, int layer);

private:
    const std::vector<Neighborhood>* neighborhoods_;
    std::vector<int> sample_sizes_;
    bool weighted_;
    bool full_;
    bool frozen_;
    std::uint64_t seed_;
    Rng rng_;
};

/// Hidden states of every node after each layer: layers[0] = x, layers[K] = z.
std::vector<RowMatrixXd> forward_layers(const std::vector<Neighborhood>& neighborhoods,
                                        const RowMatrixXd& features, const SageModel& model,
                                        NeighborSampler& sampler);

EmbeddingSpace forward(const DomainGraph& graph, const SemanticFeatures& features, const SageModel& model,
                       const SageConfig& config, std::uint64_t seed);

/// Co-occurrence pairs (walk[i], walk[j]) with 0 < j - i <= window over random walks.
/// Pairs (v, v) from self-loop walks are kept; training drops them.
std::vector<std::pair<Index, Index>> positive_pairs(const std::vector<Neighborhood>& neighborhoods,
                                                    int walk_length, int walks_per_node, int window,
                                                    std::uint64_t seed, bool weighted = false);

/// L = -log sigma(z_u . z_v) - sum_n log sigma(-z_u . z_n), log arguments clamped at 1e-12.
template <typename DerivedU, typename DerivedV, typename DerivedN>
typename DerivedU::Scalar unsupervised_loss(const Eigen::MatrixBase<DerivedU>& z_u,
                                            const Eigen::MatrixBase<DerivedV>& z_v,
                                            const Eigen::MatrixBase<DerivedN>& negatives);

struct TrainingExample {
    Index anchor;
    Index positive;
    std::vector<Index> negatives;
};

struct BatchObjective {
    double loss = 0.0;                      // mean over examples
    std::vector<Eigen::MatrixXd> gradients; // d loss / d W^k
};

/// Mean unsupervised loss of a minibatch and its gradient w.r.t. every W^k,
/// backpropagated through the sampled computation graph.
BatchObjective evaluate_batch(const RowMatrixXd& features, const SageModel& model,
                              std::span<const TrainingExample> batch, NeighborSampler& sampler);

struct TrainingResult {
    SageModel model;
    EmbeddingSpace embeddings;
    std::vector<double> epoch_loss;
};

/// Minibatch descent on the unsupervised loss over random-walk co-occurrence pairs.
TrainingResult train(const DomainGraph& graph, const SemanticFeatures& features, const SageConfig& config);

/// Same as train(), starting from a given model (learning rate 0 leaves it untouched).
TrainingResult train(const DomainGraph& graph, const SemanticFeatures& features, const SageConfig& config,
                     SageModel initial);

template <typename DerivedU, typename DerivedV, typename DerivedN>
typename DerivedU::Scalar unsupervised_loss(const Eigen::MatrixBase<DerivedU>& z_u,
                                            const Eigen::MatrixBase<DerivedV>& z_v,
                                            const Eigen::MatrixBase<DerivedN>& negatives) {
    if (z_u.size() != z_v.size() || (negatives.rows() > 0 && negatives.cols() != z_u.size())) {
        throw std::invalid_argument("unsupervised_loss: dimension mismatch");
    }
    return negative_sampling_loss(z_u, z_v, negatives);
}

} // namespace techland

#endif // TECHLAND_GRAPHEMBED_HPP
