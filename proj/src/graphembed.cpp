#include "techland/graphembed.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace techland {

namespace {

// Sampled computation graph for a set of target nodes. Level K holds the
// targets; level k-1 holds every node whose h^{k-1} feeds level k.
struct ComputationGraph {
    std::vector<std::vector<Index>> nodes;                   // nodes[k], ascending
    std::vector<std::vector<Index>> self_pos;                // self_pos[k][i]: row of nodes[k][i] in level k-1
    std::vector<std::vector<std::vector<Index>>> sample_pos; // sample_pos[k][i]: rows in level k-1
};

ComputationGraph build_computation_graph(std::vector<Index> targets, int depth, Index n_nodes,
                                         NeighborSampler& sampler) {
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

    ComputationGraph cg;
    cg.nodes.resize(static_cast<std::size_t>(depth) + 1);
    cg.self_pos.resize(cg.nodes.size());
    cg.sample_pos.resize(cg.nodes.size());
    cg.nodes[static_cast<std::size_t>(depth)] = std::move(targets);

    std::vector<Index> position(static_cast<std::size_t>(n_nodes), -1);
    for (int k = depth; k >= 1; --k) {
        const auto& level = cg.nodes[static_cast<std::size_t>(k)];
        std::vector<std::vector<Index>> drawn(level.size());
        std::vector<char> needed(static_cast<std::size_t>(n_nodes), 0);
        for (std::size_t i = 0; i < level.size(); ++i) {
            drawn[i] = sampler.draw(level[i], k);
            needed[static_cast<std::size_t>(level[i])] = 1;
            for (Index u : drawn[i]) {
                needed[static_cast<std::size_t>(u)] = 1;
            }
        }
        auto& below = cg.nodes[static_cast<std::size_t>(k) - 1];
        for (Index v = 0; v < n_nodes; ++v) {
            if (needed[static_cast<std::size_t>(v)]) {
                position[static_cast<std::size_t>(v)] = static_cast<Index>(below.size());
                below.push_back(v);
            }
        }
        auto& self_pos = cg.self_pos[static_cast<std::size_t>(k)];
        auto& sample_pos = cg.sample_pos[static_cast<std::size_t>(k)];
        self_pos.resize(level.size());
        sample_pos.resize(level.size());
        for (std::size_t i = 0; i < level.size(); ++i) {
            self_pos[i] = position[static_cast<std::size_t>(level[i])];
            sample_pos[i].reserve(drawn[i].size());
            for (Index u : drawn[i]) {
                sample_pos[i].push_back(position[static_cast<std::size_t>(u)]);
            }
        }
    }
    return cg;
}

struct ForwardCache {
    std::vector<RowMatrixXd> hidden;      // hidden[k] rows aligned with cg.nodes[k]
    std::vector<RowMatrixXd> concat;      // concat[k]: inputs of layer k (k >= 1)
    std::vector<RowMatrixXd> activation;  // sigma(W^k concat) before normalization
    std::vector<Eigen::VectorXd> norms;
};

ForwardCache run_forward(const ComputationGraph& cg, const RowMatrixXd& features, const SageModel& model) {
    const int depth = model.depth();
    ForwardCache cache;
    cache.hidden.resize(static_cast<std::size_t>(depth) + 1);
    cache.concat.resize(cache.hidden.size());
    cache.activation.resize(cache.hidden.size());
    cache.norms.resize(cache.hidden.size());

    const auto& base = cg.nodes[0];
    cache.hidden[0].resize(static_cast<Index>(base.size()), features.cols());
    for (std::size_t i = 0; i < base.size(); ++i) {
        cache.hidden[0].row(static_cast<Index>(i)) = features.row(base[i]);
    }

    for (int k = 1; k <= depth; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const auto& prev = cache.hidden[ku - 1];
        const Index in_dim = prev.cols();
        const Index rows = static_cast<Index>(cg.nodes[ku].size());
        RowMatrixXd& concat = cache.concat[ku];
        concat.resize(rows, 2 * in_dim);
        for (Index i = 0; i < rows; ++i) {
            const auto iu = static_cast<std::size_t>(i);
            concat.row(i).head(in_dim) = prev.row(cg.self_pos[ku][iu]);
            const auto& samples = cg.sample_pos[ku][iu];
            Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(in_dim);
            for (Index u : samples) {
                acc += prev.row(u);
            }
            concat.row(i).tail(in_dim) = acc / static_cast<double>(samples.size());
        }
        const auto& weights = model.weights[ku - 1];
        RowMatrixXd activation = (concat * weights.transpose()).unaryExpr([](double x) { return sigmoid(x); });
        Eigen::VectorXd norms = activation.rowwise().norm();
        RowMatrixXd hidden = activation;
        for (Index i = 0; i < rows; ++i) {
            // Only an exact zero is degenerate; NaN must reach the loss check.
            if (norms(i) == 0.0) {
                hidden.row(i).setZero();
            } else {
                hidden.row(i) /= norms(i);
            }
        }
        cache.activation[ku] = std::move(activation);
        cache.norms[ku] = std::move(norms);
        cache.hidden[ku] = std::move(hidden);
    }
    return cache;
}

// grad_top: d loss / d h^K, rows aligned with cg.nodes[K].
std::vector<Eigen::MatrixXd> run_backward(const ComputationGraph& cg, const ForwardCache& cache,
                                          const SageModel& model, RowMatrixXd grad_top) {
    const int depth = model.depth();
    std::vector<Eigen::MatrixXd> grads(static_cast<std::size_t>(depth));
    RowMatrixXd grad = std::move(grad_top);
    for (int k = depth; k >= 1; --k) {
        const auto ku = static_cast<std::size_t>(k);
        const auto& hidden = cache.hidden[ku];
        const auto& activation = cache.activation[ku];
        const auto& norms = cache.norms[ku];
        const Index rows = hidden.rows();

        // Through h = s / |s| and s = sigma(pre).
        RowMatrixXd grad_pre(rows, hidden.cols());
        for (Index i = 0; i < rows; ++i) {
            if (norms(i) == 0.0) {
                grad_pre.row(i).setZero();
                continue;
            }
            const double proj = hidden.row(i).dot(grad.row(i));
            const Eigen::RowVectorXd grad_s = (grad.row(i) - proj * hidden.row(i)) / norms(i);
            grad_pre.row(i) = grad_s.array() * activation.row(i).array() * (1.0 - activation.row(i).array());
        }
        const auto& weights = model.weights[ku - 1];
        grads[ku - 1] = grad_pre.transpose() * cache.concat[ku];
        if (k == 1) {
            break;
        }
        const RowMatrixXd grad_concat = grad_pre * weights;
        const Index in_dim = cache.hidden[ku - 1].cols();
        RowMatrixXd grad_below = RowMatrixXd::Zero(cache.hidden[ku - 1].rows(), in_dim);
        for (Index i = 0; i < rows; ++i) {
            const auto iu = static_cast<std::size_t>(i);
            grad_below.row(cg.self_pos[ku][iu]) += grad_concat.row(i).head(in_dim);
            const auto& samples = cg.sample_pos[ku][iu];
            const Eigen::RowVectorXd share = grad_concat.row(i).tail(in_dim) / static_cast<double>(samples.size());
            for (Index u : samples) {
                grad_below.row(u) += share;
            }
        }
        grad = std::move(grad_below);
    }
    return grads;
}

Index position_in(const std::vector<Index>& sorted, Index node) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), node);
    return static_cast<Index>(it - sorted.begin());
}

std::string describe_nan(double lr, int epoch, std::size_t batch) {
    std::ostringstream os;
    os << "graphembed: non-finite loss at epoch " << epoch << ", batch " << batch << " (learning rate " << lr
       << ")";
    return os.str();
}

} // namespace

void SageConfig::validate() const {
    if (depth < 1) {
        throw InputError("graphembed: depth must be >= 1");
    }
    if (static_cast<int>(sample_sizes.size()) != depth) {
        throw InputError("graphembed: sample_sizes must have one entry per layer");
    }
    for (int s : sample_sizes) {
        if (s <= 0) {
            throw InputError("graphembed: sample sizes must be positive");
        }
    }
    if (hidden_dim <= 0 || output_dim <= 0) {
        throw InputError("graphembed: layer dimensions must be positive");
    }
    if (nonlinearity != "sigmoid") {
        throw InputError("graphembed: unsupported nonlinearity '" + nonlinearity + "' (sigmoid only)");
    }
    if (aggregator != "mean") {
        throw InputError("graphembed: unsupported aggregator '" + aggregator + "' (mean only)");
    }
    if (optimizer != "sgd" && optimizer != "adam") {
        throw InputError("graphembed: optimizer must be sgd or adam");
    }
    if (negatives < 0 || walk_length < 2 || walks_per_node < 1 || window < 1) {
        throw InputError("graphembed: invalid walk or negative-sampling settings");
    }
    if (!(learning_rate >= 0.0) || epochs < 0 || batch_size < 1) {
        throw InputError("graphembed: invalid optimizer settings");
    }
}

std::vector<int> SageConfig::layer_dims(int input_dim) const {
    std::vector<int> dims{input_dim};
    for (int k = 1; k < depth; ++k) {
        dims.push_back(hidden_dim);
    }
    dims.push_back(output_dim);
    return dims;
}

SageModel init_model(const SageConfig& config, int input_dim, std::uint64_t seed) {
    config.validate();
    if (input_dim <= 0) {
        throw InputError("graphembed: input feature dimension must be positive");
    }
    Rng rng(mix_seed(seed, 1));
    const auto dims = config.layer_dims(input_dim);
    SageModel model;
    for (int k = 1; k <= config.depth; ++k) {
        const int fan_in = 2 * dims[static_cast<std::size_t>(k) - 1];
        const int fan_out = dims[static_cast<std::size_t>(k)];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (Index i = 0; i < w.size(); ++i) {
            w.data()[i] = (2.0 * uniform01(rng) - 1.0) * limit;
        }
        model.weights.push_back(std::move(w));
    }
    return model;
}

std::vector<Index> sample_neighbors(const Neighborhood& neighborhood, Index self, int size, Rng& rng,
                                    bool weighted) {
    const auto count = static_cast<std::size_t>(std::max(size, 0));
    if (neighborhood.nodes.empty()) {
        return std::vector<Index>(count, self);
    }
    const std::size_t m = neighborhood.nodes.size();
    std::vector<Index> out;
    out.reserve(count);
    if (m < count) {
        if (weighted) {
            const DiscreteSampler pick(neighborhood.weights);
            for (std::size_t i = 0; i < count; ++i) {
                out.push_back(neighborhood.nodes[pick(rng)]);
            }
        } else {
            for (std::size_t i = 0; i < count; ++i) {
                out.push_back(neighborhood.nodes[uniform_index(rng, m)]);
            }
        }
        return out;
    }
    if (weighted) {
        // Weighted sampling without replacement: largest log(u) / w keys win.
        std::vector<std::pair<double, std::size_t>> keys(m);
        for (std::size_t i = 0; i < m; ++i) {
            double u = uniform01(rng);
            while (u <= 0.0) {
                u = uniform01(rng);
            }
            keys[i] = {std::log(u) / neighborhood.weights[i], i};
        }
        std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(count), keys.end(),
                          [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
        for (std::size_t i = 0; i < count; ++i) {
            out.push_back(neighborhood.nodes[keys[i].second]);
        }
        return out;
    }
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + uniform_index(rng, m - i);
        std::swap(idx[i], idx[j]);
        out.push_back(neighborhood.nodes[idx[i]]);
    }
    return out;
}

NeighborSampler::NeighborSampler(const std::vector<Neighborhood>& neighborhoods, const SageConfig& config,
                                 std::uint64_t seed)
    : neighborhoods_(&neighborhoods),
      sample_sizes_(config.sample_sizes),
      weighted_(config.weighted_sampling),
      full_(config.full_neighborhood),
      frozen_(config.frozen_samples),
      seed_(seed),
      rng_(mix_seed(seed, 4)) {}

std::vector<Index> NeighborSampler::draw(Index node, int layer) {
    const auto& nbhd = (*neighborhoods_)[static_cast<std::size_t>(node)];
    if (full_) {
        return nbhd.nodes.empty() ? std::vector<Index>{node} : nbhd.nodes;
    }
    const int size = sample_sizes_.at(static_cast<std::size_t>(layer) - 1);
    if (frozen_) {
        Rng local(mix_seed(seed_, static_cast<std::uint64_t>(node) * 1024 + static_cast<std::uint64_t>(layer)));
        return sample_neighbors(nbhd, node, size, local, weighted_);
    }
    return sample_neighbors(nbhd, node, size, rng_, weighted_);
}

std::vector<RowMatrixXd> forward_layers(const std::vector<Neighborhood>& neighborhoods,
                                        const RowMatrixXd& features, const SageModel& model,
                                        NeighborSampler& sampler) {
    if (model.weights.empty()) {
        throw std::invalid_argument("forward: empty model");
    }
    if (features.cols() != model.input_dim()) {
        throw InputError("forward: feature dimension " + std::to_string(features.cols()) +
                         " does not match model input " + std::to_string(model.input_dim()));
    }
    if (static_cast<std::size_t>(features.rows()) != neighborhoods.size()) {
        throw InputError("forward: feature rows do not match graph size");
    }
    const Index n = features.rows();
    std::vector<Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index(0));
    const auto cg = build_computation_graph(std::move(all), model.depth(), n, sampler);
    auto cache = run_forward(cg, features, model);
    return std::move(cache.hidden);
}

EmbeddingSpace forward(const DomainGraph& graph, const SemanticFeatures& features, const SageModel& model,
                       const SageConfig& config, std::uint64_t seed) {
    if (features.nodes != graph.nodes) {
        throw InputError("forward: feature node order differs from the graph's");
    }
    const auto nbhds = neighborhoods(graph, config.policy);
    NeighborSampler sampler(nbhds, config, seed);
    auto layers = forward_layers(nbhds, features.values, model, sampler);
    EmbeddingSpace space;
    space.nodes = graph.nodes;
    space.vectors = std::move(layers.back());
    space.degenerate.resize(space.nodes.size());
    for (Index v = 0; v < space.vectors.rows(); ++v) {
        space.degenerate[static_cast<std::size_t>(v)] = space.vectors.row(v).squaredNorm() == 0.0;
    }
    return space;
}

std::vector<std::pair<Index, Index>> positive_pairs(const std::vector<Neighborhood>& neighborhoods,
                                                    int walk_length, int walks_per_node, int window,
                                                    std::uint64_t seed, bool weighted) {
    Rng rng(mix_seed(seed, 2));
    std::vector<DiscreteSampler> step_samplers;
    if (weighted) {
        step_samplers.reserve(neighborhoods.size());
        for (const auto& nbhd : neighborhoods) {
            step_samplers.push_back(nbhd.nodes.empty() ? DiscreteSampler() : DiscreteSampler(nbhd.weights));
        }
    }
    std::vector<std::pair<Index, Index>> pairs;
    std::vector<Index> walk;
    for (Index start = 0; start < static_cast<Index>(neighborhoods.size()); ++start) {
        for (int w = 0; w < walks_per_node; ++w) {
            walk.assign(1, start);
            while (static_cast<int>(walk.size()) < walk_length) {
                const Index cur = walk.back();
                const auto& nbhd = neighborhoods[static_cast<std::size_t>(cur)];
                if (nbhd.nodes.empty()) {
                    walk.push_back(cur);
                } else if (weighted) {
                    walk.push_back(nbhd.nodes[step_samplers[static_cast<std::size_t>(cur)](rng)]);
                } else {
                    walk.push_back(nbhd.nodes[uniform_index(rng, nbhd.nodes.size())]);
                }
            }
            for (std::size_t i = 0; i < walk.size(); ++i) {
                for (std::size_t j = i + 1; j < walk.size() && j <= i + static_cast<std::size_t>(window); ++j) {
                    pairs.emplace_back(walk[i], walk[j]);
                }
            }
        }
    }
    return pairs;
}

BatchObjective evaluate_batch(const RowMatrixXd& features, const SageModel& model,
                              std::span<const TrainingExample> batch, NeighborSampler& sampler) {
    BatchObjective result;
    if (batch.empty()) {
        for (const auto& w : model.weights) {
            result.gradients.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
        }
        return result;
    }
    std::vector<Index> targets;
    for (const auto& ex : batch) {
        targets.push_back(ex.anchor);
        targets.push_back(ex.positive);
        targets.insert(targets.end(), ex.negatives.begin(), ex.negatives.end());
    }
    const auto cg = build_computation_graph(std::move(targets), model.depth(), features.rows(), sampler);
    const auto cache = run_forward(cg, features, model);
    const auto& top_nodes = cg.nodes.back();
    const auto& z = cache.hidden.back();

    RowMatrixXd grad_top = RowMatrixXd::Zero(z.rows(), z.cols());
    const double scale = 1.0 / static_cast<double>(batch.size());
    RowMatrixXd negs;
    for (const auto& ex : batch) {
        const Index a = position_in(top_nodes, ex.anchor);
        const Index p = position_in(top_nodes, ex.positive);
        negs.resize(static_cast<Index>(ex.negatives.size()), z.cols());
        std::vector<Index> neg_pos(ex.negatives.size());
        for (std::size_t q = 0; q < ex.negatives.size(); ++q) {
            neg_pos[q] = position_in(top_nodes, ex.negatives[q]);
            negs.row(static_cast<Index>(q)) = z.row(neg_pos[q]);
        }
        const Eigen::VectorXd za = z.row(a).transpose();
        const Eigen::VectorXd zp = z.row(p).transpose();
        result.loss += scale * unsupervised_loss(za, zp, negs);
        const auto g = negative_sampling_gradient(za, zp, negs);
        grad_top.row(a) += scale * g.anchor.transpose();
        grad_top.row(p) += scale * g.positive.transpose();
        for (std::size_t q = 0; q < neg_pos.size(); ++q) {
            grad_top.row(neg_pos[q]) += scale * g.negatives.row(static_cast<Index>(q));
        }
    }
    result.gradients = run_backward(cg, cache, model, std::move(grad_top));
    return result;
}

TrainingResult train(const DomainGraph& graph, const SemanticFeatures& features, const SageConfig& config) {
    config.validate();
    return train(graph, features, config,
                 init_model(config, static_cast<int>(features.values.cols()), config.seed));
}

TrainingResult train(const DomainGraph& graph, const SemanticFeatures& features, const SageConfig& config,
                     SageModel initial) {
    config.validate();
    if (features.nodes != graph.nodes) {
        throw InputError("graphembed: feature node order differs from the graph's");
    }
    if (features.values.cols() != initial.input_dim()) {
        throw InputError("graphembed: feature dimension does not match the model");
    }
    const auto nbhds = neighborhoods(graph, config.policy);
    std::vector<double> degree_weights(nbhds.size());
    for (std::size_t v = 0; v < nbhds.size(); ++v) {
        degree_weights[v] = std::pow(static_cast<double>(nbhds[v].nodes.size()), 0.75);
    }
    if (std::all_of(degree_weights.begin(), degree_weights.end(), [](double w) { return w == 0.0; })) {
        throw InputError("graphembed: graph has no edges");
    }
    const DiscreteSampler negative_sampler(degree_weights);

    TrainingResult result;
    result.model = std::move(initial);
    NeighborSampler sampler(nbhds, config, config.seed);
    Rng rng(mix_seed(config.seed, 3));

    std::vector<Eigen::MatrixXd> adam_m;
    std::vector<Eigen::MatrixXd> adam_v;
    for (const auto& w : result.model.weights) {
        adam_m.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
        adam_v.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    }
    long adam_step = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        auto pairs = positive_pairs(nbhds, config.walk_length, config.walks_per_node, config.window,
                                    mix_seed(config.seed, 100 + static_cast<std::uint64_t>(epoch)),
                                    config.weighted_walks);
        std::erase_if(pairs, [](const auto& p) { return p.first == p.second; });
        std::shuffle(pairs.begin(), pairs.end(), rng);

        std::vector<TrainingExample> examples;
        examples.reserve(pairs.size());
        for (const auto& [u, v] : pairs) {
            TrainingExample ex{u, v, {}};
            for (int q = 0; q < config.negatives; ++q) {
                ex.negatives.push_back(static_cast<Index>(negative_sampler(rng)));
            }
            examples.push_back(std::move(ex));
        }

        double epoch_loss = 0.0;
        const auto batch_size = static_cast<std::size_t>(config.batch_size);
        for (std::size_t start = 0, batch_index = 0; start < examples.size(); start += batch_size, ++batch_index) {
            const std::size_t len = std::min(batch_size, examples.size() - start);
            const std::span<const TrainingExample> batch(examples.data() + start, len);
            auto objective = evaluate_batch(features.values, result.model, batch, sampler);
            if (!std::isfinite(objective.loss)) {
                throw std::runtime_error(describe_nan(config.learning_rate, epoch, batch_index));
            }
            epoch_loss += objective.loss * static_cast<double>(len);
            if (config.optimizer == "adam") {
                ++adam_step;
                constexpr double b1 = 0.9;
                constexpr double b2 = 0.999;
                const double c1 = 1.0 - std::pow(b1, static_cast<double>(adam_step));
                const double c2 = 1.0 - std::pow(b2, static_cast<double>(adam_step));
                for (std::size_t k = 0; k < result.model.weights.size(); ++k) {
                    const auto& g = objective.gradients[k];
                    adam_m[k] = b1 * adam_m[k] + (1.0 - b1) * g;
                    adam_v[k] = b2 * adam_v[k] + (1.0 - b2) * g.cwiseProduct(g);
                    result.model.weights[k].array() -= config.learning_rate * (adam_m[k].array() / c1) /
                                                       ((adam_v[k].array() / c2).sqrt() + 1e-8);
                }
            } else {
                for (std::size_t k = 0; k < result.model.weights.size(); ++k) {
                    result.model.weights[k] -= config.learning_rate * objective.gradients[k];
                }
            }
        }
        result.epoch_loss.push_back(examples.empty() ? 0.0 : epoch_loss / static_cast<double>(examples.size()));
    }
    result.embeddings = forward(graph, features, result.model, config, mix_seed(config.seed, 5));
    return result;
}

FeatureScaling standardize_columns(RowMatrixXd& values) {
    FeatureScaling scaling;
    scaling.mean = values.colwise().mean();
    values.rowwise() -= scaling.mean;
    scaling.scale = (values.colwise().squaredNorm() / static_cast<double>(std::max<Eigen::Index>(values.rows(), 1)))
                        .cwiseSqrt();
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
        if (!(scaling.scale(c) > 0.0)) {
            scaling.scale(c) = 1.0;
        }
    }
    values.array().rowwise() /= scaling.scale.array();
    return scaling;
}

} // namespace techland
