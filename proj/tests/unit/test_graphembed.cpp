#include "support/oracles.hpp"

#include "techland/graphembed.hpp"

#include <doctest.h>

#include <map>
#include <set>

using namespace techland;

namespace {

SageConfig full_config(int depth, int hidden, int output) {
    SageConfig c;
    c.depth = depth;
    c.sample_sizes.assign(static_cast<std::size_t>(depth), 4);
    c.hidden_dim = hidden;
    c.output_dim = output;
    c.full_neighborhood = true;
    return c;
}

double max_abs_diff(const RowMatrixXd& a, const oracle::Mat& b) {
    double worst = 0.0;
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            worst = std::max(worst, std::abs(a(r, c) - b[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]));
        }
    }
    return worst;
}

SemanticFeatures features_for(const DomainGraph& g, RowMatrixXd values) { return {g.nodes, std::move(values)}; }

} // namespace

TEST_CASE("defaults: K=2, sample sizes 32, mean aggregator, sigmoid, 32-d output") {
    const SageConfig c;
    CHECK(c.depth == 2);
    CHECK(c.sample_sizes == std::vector<int>{32, 32});
    CHECK(c.aggregator == "mean");
    CHECK(c.nonlinearity == "sigmoid");
    CHECK(c.output_dim == 32);
    CHECK(c.hidden_dim == 32);
    CHECK(c.layer_dims(64) == std::vector<int>{64, 32, 32});
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("config validation") {
    SageConfig c;
    c.sample_sizes = {32};
    CHECK_THROWS_AS(c.validate(), InputError);
    c = SageConfig{};
    c.depth = 0;
    c.sample_sizes = {};
    CHECK_THROWS_AS(c.validate(), InputError);
    c = SageConfig{};
    c.aggregator = "lstm";
    CHECK_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("sample_neighbors: forced repetition and without-replacement branch") {
    Rng rng(1);
    Neighborhood single{{1}, {1.0}, false};
    CHECK(sample_neighbors(single, 0, 3, rng, false) == std::vector<Index>{1, 1, 1});

    Neighborhood isolated{{}, {}, true};
    CHECK(sample_neighbors(isolated, 7, 3, rng, false) == std::vector<Index>{7, 7, 7});

    Neighborhood big;
    for (Index i = 0; i < 50; ++i) {
        big.nodes.push_back(i);
        big.weights.push_back(1.0 + static_cast<double>(i));
    }
    for (bool weighted : {false, true}) {
        const auto draw = sample_neighbors(big, 99, 32, rng, weighted);
        CHECK(draw.size() == 32);
        CHECK(std::set<Index>(draw.begin(), draw.end()).size() == 32);
    }
}

TEST_CASE("sample_neighbors: weighted draw frequency") {
    Rng rng(17);
    Neighborhood nb{{0, 1}, {0.9, 0.1}, false};
    int first = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        first += sample_neighbors(nb, 5, 1, rng, true).front() == 0 ? 1 : 0;
    }
    CHECK(static_cast<double>(first) / draws == doctest::Approx(0.9).epsilon(0.02 / 0.9));
    // With replacement: more draws than neighbors.
    first = 0;
    int total = 0;
    for (int i = 0; i < 2000; ++i) {
        for (Index u : sample_neighbors(nb, 5, 5, rng, true)) {
            first += u == 0 ? 1 : 0;
            ++total;
        }
    }
    CHECK(std::abs(static_cast<double>(first) / total - 0.9) < 0.02);
}

TEST_CASE("aggregate_mean") {
    RowMatrixXd one(1, 2);
    one << 1, 0;
    CHECK(aggregate_mean(one) == Eigen::RowVector2d(1, 0));
    RowMatrixXd two(2, 2);
    two << 1, 0, 0, 1;
    CHECK(aggregate_mean(two) == Eigen::RowVector2d(0.5, 0.5));

    Rng rng(3);
    const auto five = oracle::gaussian_matrix(5, 7, rng);
    const Eigen::RowVectorXd mean = aggregate_mean(five);
    for (Eigen::Index c = 0; c < 7; ++c) {
        double acc = 0.0;
        for (Eigen::Index r = 0; r < 5; ++r) {
            acc += five(r, c);
        }
        CHECK(std::abs(mean(c) - acc / 5.0) < 1e-12);
    }
    CHECK_THROWS(aggregate_mean(RowMatrixXd(0, 3)));
}

TEST_CASE("forward: single self-loop node hand case") {
    const auto g = graph_from_edges({"A"}, {{0, 0, 1}});
    RowMatrixXd x(1, 2);
    x << 1, 0;
    SageModel model;
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 4);
    w.leftCols(2).setIdentity();
    model.weights.push_back(w);
    const auto space = forward(g, features_for(g, x), model, full_config(1, 2, 2), 1);
    CHECK(space.vectors(0, 0) == doctest::Approx(0.825411).epsilon(1e-5));
    CHECK(space.vectors(0, 1) == doctest::Approx(0.564531).epsilon(1e-5));
    CHECK(std::abs(space.vectors(0, 0) - 0.825411) < 1e-5);
    CHECK(std::abs(space.vectors(0, 1) - 0.564531) < 1e-5);
}

TEST_CASE("forward: full-neighborhood pass equals the straight-line oracle on small graphs") {
    Rng rng(11);
    int cases = 0;
    for (int n = 1; n <= 6; ++n) {
        for (int trial = 0; trial < 8; ++trial) {
            for (int depth : {1, 2, 3}) {
                const auto g = oracle::random_graph(n, 0.4, rng);
                const int in_dim = 1 + static_cast<int>(uniform_index(rng, 5));
                const auto x = oracle::gaussian_matrix(n, in_dim, rng);
                const auto config = full_config(depth, 3, 4);
                const auto model = init_model(config, in_dim, 100 + static_cast<std::uint64_t>(trial));
                for (auto policy : {NeighborPolicy::undirected, NeighborPolicy::out_edges}) {
                    auto c = config;
                    c.policy = policy;
                    const auto nbhds = neighborhoods(g, policy);
                    std::vector<oracle::Mat> w;
                    for (const auto& wk : model.weights) {
                        w.push_back(oracle::to_mat(wk));
                    }
                    const auto expected = oracle::sage_forward(oracle::neighbor_lists(nbhds), oracle::to_mat(x), w);
                    const auto got = forward(g, features_for(g, x), model, c, 5);
                    CHECK(max_abs_diff(got.vectors, expected) < 1e-6);
                    ++cases;
                }
            }
        }
    }
    CHECK(cases == 6 * 8 * 3 * 2);
}

TEST_CASE("forward: every layer is unit-normalized") {
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(uniform_index(rng, 20));
        const auto g = oracle::random_graph(n, 0.2, rng);
        const auto x = oracle::gaussian_matrix(n, 6, rng);
        SageConfig c;
        c.sample_sizes = {3, 5};
        c.hidden_dim = 8;
        c.output_dim = 5;
        c.full_neighborhood = trial % 2 == 0;
        const auto model = init_model(c, 6, static_cast<std::uint64_t>(trial));
        const auto nbhds = neighborhoods(g, c.policy);
        NeighborSampler sampler(nbhds, c, 9);
        const auto layers = forward_layers(nbhds, x, model, sampler);
        REQUIRE(layers.size() == 3);
        for (std::size_t k = 1; k < layers.size(); ++k) {
            for (Eigen::Index v = 0; v < n; ++v) {
                CHECK(std::abs(layers[k].row(v).norm() - 1.0) < 1e-6);
            }
        }
    }
}

TEST_CASE("forward: dimension and node-order mismatches are errors") {
    const auto g = graph_from_edges({"A", "B"}, {{0, 1, 1}});
    const SageConfig c = full_config(1, 2, 2);
    const auto model = init_model(c, 3, 1);
    CHECK_THROWS_AS(forward(g, features_for(g, RowMatrixXd::Ones(2, 4)), model, c, 1), InputError);
    SemanticFeatures swapped{{"B", "A"}, RowMatrixXd::Ones(2, 3)};
    CHECK_THROWS_AS(forward(g, swapped, model, c, 1), InputError);
}

TEST_CASE("forward: seed determinism and frozen samples") {
    Rng rng(4);
    const auto g = oracle::random_graph(30, 0.2, rng);
    const auto x = oracle::gaussian_matrix(30, 5, rng);
    SageConfig c;
    c.sample_sizes = {3, 3};
    c.hidden_dim = 4;
    c.output_dim = 4;
    const auto model = init_model(c, 5, 8);
    const auto a = forward(g, features_for(g, x), model, c, 77);
    const auto b = forward(g, features_for(g, x), model, c, 77);
    CHECK(a.vectors == b.vectors);

    c.frozen_samples = true;
    const auto nbhds = neighborhoods(g, c.policy);
    NeighborSampler s1(nbhds, c, 5);
    NeighborSampler s2(nbhds, c, 5);
    const auto first = s1.draw(3, 1);
    CHECK(s1.draw(3, 1) == first);
    (void)s2.draw(7, 2);
    CHECK(s2.draw(3, 1) == first);
}

TEST_CASE("positive_pairs: forced walks and degenerate self-loop") {
    const auto path = graph_from_edges({"A", "B"}, {{0, 1, 1}});
    const auto pairs = positive_pairs(neighborhoods(path, NeighborPolicy::undirected), 2, 1, 1, 3);
    CHECK(std::find(pairs.begin(), pairs.end(), std::pair<Index, Index>{0, 1}) != pairs.end());
    for (const auto& [u, v] : pairs) {
        CHECK(u != v);
    }

    const auto lonely = graph_from_edges({"A"}, {});
    const auto self = positive_pairs(neighborhoods(lonely, NeighborPolicy::undirected), 3, 2, 2, 3);
    CHECK_FALSE(self.empty());
    for (const auto& [u, v] : self) {
        CHECK(u == 0);
        CHECK(v == 0);
    }
}

TEST_CASE("positive_pairs: triangle edge frequencies are uniform") {
    const auto tri = graph_from_edges({"A", "B", "C"}, {{0, 1, 1}, {1, 2, 1}, {2, 0, 1}});
    const auto pairs = positive_pairs(neighborhoods(tri, NeighborPolicy::undirected), 2, 3334, 1, 21);
    std::map<std::pair<Index, Index>, int> freq;
    for (auto [u, v] : pairs) {
        freq[{std::min(u, v), std::max(u, v)}]++;
    }
    REQUIRE(freq.size() == 3);
    const double expected = static_cast<double>(pairs.size()) / 3.0;
    for (const auto& [edge, count] : freq) {
        CHECK(std::abs(count - expected) / expected < 0.03);
    }
}

TEST_CASE("unsupervised_loss: closed forms and scalar oracle") {
    Eigen::VectorXd z(3);
    z << 0.6, 0.8, 0.0;
    const Eigen::MatrixXd none(0, 3);
    CHECK(std::abs(unsupervised_loss(z, z, none) - 0.313261687518222) < 1e-9);
    Eigen::VectorXd ortho(3);
    ortho << -0.8, 0.6, 0.0;
    CHECK(std::abs(unsupervised_loss(z, ortho, none) - std::log(2.0)) < 1e-9);

    Rng rng(8);
    for (int c = 0; c < 5; ++c) {
        const Eigen::VectorXd u = oracle::gaussian_matrix(1, 6, rng).row(0).transpose();
        const Eigen::VectorXd v = oracle::gaussian_matrix(1, 6, rng).row(0).transpose();
        const Eigen::MatrixXd negs = oracle::gaussian_matrix(4, 6, rng);
        auto vec = [](const Eigen::VectorXd& e) { return oracle::Vec(e.data(), e.data() + e.size()); };
        oracle::Mat neg_rows;
        for (Eigen::Index r = 0; r < negs.rows(); ++r) {
            neg_rows.push_back(vec(negs.row(r).transpose()));
        }
        CHECK(std::abs(unsupervised_loss(u, v, negs) - oracle::scalar_ns_loss(vec(u), vec(v), neg_rows)) < 1e-10);
    }
    const Eigen::MatrixXd bad(1, 2);
    CHECK_THROWS(unsupervised_loss(z, z, bad));
}

TEST_CASE("gradients match central finite differences") {
    // 4-node graph, full neighborhoods, K = 2.
    const auto g = graph_from_edges({"A", "B", "C", "D"}, {{0, 1, 2}, {1, 2, 1}, {2, 3, 3}, {3, 0, 1}, {0, 2, 1}});
    Rng rng(1);
    const auto x = oracle::gaussian_matrix(4, 3, rng);
    for (bool full : {true, false}) {
        SageConfig c = full_config(2, 5, 3);
        c.full_neighborhood = full;
        c.frozen_samples = !full; // fixed samples keep the objective a deterministic function of W
        c.sample_sizes = {2, 2};
        const auto model = init_model(c, 3, 7);
        const auto nbhds = neighborhoods(g, c.policy);
        const std::vector<TrainingExample> batch{{0, 1, {2, 3}}, {2, 3, {0, 1}}, {3, 0, {1, 1}}};
        NeighborSampler s(nbhds, c, 1);
        const auto obj = evaluate_batch(x, model, batch, s);
        double worst = 0.0;
        for (std::size_t k = 0; k < model.weights.size(); ++k) {
            for (Eigen::Index i = 0; i < model.weights[k].size(); ++i) {
                auto plus = model;
                auto minus = model;
                const double h = 1e-6;
                plus.weights[k].data()[i] += h;
                minus.weights[k].data()[i] -= h;
                NeighborSampler sp(nbhds, c, 1);
                NeighborSampler sm(nbhds, c, 1);
                const double fd = (evaluate_batch(x, plus, batch, sp).loss - evaluate_batch(x, minus, batch, sm).loss) / (2 * h);
                const double an = obj.gradients[k].data()[i];
                const double scale = std::max({std::abs(fd), std::abs(an), 1e-6});
                worst = std::max(worst, std::abs(fd - an) / scale);
            }
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("train: zero learning rate leaves the model unchanged") {
    Rng rng(6);
    const auto g = oracle::random_graph(12, 0.3, rng);
    const auto x = oracle::gaussian_matrix(12, 4, rng);
    for (const char* opt : {"sgd", "adam"}) {
        SageConfig c;
        c.sample_sizes = {4, 4};
        c.hidden_dim = 6;
        c.output_dim = 6;
        c.epochs = 1;
        c.learning_rate = 0.0;
        c.optimizer = opt;
        c.frozen_samples = true;
        const auto initial = init_model(c, 4, 2);
        const auto result = train(g, features_for(g, x), c, initial);
        for (std::size_t k = 0; k < initial.weights.size(); ++k) {
            CHECK(result.model.weights[k] == initial.weights[k]);
        }
        c.epochs = 2;
        const auto twice = train(g, features_for(g, x), c, initial);
        CHECK(twice.epoch_loss.size() == 2);
        CHECK(twice.epoch_loss[0] == doctest::Approx(result.epoch_loss[0]));
    }
}

TEST_CASE("train: loss decreases, seeds reproduce, embeddings are unit vectors") {
    const auto split = oracle::two_block_graph(40, 0.3, 0.02, 0.0, 0, 5);
    Rng rng(2);
    const auto x = oracle::gaussian_matrix(40, 16, rng);
    SageConfig c;
    c.epochs = 8;
    const auto a = train(split.train, features_for(split.train, x), c);
    const auto b = train(split.train, features_for(split.train, x), c);
    CHECK(a.epoch_loss.back() <= a.epoch_loss.front());
    CHECK(a.embeddings.vectors == b.embeddings.vectors);
    CHECK(a.embeddings.vectors.cols() == 32);
    for (Eigen::Index v = 0; v < a.embeddings.vectors.rows(); ++v) {
        CHECK(std::abs(a.embeddings.vectors.row(v).norm() - 1.0) < 1e-6);
    }
    c.seed = 99;
    const auto other = train(split.train, features_for(split.train, x), c);
    CHECK(other.embeddings.vectors != a.embeddings.vectors);
}

TEST_CASE("train: non-finite features abort with diagnostics") {
    const auto g = graph_from_edges({"A", "B"}, {{0, 1, 1}, {1, 0, 1}});
    RowMatrixXd x = RowMatrixXd::Ones(2, 3);
    x(0, 1) = std::numeric_limits<double>::quiet_NaN();
    SageConfig c;
    c.epochs = 1;
    CHECK_THROWS_WITH(train(g, features_for(g, x), c), doctest::Contains("learning rate"));
}

TEST_CASE("train: a graph without edges is rejected") {
    const auto g = graph_from_edges({"A", "B"}, {});
    SageConfig c;
    CHECK_THROWS_AS(train(g, features_for(g, RowMatrixXd::Ones(2, 3)), c), InputError);
}

TEST_CASE("standardize_columns gives zero-mean unit-variance columns") {
    Rng rng(23);
    RowMatrixXd x = oracle::gaussian_matrix(30, 4, rng) * 0.01;
    x.col(1).array() += 5.0;
    x.col(3).setConstant(2.0);
    const RowMatrixXd original = x;
    const auto scaling = standardize_columns(x);
    for (Eigen::Index c = 0; c < 3; ++c) {
        CHECK(std::abs(x.col(c).mean()) < 1e-12);
        CHECK(std::abs(x.col(c).squaredNorm() / 30.0 - 1.0) < 1e-12);
    }
    CHECK(x.col(3).isZero());
    CHECK(scaling.scale(3) == 1.0);
    const RowMatrixXd restored = (x.array().rowwise() * scaling.scale.array()).rowwise() + scaling.mean.array();
    CHECK((restored - original).cwiseAbs().maxCoeff() < 1e-12);
}
