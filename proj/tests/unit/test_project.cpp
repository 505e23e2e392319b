#include "support/oracles.hpp"

#include "techland/project.hpp"

#include <doctest.h>

using namespace techland;

namespace {

// Entropy of a probability row in bits, recomputed from scratch.
double perplexity_of(const Eigen::VectorXd& p) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p(i) > 0.0) {
            h -= p(i) * std::log2(p(i));
        }
    }
    return std::exp2(h);
}

RowMatrixXd random_joint(int n, Rng& rng) {
    RowMatrixXd p(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            p(i, j) = i == j ? 0.0 : uniform01(rng);
        }
    }
    p = (p + p.transpose()).eval();
    return p / p.sum();
}

} // namespace

TEST_CASE("perplexity calibration: equidistant points give a uniform row") {
    const Eigen::Vector3d d(2.0, 2.0, 2.0);
    const auto row = perplexity_calibration(d, 2.0);
    for (int i = 0; i < 3; ++i) {
        CHECK(row.probabilities(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
}

TEST_CASE("perplexity calibration: random 50-point sets hit the target") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const RowMatrixXd x = oracle::gaussian_matrix(50, 8, rng);
        const RowMatrixXd d = squared_distances(x);
        const double target = 5.0 + 30.0 * uniform01(rng);
        for (int i = 0; i < 50; i += 7) {
            Eigen::VectorXd row(49);
            for (int j = 0, k = 0; j < 50; ++j) {
                if (j != i) {
                    row(k++) = d(i, j);
                }
            }
            const auto r = perplexity_calibration(row, target);
            CHECK(r.converged);
            CHECK(std::abs(r.probabilities.sum() - 1.0) < 1e-9);
            CHECK(std::abs(perplexity_of(r.probabilities) - target) < 1e-4);
        }
    }
}

TEST_CASE("perplexity calibration: bad targets") {
    const Eigen::Vector3d d(1.0, 2.0, 3.0);
    CHECK_THROWS(perplexity_calibration(d, 3.0));
    CHECK_THROWS(perplexity_calibration(d, 0.0));
    const auto starved = perplexity_calibration(d, 2.5, 2);
    CHECK_FALSE(starved.converged);
    CHECK(std::abs(starved.probabilities.sum() - 1.0) < 1e-12);
}

TEST_CASE("joint probabilities are symmetric, nonnegative and sum to one") {
    Rng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 5 + static_cast<int>(uniform_index(rng, 40));
        const RowMatrixXd x = oracle::gaussian_matrix(n, 6, rng);
        const RowMatrixXd p = joint_probabilities(x, std::min(10.0, n - 2.0));
        CHECK((p - p.transpose()).cwiseAbs().maxCoeff() < 1e-15);
        CHECK(p.minCoeff() >= 0.0);
        CHECK(p.diagonal().cwiseAbs().maxCoeff() == 0.0);
        CHECK(std::abs(p.sum() - 1.0) < 1e-9);
    }
}

TEST_CASE("KL gradient matches finite differences on 10-point instances") {
    Rng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        const RowMatrixXd p = random_joint(10, rng);
        const RowMatrixXd y = oracle::gaussian_matrix(10, 2, rng);
        const RowMatrixXd g = kl_gradient(p, y);
        const double h = 1e-6;
        double worst = 0.0;
        for (int i = 0; i < 10; ++i) {
            for (int d = 0; d < 2; ++d) {
                RowMatrixXd yp = y, ym = y;
                yp(i, d) += h;
                ym(i, d) -= h;
                const double fd = (kl_divergence(p, yp) - kl_divergence(p, ym)) / (2 * h);
                worst = std::max(worst, std::abs(fd - g(i, d)) / std::max({std::abs(fd), std::abs(g(i, d)), 1e-6}));
            }
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("tsne separates three Gaussian clusters") {
    // Single draws scatter a few thousandths around the bar, so the bar is
    // applied to the mean over ten fixed datasets.
    std::vector<std::string> nodes;
    for (int i = 0; i < 150; ++i) {
        nodes.push_back("N" + std::to_string(i));
    }
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const RowMatrixXd x = oracle::three_gaussians(50, 32, 4.0, seed);
        const auto proj = tsne(x, nodes, TsneConfig{});
        REQUIRE(proj.coordinates.rows() == 150);
        REQUIRE(proj.coordinates.cols() == 2);
        CHECK(proj.coordinates.allFinite());
        CHECK(proj.nodes == nodes);
        total += trustworthiness(x, proj.coordinates, 10);

        REQUIRE(proj.kl_trace.size() == 1000);
        for (std::size_t it = 251; it < proj.kl_trace.size(); ++it) {
            CHECK(proj.kl_trace[it] <= proj.kl_trace[it - 1] + 1e-6);
        }
        CHECK(proj.kl_divergence <= proj.kl_trace.back() + 1e-6);
        CHECK(proj.kl_divergence == doctest::Approx(kl_divergence(joint_probabilities(x, 30.0), proj.coordinates)));
    }
    MESSAGE("mean trustworthiness " << total / 10.0);
    CHECK(total / 10.0 >= 0.95);
}

TEST_CASE("tsne is seed-deterministic") {
    Rng rng(2);
    const RowMatrixXd x = oracle::gaussian_matrix(20, 4, rng);
    const std::vector<std::string> nodes(20, "n");
    TsneConfig c;
    c.perplexity = 5.0;
    c.iterations = 300;
    const auto a = tsne(x, nodes, c);
    const auto b = tsne(x, nodes, c);
    CHECK(a.coordinates == b.coordinates);
    c.seed = 2;
    CHECK(tsne(x, nodes, c).coordinates != a.coordinates);
}

TEST_CASE("tsne input errors and degenerate inputs") {
    const std::vector<std::string> two(2, "n");
    CHECK_THROWS_AS(tsne(RowMatrixXd::Zero(2, 3), two, TsneConfig{}), InputError);

    const std::vector<std::string> five(5, "n");
    TsneConfig c;
    c.perplexity = 4.0;
    CHECK_THROWS_AS(tsne(RowMatrixXd::Ones(5, 3), five, c), InputError);

    RowMatrixXd bad = RowMatrixXd::Ones(5, 3);
    bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
    c.perplexity = 2.0;
    CHECK_THROWS_AS(tsne(bad, five, c), InputError);

    c.iterations = 100;
    const auto same = tsne(RowMatrixXd::Ones(5, 3), five, c);
    CHECK(same.coordinates.allFinite());
    REQUIRE_FALSE(same.warnings.empty());
    CHECK(same.warnings.front().find("identical") != std::string::npos);
}

TEST_CASE("trustworthiness agrees with a rank-counting oracle") {
    Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 30 + 10 * trial;
        const int k = 3 + trial;
        const RowMatrixXd x = oracle::gaussian_matrix(n, 5, rng);
        const RowMatrixXd y = x.leftCols(2) + 0.5 * oracle::gaussian_matrix(n, 2, rng);
        double penalty = 0.0;
        for (int i = 0; i < n; ++i) {
            auto dist = [&](const RowMatrixXd& m, int j) { return (m.row(i) - m.row(j)).squaredNorm(); };
            for (int j = 0; j < n; ++j) {
                if (j == i) {
                    continue;
                }
                int low_rank = 1;
                int high_rank = 1;
                for (int l = 0; l < n; ++l) {
                    if (l != i && l != j) {
                        low_rank += dist(y, l) < dist(y, j) ? 1 : 0;
                        high_rank += dist(x, l) < dist(x, j) ? 1 : 0;
                    }
                }
                if (low_rank <= k && high_rank > k) {
                    penalty += high_rank - k;
                }
            }
        }
        const double expected = 1.0 - 2.0 / (n * k * (2.0 * n - 3.0 * k - 1.0)) * penalty;
        CHECK(trustworthiness(x, y, k) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("trustworthiness bounds") {
    Rng rng(3);
    const RowMatrixXd x = oracle::gaussian_matrix(40, 5, rng);
    CHECK(trustworthiness(x, x, 5) == doctest::Approx(1.0));
    const RowMatrixXd noise = oracle::gaussian_matrix(40, 2, rng);
    const double t = trustworthiness(x, noise, 5);
    CHECK(t < 0.75);
    CHECK(t >= 0.0);
}
