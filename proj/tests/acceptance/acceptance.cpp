// Acceptance suite: one PASS/FAIL line per primary criterion. Exits nonzero
// when any criterion fails. Usage: acceptance <work-dir>

#include "support/oracles.hpp"

#include "techland/analyze.hpp"
#include "techland/artifacts.hpp"
#include "techland/corpus.hpp"
#include "techland/graphembed.hpp"
#include "techland/landscape.hpp"
#include "techland/nber.hpp"
#include "techland/project.hpp"
#include "techland/synthetic.hpp"
#include "techland/textembed.hpp"

#include <chrono>
#include <functional>
#include <iomanip>
#include <iostream>

using namespace techland;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool condition, const std::string& what) {
        if (!condition) {
            pass = false;
            detail << "[failed: " << what << "] ";
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

fs::path g_work;

// Weight matrix: random count matrices and the hand-tallied fixture.
void weight_matrix(Outcome& out) {
    Rng rng(101);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(uniform_index(rng, 40));
        const auto g = oracle::random_graph(n, uniform01(rng) * 0.5, rng);
        const Eigen::MatrixXd w = Eigen::MatrixXd(g.weights);
        const Eigen::MatrixXd c = Eigen::MatrixXd(g.counts.cast<double>());
        for (int r = 0; r < n; ++r) {
            const double row_total = c.row(r).sum();
            if (row_total == 0.0) {
                out.require(w.row(r).isZero() && g.isolated_out[static_cast<std::size_t>(r)], "zero row handling");
                continue;
            }
            worst = std::max(worst, std::abs(w.row(r).sum() - 1.0));
            for (int k = 0; k < n; ++k) {
                out.require(w(r, k) == c(r, k) / row_total, "w = c / row sum");
            }
        }
    }
    out.require(worst <= 1e-9, "row sums");

    const auto dir = fs::path(TECHLAND_FIXTURES) / "tiny";
    const auto manifest = nlohmann::json::parse(oracle::read_file(dir / "manifest.json"));
    const auto input = ingest(dir / "patents.jsonl", dir / "citations.csv", dir / "domains.csv");
    const auto nodes = input.catalog.codes();
    const auto graph = build_domain_graph(nodes, build_domain_counts(input.corpus, input.citations.pairs, nodes));
    const auto counts = manifest["counts"].get<std::vector<std::vector<std::int64_t>>>();
    const auto weights = manifest["weights"].get<std::vector<std::vector<double>>>();
    bool exact = true;
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
            const auto ri = static_cast<Eigen::Index>(r);
            const auto ci = static_cast<Eigen::Index>(c);
            exact = exact && graph.counts.coeff(ri, ci) == counts[r][c];
            exact = exact && std::abs(graph.weights.coeff(ri, ci) - weights[r][c]) <= 1e-15;
        }
    }
    out.require(exact, "tiny fixture");
    out.detail << "100 random matrices, max |row sum - 1| = " << worst << "; tiny fixture exact";
}

SageConfig full_neighborhood_config(int depth, int hidden, int output) {
    SageConfig c;
    c.depth = depth;
    c.sample_sizes.assign(static_cast<std::size_t>(depth), 4);
    c.hidden_dim = hidden;
    c.output_dim = output;
    c.full_neighborhood = true;
    return c;
}

void forward_pass_oracle(Outcome& out) {
    Rng rng(202);
    double worst = 0.0;
    int cases = 0;
    for (int n = 1; n <= 6; ++n) {
        for (int trial = 0; trial < 10; ++trial) {
            for (int depth : {1, 2}) {
                const auto g = oracle::random_graph(n, 0.4, rng);
                const int in_dim = 1 + static_cast<int>(uniform_index(rng, 6));
                const auto x = oracle::gaussian_matrix(n, in_dim, rng);
                for (auto policy : {NeighborPolicy::undirected, NeighborPolicy::out_edges}) {
                    auto c = full_neighborhood_config(depth, 5, 4);
                    c.policy = policy;
                    const auto model = init_model(c, in_dim, static_cast<std::uint64_t>(1000 + trial));
                    std::vector<oracle::Mat> w;
                    for (const auto& wk : model.weights) {
                        w.push_back(oracle::to_mat(wk));
                    }
                    const auto expected =
                        oracle::sage_forward(oracle::neighbor_lists(neighborhoods(g, policy)), oracle::to_mat(x), w);
                    const auto got = forward(g, {g.nodes, x}, model, c, 3);
                    for (int v = 0; v < n; ++v) {
                        for (Eigen::Index d = 0; d < got.vectors.cols(); ++d) {
                            worst = std::max(worst, std::abs(got.vectors(v, d) -
                                                             expected[static_cast<std::size_t>(v)][static_cast<std::size_t>(d)]));
                        }
                    }
                    ++cases;
                }
            }
        }
    }
    out.require(worst < 1e-6, "oracle agreement");

    const auto single = graph_from_edges({"A"}, {{0, 0, 1}});
    SageModel model;
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 4);
    w.leftCols(2).setIdentity();
    model.weights.push_back(w);
    RowMatrixXd x(1, 2);
    x << 1, 0;
    const auto z = forward(single, {single.nodes, x}, model, full_neighborhood_config(1, 2, 2), 1).vectors;
    out.require(std::abs(z(0, 0) - 0.825411) <= 1e-5 && std::abs(z(0, 1) - 0.564531) <= 1e-5, "hand case");
    out.detail << cases << " fixtures (n <= 6), max deviation " << worst << "; hand case [" << std::setprecision(6)
               << z(0, 0) << ", " << z(0, 1) << "]";
}

void normalization(Outcome& out) {
    Rng rng(303);
    double worst = 0.0;
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 1 + static_cast<int>(uniform_index(rng, 30));
        const auto g = oracle::random_graph(n, 0.15, rng);
        const auto x = oracle::gaussian_matrix(n, 8, rng);
        SageConfig c;
        c.sample_sizes = {3, 4};
        c.hidden_dim = 6;
        c.output_dim = 5;
        c.full_neighborhood = trial % 2 == 1;
        const auto nbhds = neighborhoods(g, c.policy);
        NeighborSampler sampler(nbhds, c, static_cast<std::uint64_t>(trial));
        const auto layers = forward_layers(nbhds, x, init_model(c, 8, static_cast<std::uint64_t>(trial)), sampler);
        for (std::size_t k = 1; k < layers.size(); ++k) {
            for (int v = 0; v < n; ++v) {
                worst = std::max(worst, std::abs(layers[k].row(v).norm() - 1.0));
            }
        }
    }
    out.require(worst <= 1e-6, "fixtures");

    // The end-to-end criterion below writes the embeddings this check reads.
    const auto run_dir = g_work / "e2e" / "run1";
    if (!fs::exists(run_dir / "embeddings.tsv")) {
        out.require(false, "end-to-end embeddings missing");
        return;
    }
    const auto e2e = artifacts::read_keyed_matrix(run_dir / "embeddings.tsv");
    const auto report = artifacts::read_json(run_dir / "graphembed_report.json");
    const std::set<std::string> degenerate(report["degenerate"].begin(), report["degenerate"].end());
    double worst_e2e = 0.0;
    for (std::size_t v = 0; v < e2e.keys.size(); ++v) {
        if (!degenerate.count(e2e.keys[v])) {
            worst_e2e = std::max(worst_e2e, std::abs(e2e.values.row(static_cast<Eigen::Index>(v)).norm() - 1.0));
        }
    }
    out.require(worst_e2e <= 1e-6, "end-to-end run");
    out.detail << "fixtures max |norm - 1| = " << worst << "; synthetic run " << worst_e2e << " over "
               << e2e.keys.size() - degenerate.size() << " nodes";
}

void loss_and_gradients(Outcome& out) {
    Eigen::VectorXd z(2);
    z << 1.0, 0.0;
    Eigen::VectorXd ortho(2);
    ortho << 0.0, 1.0;
    const Eigen::MatrixXd none(0, 2);
    const double same = unsupervised_loss(z, z, none);
    const double orth = unsupervised_loss(z, ortho, none);
    out.require(std::abs(same - 0.313261687518222) < 1e-9, "-log sigma(1)");
    out.require(std::abs(orth - std::log(2.0)) < 1e-9, "log 2");

    const auto g = graph_from_edges({"A", "B", "C", "D"}, {{0, 1, 2}, {1, 2, 1}, {2, 3, 3}, {3, 0, 1}, {0, 2, 1}});
    Rng rng(404);
    const auto x = oracle::gaussian_matrix(4, 3, rng);
    double worst_sage = 0.0;
    for (bool full : {true, false}) {
        SageConfig c = full_neighborhood_config(2, 5, 3);
        c.full_neighborhood = full;
        c.frozen_samples = !full;
        c.sample_sizes = {2, 2};
        const auto model = init_model(c, 3, 17);
        const auto nbhds = neighborhoods(g, c.policy);
        const std::vector<TrainingExample> batch{{0, 1, {2, 3}}, {2, 3, {0, 1}}, {1, 0, {3, 2}}};
        NeighborSampler s(nbhds, c, 2);
        const auto obj = evaluate_batch(x, model, batch, s);
        for (std::size_t k = 0; k < model.weights.size(); ++k) {
            for (Eigen::Index i = 0; i < model.weights[k].size(); ++i) {
                auto plus = model;
                auto minus = model;
                const double h = 1e-6;
                plus.weights[k].data()[i] += h;
                minus.weights[k].data()[i] -= h;
                NeighborSampler sp(nbhds, c, 2);
                NeighborSampler sm(nbhds, c, 2);
                const double fd =
                    (evaluate_batch(x, plus, batch, sp).loss - evaluate_batch(x, minus, batch, sm).loss) / (2 * h);
                const double an = obj.gradients[k].data()[i];
                worst_sage = std::max(worst_sage, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6}));
            }
        }
    }
    out.require(worst_sage < 1e-4, "graphembed gradient");

    double worst_tsne = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        RowMatrixXd p(10, 10);
        for (int i = 0; i < 10; ++i) {
            for (int j = 0; j < 10; ++j) {
                p(i, j) = i == j ? 0.0 : uniform01(rng);
            }
        }
        p = (p + p.transpose()).eval() / (2.0 * p.sum());
        const RowMatrixXd y = oracle::gaussian_matrix(10, 2, rng);
        const RowMatrixXd grad = kl_gradient(p, y);
        for (int i = 0; i < 10; ++i) {
            for (int d = 0; d < 2; ++d) {
                RowMatrixXd yp = y, ym = y;
                yp(i, d) += 1e-6;
                ym(i, d) -= 1e-6;
                const double fd = (kl_divergence(p, yp) - kl_divergence(p, ym)) / 2e-6;
                worst_tsne = std::max(worst_tsne,
                                      std::abs(fd - grad(i, d)) / std::max({std::abs(fd), std::abs(grad(i, d)), 1e-6}));
            }
        }
    }
    out.require(worst_tsne < 1e-4, "t-SNE gradient");
    out.detail << std::setprecision(12) << "loss(z,z) = " << same << ", loss(z,z_perp) = " << orth
               << std::setprecision(3) << "; max relative gradient error graphembed " << worst_sage << ", t-SNE "
               << worst_tsne;
}

void training_efficacy(Outcome& out) {
    const auto start = Clock::now();
    const auto split = oracle::two_block_graph(60, 0.3, 0.02, 0.2, 5, 2024);
    Rng rng(505);
    SemanticFeatures features{split.train.nodes, oracle::gaussian_matrix(60, 64, rng)};
    const auto result = train(split.train, features, SageConfig{});
    const auto& z = result.embeddings.vectors;

    auto score = [&](const std::vector<std::pair<int, int>>& pairs) {
        std::vector<double> s;
        for (const auto& [i, j] : pairs) {
            s.push_back(z.row(i).dot(z.row(j)));
        }
        return s;
    };
    const double auc = oracle::auc(score(split.held_edges), score(split.non_edges));

    // The best any scorer can do when the only signal is block membership.
    auto same_block = [&](const std::vector<std::pair<int, int>>& pairs) {
        std::vector<double> s;
        for (const auto& [i, j] : pairs) {
            s.push_back(split.block[static_cast<std::size_t>(i)] == split.block[static_cast<std::size_t>(j)] ? 1.0 : 0.0);
        }
        return s;
    };
    const double ceiling = oracle::auc(same_block(split.held_edges), same_block(split.non_edges));

    double intra = 0.0, inter = 0.0;
    int n_intra = 0, n_inter = 0;
    for (int i = 0; i < 60; ++i) {
        for (int j = i + 1; j < 60; ++j) {
            const double c = z.row(i).dot(z.row(j));
            if (split.block[static_cast<std::size_t>(i)] == split.block[static_cast<std::size_t>(j)]) {
                intra += c;
                ++n_intra;
            } else {
                inter += c;
                ++n_inter;
            }
        }
    }
    intra /= n_intra;
    inter /= n_inter;
    const double elapsed = seconds_since(start);
    out.require(auc >= 0.85, "AUC >= 0.85");
    out.require(intra > inter, "intra > inter cosine");
    out.require(elapsed < 60.0, "time");
    out.detail << std::setprecision(3) << "held-out AUC " << auc << " (block-label ceiling " << ceiling << ", "
               << split.held_edges.size() << " held edges, " << split.non_edges.size() << " non-edges); cosine intra "
               << intra << " vs inter " << inter << "; " << elapsed << " s";
}

void text_efficacy(Outcome& out) {
    const auto start = Clock::now();
    const auto labeled = oracle::two_vocabulary_docs(200, 30, 50, 11);
    TextEmbedConfig c;
    c.subsample = 0.0; // uniform word frequencies: nothing to subsample
    const auto vocab = Vocabulary::build(labeled.docs, c.min_count, c.subsample);
    std::vector<std::vector<int>> docs;
    for (const auto& d : labeled.docs) {
        docs.push_back(vocab.encode(d));
    }
    const auto vectors = train_doc_vectors(docs, vocab, c);
    const double purity = oracle::nearest_neighbor_purity(vectors.documents, labeled.labels);
    const double elapsed = seconds_since(start);
    out.require(purity >= 0.9, "purity");
    out.require(elapsed < 60.0, "time");
    out.detail << std::setprecision(3) << "200 docs, nearest-neighbor purity " << purity << ", " << elapsed << " s";
}

void tsne_quality(Outcome& out) {
    const std::vector<std::string> nodes(150, "n");
    double total = 0.0;
    double lowest = 1.0;
    double worst_rise = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const RowMatrixXd x = oracle::three_gaussians(50, 32, 4.0, seed);
        const auto proj = tsne(x, nodes, TsneConfig{});
        const double t = trustworthiness(x, proj.coordinates, 10);
        total += t;
        lowest = std::min(lowest, t);
        const auto start = static_cast<std::size_t>(TsneConfig{}.exaggeration_iterations);
        for (std::size_t it = start + 1; it < proj.kl_trace.size(); ++it) {
            worst_rise = std::max(worst_rise, proj.kl_trace[it] - proj.kl_trace[it - 1]);
        }
        worst_rise = std::max(worst_rise, proj.kl_divergence - proj.kl_trace.back());
    }
    out.require(total / 10.0 >= 0.95, "trustworthiness");
    out.require(worst_rise <= 1e-6, "monotone KL");
    out.detail << std::setprecision(4) << "mean trustworthiness(k=10) over 10 datasets " << total / 10.0
               << " (lowest " << lowest << "); largest KL step increase after exaggeration " << std::setprecision(3)
               << worst_rise;
}

void decile_shape(Outcome& out) {
    Rng rng(606);
    int trials = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 50 + static_cast<int>(uniform_index(rng, 100));
        const RowMatrixXd z = oracle::gaussian_matrix(n, 32, rng);
        const RowMatrixXd xy = oracle::gaussian_matrix(n, 2, rng);
        std::vector<std::string> codes;
        for (int i = 0; i < n; ++i) {
            codes.push_back("D" + std::to_string(1000 + i));
        }
        const auto peak_row = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(n)));
        const Eigen::VectorXd d0 = distances_to(z, z.row(peak_row).transpose());
        const Eigen::VectorXd rates = 40.0 - d0.array();
        const auto peak = find_peak(z, xy, rates, codes, 1);
        const Eigen::VectorXd d = distances_to(z, peak.centroid_high);
        const auto report = distance_deciles(d, rates, codes, 1);
        bool decreasing = true;
        for (std::size_t g = 1; g < report.groups.size(); ++g) {
            decreasing = decreasing && report.groups[g].mean_rate < report.groups[g - 1].mean_rate;
        }
        out.require(decreasing, "strictly decreasing deciles");

        const auto flat = distance_deciles(d, Eigen::VectorXd::Constant(n, 12.0), codes, 1);
        bool equal = true;
        for (const auto& group : flat.groups) {
            equal = equal && std::abs(group.mean_rate - 12.0) < 1e-12;
        }
        out.require(equal, "constant rates give equal deciles");
        ++trials;
    }
    out.detail << trials << " random 32-d spaces with r = 40 - d: decile means strictly decreasing; constant rates equal";
}

void shift_structure(Outcome& out) {
    Rng rng(707);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(uniform_index(rng, 200));
        const int bins = 2 + static_cast<int>(uniform_index(rng, 15));
        Eigen::VectorXd d(n);
        std::vector<int> sub;
        std::vector<std::string> codes;
        for (int i = 0; i < n; ++i) {
            d(i) = uniform01(rng) * 3.0;
            sub.push_back(nber::kSubcategories[uniform_index(rng, nber::kSubcategories.size())].code);
            codes.push_back("C" + std::to_string(i));
        }
        for (const Binning binning : {Binning::equal_count, Binning::equal_width}) {
            const auto shift = nber_shift(sub, d, codes, bins, binning);
            out.require(shift.values.minCoeff() >= 0.0, "nonnegative");
            for (Eigen::Index c = 0; c < bins; ++c) {
                if (!shift.empty_columns[static_cast<std::size_t>(c)]) {
                    worst = std::max(worst, std::abs(shift.values.col(c).sum() - 1.0));
                }
            }
        }
    }
    out.require(worst <= 1e-9, "column sums");

    const Eigen::VectorXd d = (Eigen::VectorXd(6) << 0.5, 3.0, 1.0, 2.5, 0.2, 4.0).finished();
    const auto shift = nber_shift({21, 22, 21, 11, 22, 21}, d, {"A", "B", "C", "D", "E", "F"}, 2);
    const auto row = [](int code) { return static_cast<Eigen::Index>(*nber::subcategory_index(code)); };
    // Hand tally: near bin {E:22, A:21, C:21}, far bin {D:11, B:22, F:21}.
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(37, 2);
    expected(row(21), 0) = 2.0 / 3.0;
    expected(row(22), 0) = 1.0 / 3.0;
    expected(row(11), 1) = 1.0 / 3.0;
    expected(row(21), 1) = 1.0 / 3.0;
    expected(row(22), 1) = 1.0 / 3.0;
    out.require(shift.values == expected, "hand-tallied fixture");
    out.detail << "200 random matrices, max |column sum - 1| = " << worst << "; 6-domain 2-bin fixture exact";
}

void nmf_check(Outcome& out) {
    const Eigen::VectorXd a = (Eigen::VectorXd(5) << 1, 2, 0.5, 3, 0.1).finished();
    const Eigen::VectorXd b = (Eigen::VectorXd(7) << 0.2, 1, 4, 2, 0.1, 1.5, 0.7).finished();
    const auto rank_one = nmf(a * b.transpose(), 1, 500, 1);
    out.require(rank_one.error_trace.back() < 1e-6, "rank-1 recovery");

    Rng rng(808);
    double worst_rise = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXd v(20, 50);
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            v.data()[i] = uniform01(rng);
        }
        const auto r = nmf(v, 1 + trial % 6, 500, static_cast<std::uint64_t>(trial));
        out.require(r.error_trace.size() == 500, "500 iterations");
        for (std::size_t it = 1; it < r.error_trace.size(); ++it) {
            worst_rise = std::max(worst_rise, r.error_trace[it] - r.error_trace[it - 1]);
        }
        out.require(r.w.minCoeff() >= 0.0 && r.h.minCoeff() >= 0.0, "nonnegative factors");
    }
    out.require(worst_rise <= 1e-10, "monotone error");
    out.detail << "rank-1 error " << rank_one.error_trace.back() << "; 10 random 20x50 matrices, largest step increase "
               << worst_rise;
}

void end_to_end(Outcome& out) {
    const auto root = g_work / "e2e";
    fs::remove_all(root);
    synthetic::CorpusSpec spec; // 2,000 patents, 50 domains
    const auto files = synthetic::write_corpus(root / "corpus", spec);
    out.require(spec.patents == 2000 && files.domain_rows.size() == 50, "fixture size");

    double slowest = 0.0;
    for (const char* run : {"run1", "run2"}) {
        const auto start = Clock::now();
        const auto result = oracle::run_command(
            std::string(TECHLAND_CLI) + " --deterministic --patents '" + files.patents.string() + "' --citations '" +
            files.citations.string() + "' --domains '" + files.domains.string() + "' --out-dir '" +
            (root / run).string() + "' run all");
        slowest = std::max(slowest, seconds_since(start));
        out.require(result.exit_code == 0, std::string(run) + " exit code");
        if (result.exit_code != 0) {
            out.detail << result.output;
            return;
        }
    }
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(root / "run1")) {
        const auto name = entry.path().filename();
        const bool same = fs::exists(root / "run2" / name) &&
                          oracle::read_file(entry.path()) == oracle::read_file(root / "run2" / name);
        out.require(same, "byte-identical " + name.string());
        ++compared;
    }
    out.require(compared >= 20, "artifact count");
    out.require(slowest < 300.0, "under 5 minutes");
    out.detail << std::setprecision(3) << compared << " artifacts byte-identical across two runs; slowest run "
               << slowest << " s";
}

} // namespace

int main(int argc, char** argv) {
    g_work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "techland_acceptance";
    fs::create_directories(g_work);

    // The end-to-end run goes first so the normalization check can read its embeddings.
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
        {"end-to-end determinism and scale", end_to_end},
        {"weight-matrix correctness", weight_matrix},
        {"forward-pass oracle equivalence", forward_pass_oracle},
        {"per-layer normalization", normalization},
        {"loss and gradient checks", loss_and_gradients},
        {"graph training efficacy", training_efficacy},
        {"text-features efficacy", text_efficacy},
        {"t-SNE quality", tsne_quality},
        {"decile profile shape", decile_shape},
        {"theme-shift matrix structure", shift_structure},
        {"NMF recovery and monotonicity", nmf_check},
    };

    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Outcome outcome;
        try {
            check(outcome);
        } catch (const std::exception& e) {
            outcome.pass = false;
            outcome.detail << "exception: " << e.what();
        }
        failures += outcome.pass ? 0 : 1;
        std::cout << (outcome.pass ? "PASS" : "FAIL") << "  " << name << ": " << outcome.detail.str() << std::endl;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
