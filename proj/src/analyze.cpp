#include "techland/analyze.hpp"

#include "techland/nber.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace techland {

Eigen::VectorXd distances_to(const RowMatrixXd& points, const Eigen::VectorXd& center) {
    if (points.cols() != center.size()) {
        throw std::invalid_argument("distances_to: dimension mismatch");
    }
    return (points.rowwise() - center.transpose()).rowwise().norm();
}

std::vector<Eigen::Index> distance_order(const Eigen::VectorXd& distances, const std::vector<std::string>& codes) {
    if (static_cast<std::size_t>(distances.size()) != codes.size()) {
        throw std::invalid_argument("distance_order: one code per distance required");
    }
    std::vector<Eigen::Index> order(codes.size());
    std::iota(order.begin(), order.end(), Eigen::Index(0));
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (distances(a) != distances(b)) {
            return distances(a) < distances(b);
        }
        return codes[static_cast<std::size_t>(a)] < codes[static_cast<std::size_t>(b)];
    });
    return order;
}

QuantileReport distance_deciles(const Eigen::VectorXd& distances, const Eigen::VectorXd& rates,
                                const std::vector<std::string>& codes, int m, int groups) {
    const auto n = static_cast<std::size_t>(distances.size());
    if (static_cast<std::size_t>(rates.size()) != n) {
        throw std::invalid_argument("distance_deciles: one rate per distance required");
    }
    if (groups < 1 || n < static_cast<std::size_t>(groups)) {
        throw InputError("distance_deciles: need at least " + std::to_string(groups) + " domains, got " +
                         std::to_string(n));
    }
    const auto order = distance_order(distances, codes);
    const auto offsets = equal_count_offsets(n, static_cast<std::size_t>(groups));
    QuantileReport report;
    report.m = m;
    for (std::size_t g = 0; g + 1 < offsets.size(); ++g) {
        QuantileGroup group;
        group.count = offsets[g + 1] - offsets[g];
        group.d_min = distances(order[offsets[g]]);
        group.d_max = distances(order[offsets[g + 1] - 1]);
        double sum = 0.0;
        for (std::size_t i = offsets[g]; i < offsets[g + 1]; ++i) {
            sum += rates(order[i]);
        }
        group.mean_rate = sum / static_cast<double>(group.count);
        report.groups.push_back(group);
    }
    return report;
}

Binning parse_binning(std::string_view name) {
    if (name == "equal_count") {
        return Binning::equal_count;
    }
    if (name == "equal_width") {
        return Binning::equal_width;
    }
    throw InputError("unknown binning '" + std::string(name) + "' (expected equal_count|equal_width)");
}

std::string_view to_string(Binning binning) {
    return binning == Binning::equal_count ? "equal_count" : "equal_width";
}

ShiftMatrix nber_shift(const std::vector<int>& subcategories, const Eigen::VectorXd& distances,
                       const std::vector<std::string>& codes, int bins, Binning binning) {
    const auto n = static_cast<std::size_t>(distances.size());
    if (subcategories.size() != n || codes.size() != n) {
        throw std::invalid_argument("nber_shift: inputs disagree on domain count");
    }
    if (bins < 2) {
        throw InputError("nber_shift: need at least 2 bins");
    }
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto idx = nber::subcategory_index(subcategories[i]);
        if (!idx) {
            throw InputError("nber_shift: unknown NBER subcategory " + std::to_string(subcategories[i]) +
                             " for domain " + codes[i]);
        }
        rows[i] = *idx;
    }

    const auto b = static_cast<std::size_t>(bins);
    std::vector<std::size_t> bin_of(n, 0);
    ShiftMatrix shift;
    const auto order = distance_order(distances, codes);
    if (binning == Binning::equal_count) {
        const auto offsets = equal_count_offsets(n, b);
        for (std::size_t g = 0; g < b; ++g) {
            for (std::size_t i = offsets[g]; i < offsets[g + 1]; ++i) {
                bin_of[static_cast<std::size_t>(order[i])] = g;
            }
        }
        for (std::size_t g = 0; g <= b; ++g) {
            if (n == 0) {
                shift.bin_edges.push_back(0.0);
            } else if (g == b) {
                shift.bin_edges.push_back(distances(order.back()));
            } else {
                shift.bin_edges.push_back(distances(order[std::min(offsets[g], n - 1)]));
            }
        }
    } else {
        const double lo = n ? distances.minCoeff() : 0.0;
        const double hi = n ? distances.maxCoeff() : 0.0;
        const double width = (hi - lo) / static_cast<double>(b);
        for (std::size_t g = 0; g <= b; ++g) {
            shift.bin_edges.push_back(g == b ? hi : lo + width * static_cast<double>(g));
        }
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t g = width > 0.0 ? static_cast<std::size_t>((distances(static_cast<Eigen::Index>(i)) - lo) / width) : 0;
            bin_of[i] = std::min(g, b - 1);
        }
    }

    shift.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nber::kSubcategories.size()), bins);
    for (std::size_t i = 0; i < n; ++i) {
        shift.values(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(bin_of[i])) += 1.0;
    }
    for (Eigen::Index c = 0; c < shift.values.cols(); ++c) {
        const double total = shift.values.col(c).sum();
        shift.column_counts.push_back(static_cast<std::size_t>(total));
        shift.empty_columns.push_back(total == 0.0);
        if (total > 0.0) {
            shift.values.col(c) /= total;
        }
    }
    return shift;
}

NmfResult nmf(const Eigen::MatrixXd& v, int k, int iterations, std::uint64_t seed) {
    if (k < 1 || k > std::min(v.rows(), v.cols())) {
        throw InputError("nmf: k must be in [1, min(rows, cols)]");
    }
    if ((v.array() < 0.0).any() || !v.allFinite()) {
        throw InputError("nmf: matrix must be finite and nonnegative");
    }
    Rng rng(seed);
    const double scale = std::sqrt(std::max(v.mean(), 1e-12) / k);
    auto random_factor = [&](Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            m.data()[i] = scale * (1.0 - uniform01(rng)); // (0, scale]
        }
        return m;
    };
    NmfResult out;
    out.w = random_factor(v.rows(), k);
    out.h = random_factor(k, v.cols());
    constexpr double eps = 1e-12;
    for (int it = 0; it < iterations; ++it) {
        const Eigen::MatrixXd wt_v = out.w.transpose() * v;
        const Eigen::MatrixXd wt_w_h = out.w.transpose() * out.w * out.h;
        out.h.array() *= wt_v.array() / (wt_w_h.array() + eps);
        const Eigen::MatrixXd v_ht = v * out.h.transpose();
        const Eigen::MatrixXd w_h_ht = out.w * (out.h * out.h.transpose());
        out.w.array() *= v_ht.array() / (w_h_ht.array() + eps);
        out.error_trace.push_back((v - out.w * out.h).norm());
    }
    return out;
}

TermMatrix tfidf_matrix(const std::vector<std::vector<std::string>>& documents, const Vocabulary& vocabulary) {
    std::vector<std::map<int, double>> counts(documents.size());
    std::map<int, std::size_t> doc_freq;
    for (std::size_t d = 0; d < documents.size(); ++d) {
        for (int term : vocabulary.encode(documents[d])) {
            counts[d][term] += 1.0;
        }
        for (const auto& [term, c] : counts[d]) {
            ++doc_freq[term];
        }
    }
    TermMatrix out;
    std::map<int, Eigen::Index> column;
    for (const auto& [term, df] : doc_freq) {
        column.emplace(term, static_cast<Eigen::Index>(out.terms.size()));
        out.terms.push_back(term);
    }
    const auto n_docs = static_cast<double>(documents.size());
    out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(documents.size()),
                                       static_cast<Eigen::Index>(out.terms.size()));
    for (std::size_t d = 0; d < documents.size(); ++d) {
        for (const auto& [term, c] : counts[d]) {
            const double idf = std::log((1.0 + n_docs) / (1.0 + static_cast<double>(doc_freq.at(term)))) + 1.0;
            out.values(static_cast<Eigen::Index>(d), column.at(term)) = c * idf;
        }
        const double norm = out.values.row(static_cast<Eigen::Index>(d)).norm();
        if (norm > 0.0) {
            out.values.row(static_cast<Eigen::Index>(d)) /= norm;
        }
    }
    return out;
}

TopicSet nmf_topics(const std::vector<std::vector<std::string>>& documents, const Vocabulary& vocabulary, int k,
                    int iterations, std::uint64_t seed, int top_terms) {
    if (static_cast<int>(documents.size()) < k) {
        throw InputError("nmf_topics: fewer documents than topics");
    }
    const auto terms = tfidf_matrix(documents, vocabulary);
    auto factors = nmf(terms.values, k, iterations, seed);
    TopicSet set;
    set.k = k;
    for (int t = 0; t < k; ++t) {
        std::vector<Eigen::Index> cols(terms.terms.size());
        std::iota(cols.begin(), cols.end(), Eigen::Index(0));
        const auto row = factors.h.row(t);
        std::stable_sort(cols.begin(), cols.end(), [&](Eigen::Index a, Eigen::Index b) { return row(a) > row(b); });
        Topic topic;
        for (std::size_t i = 0; i < cols.size() && static_cast<int>(i) < top_terms; ++i) {
            topic.top_terms.emplace_back(vocabulary.token(terms.terms[static_cast<std::size_t>(cols[i])]), row(cols[i]));
        }
        set.topics.push_back(std::move(topic));
    }
    set.doc_factors = std::move(factors.w);
    set.term_factors = std::move(factors.h);
    set.error_trace = std::move(factors.error_trace);
    return set;
}

} // namespace techland
