#ifndef TECHLAND_ANALYZE_HPP
#define TECHLAND_ANALYZE_HPP

#include "techland/common.hpp"
#include "techland/textembed.hpp"

#include <string>
#include <vector>

namespace techland {

/// Euclidean distance of every row to `center`; computed once and shared by
/// the decile profile and the theme-shift matrix.
Eigen::VectorXd distances_to(const RowMatrixXd& points, const Eigen::VectorXd& center);

/// Row order by (distance, code) ascending.
std::vector<Eigen::Index> distance_order(const Eigen::VectorXd& distances, const std::vector<std::string>& codes);

struct QuantileGroup {
    double d_min = 0.0;
    double d_max = 0.0;
    std::size_t count = 0;
    double mean_rate = 0.0;
};

struct QuantileReport {
    int m = 0; // peak size the distances refer to
    std::vector<QuantileGroup> groups;
};

/// Ten equal-count distance groups (remainder spread over the nearest groups) and their mean rates.
QuantileReport distance_deciles(const Eigen::VectorXd& distances, const Eigen::VectorXd& rates,
                                const std::vector<std::string>& codes, int m, int groups = 10);

enum class Binning { equal_count, equal_width };

Binning parse_binning(std::string_view name);
std::string_view to_string(Binning binning);

struct ShiftMatrix {
    Eigen::MatrixXd values;            // 37 x B; row order of nber::kSubcategories
    std::vector<double> bin_edges;     // B + 1 distance edges
    std::vector<std::size_t> column_counts;
    std::vector<bool> empty_columns;
};

/// Domain counts per (NBER subcategory, distance bin), each nonempty column divided by its sum.
ShiftMatrix nber_shift(const std::vector<int>& subcategories, const Eigen::VectorXd& distances,
                       const std::vector<std::string>& codes, int bins, Binning binning = Binning::equal_count);

struct Topic {
    std::vector<std::pair<std::string, double>> top_terms;
};

struct TopicSet {
    int k = 0;
    std::vector<Topic> topics;
    Eigen::MatrixXd doc_factors;   // documents x k
    Eigen::MatrixXd term_factors;  // k x terms
    std::vector<double> error_trace; // Frobenius error after each iteration
};

struct NmfResult {
    Eigen::MatrixXd w;
    Eigen::MatrixXd h;
    std::vector<double> error_trace;
};

/// Lee-Seung multiplicative updates minimizing ||V - W H||_F.
NmfResult nmf(const Eigen::MatrixXd& v, int k, int iterations, std::uint64_t seed);

struct TermMatrix {
    Eigen::MatrixXd values;  // documents x terms
    std::vector<int> terms;  // vocabulary index of each column
};

/// TF-IDF rows (smoothed idf, L2-normalized) over the vocabulary terms that
/// occur in the documents; out-of-vocabulary tokens are ignored.
TermMatrix tfidf_matrix(const std::vector<std::vector<std::string>>& documents, const Vocabulary& vocabulary);

TopicSet nmf_topics(const std::vector<std::vector<std::string>>& documents, const Vocabulary& vocabulary, int k,
                    int iterations, std::uint64_t seed, int top_terms = 10);

} // namespace techland

#endif // TECHLAND_ANALYZE_HPP
