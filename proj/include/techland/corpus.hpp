#ifndef TECHLAND_CORPUS_HPP
#define TECHLAND_CORPUS_HPP

#include "techland/common.hpp"

#include <Eigen/SparseCore>

#include <filesystem>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace techland {

struct PatentRecord {
    std::string id;
    std::string title;
    std::string abstract;
    int year = 0;
    DomainCode domain;
};

struct DomainInfo {
    double improvement_rate = 0.0; // percent per year
    int nber_subcategory = 0;      // two-digit code, see nber.hpp
    int nber_category = 0;
};

/// Domain catalog keyed by UPC-IPC code. Iteration order (sorted by code)
/// is the node order used by every downstream matrix.
class DomainCatalog {
public:
    void add(const DomainCode& code, DomainInfo info);
    bool contains(const DomainCode& code) const { return entries_.count(code) != 0; }
    const DomainInfo& at(const DomainCode& code) const;
    std::size_t size() const { return entries_.size(); }
    std::vector<DomainCode> codes() const;
    const std::map<DomainCode, DomainInfo>& entries() const { return entries_; }

private:
    std::map<DomainCode, DomainInfo> entries_;
};

struct Corpus {
    std::vector<PatentRecord> patents;
    std::unordered_map<std::string, std::size_t> index; // patent id -> position

    void add(PatentRecord record);
    std::size_t size() const { return patents.size(); }
};

/// Patent-level citation, by position in Corpus::patents.
struct CitationPair {
    std::size_t citing;
    std::size_t cited;
};

struct CitationTable {
    std::vector<CitationPair> pairs;
    std::size_t dangling = 0; // lines whose endpoints are not both in the corpus
};

struct IngestResult {
    Corpus corpus;
    DomainCatalog catalog;
    CitationTable citations;
};

// Stream readers; errors carry 1-based line numbers.
DomainCatalog read_catalog(std::istream& in);
Corpus read_patents(std::istream& in, const DomainCatalog& catalog);
CitationTable read_citations(std::istream& in, const Corpus& corpus);

IngestResult ingest(const std::filesystem::path& patents_path,
                    const std::filesystem::path& citations_path,
                    const std::filesystem::path& catalog_path);

using CountMatrix = Eigen::SparseMatrix<std::int64_t, Eigen::RowMajor>;
using WeightMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct CountOptions {
    bool include_intra_domain = true; // citations between patents of the same domain land on the diagonal
};

/// C(n, n') = number of patent citations from domain n to domain n'.
CountMatrix build_domain_counts(const Corpus& corpus, std::span<const CitationPair> pairs,
                                const std::vector<DomainCode>& nodes, CountOptions options = {});

/// Row-normalize a nonnegative sparse matrix. Zero rows stay zero and are
/// reported through `zero_rows` when given.
template <typename Scalar, typename CountScalar>
Eigen::SparseMatrix<Scalar, Eigen::RowMajor>
normalize_weights(const Eigen::SparseMatrix<CountScalar, Eigen::RowMajor>& counts,
                  std::vector<bool>* zero_rows = nullptr) {
    Eigen::SparseMatrix<Scalar, Eigen::RowMajor> weights =
        counts.template cast<Scalar>();
    if (zero_rows != nullptr) {
        zero_rows->assign(static_cast<std::size_t>(counts.rows()), false);
    }
    for (Eigen::Index row = 0; row < weights.outerSize(); ++row) {
        Scalar total(0);
        for (typename Eigen::SparseMatrix<Scalar, Eigen::RowMajor>::InnerIterator it(weights, row); it; ++it) {
            if (it.value() < Scalar(0)) {
                throw std::invalid_argument("normalize_weights: negative count");
            }
            total += it.value();
        }
        if (total > Scalar(0)) {
            for (typename Eigen::SparseMatrix<Scalar, Eigen::RowMajor>::InnerIterator it(weights, row); it; ++it) {
                it.valueRef() /= total;
            }
        } else if (zero_rows != nullptr) {
            (*zero_rows)[static_cast<std::size_t>(row)] = true;
        }
    }
    return weights;
}

struct DomainGraph {
    std::vector<DomainCode> nodes;
    std::unordered_map<DomainCode, Eigen::Index> index;
    CountMatrix counts;
    WeightMatrix weights;
    std::vector<bool> isolated_out; // zero citation row

    Eigen::Index size() const { return static_cast<Eigen::Index>(nodes.size()); }
};

DomainGraph build_domain_graph(std::vector<DomainCode> nodes, CountMatrix counts);

/// Convenience for small graphs: node names plus (from, to, count) triplets.
DomainGraph graph_from_edges(std::vector<DomainCode> nodes,
                             const std::vector<Eigen::Triplet<std::int64_t>>& edges);

enum class NeighborPolicy { undirected, out_edges };

NeighborPolicy parse_neighbor_policy(std::string_view name);
std::string_view to_string(NeighborPolicy policy);

struct Neighborhood {
    std::vector<Eigen::Index> nodes;  // ascending node index
    std::vector<double> weights;      // parallel to nodes
    bool isolated = false;            // empty under the policy; samplers fall back to a self-loop
};

/// Undirected policy: union of in- and out-edges with C > 0, weight w(v->u) + w(u->v).
/// Out-edge policy: out-edges only, weight w(v->u).
std::vector<Neighborhood> neighborhoods(const DomainGraph& graph, NeighborPolicy policy);

} // namespace techland

#endif // TECHLAND_CORPUS_HPP
