#include "techland/corpus.hpp"

#include "techland/nber.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace techland {

namespace {

std::string line_error(std::string_view source, std::size_t line, const std::string& what) {
    return std::string(source) + ":" + std::to_string(line) + ": " + what;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

bool is_blank(std::string_view s) { return trim(s).empty(); }

// Minimal RFC-4180 field splitter: commas, double-quoted fields, "" escapes.
std::vector<std::string> split_csv(std::string_view line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back(trim(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    if (quoted) {
        throw InputError("unterminated quoted field");
    }
    fields.emplace_back(trim(field));
    return fields;
}

void expect_header(std::istream& in, std::string_view source, const std::vector<std::string>& expected) {
    std::string line;
    if (!std::getline(in, line)) {
        throw InputError(line_error(source, 1, "missing header"));
    }
    if (split_csv(line) != expected) {
        std::string want;
        for (const auto& h : expected) {
            want += (want.empty() ? "" : ",") + h;
        }
        throw InputError(line_error(source, 1, "expected header '" + want + "'"));
    }
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    return in;
}

} // namespace

void DomainCatalog::add(const DomainCode& code, DomainInfo info) {
    if (!entries_.emplace(code, info).second) {
        throw InputError("duplicate domain code " + code);
    }
}

const DomainInfo& DomainCatalog::at(const DomainCode& code) const {
    auto it = entries_.find(code);
    if (it == entries_.end()) {
        throw InputError("unknown domain code " + code);
    }
    return it->second;
}

std::vector<DomainCode> DomainCatalog::codes() const {
    std::vector<DomainCode> out;
    out.reserve(entries_.size());
    for (const auto& [code, info] : entries_) {
        out.push_back(code);
    }
    return out;
}

void Corpus::add(PatentRecord record) {
    if (!index.emplace(record.id, patents.size()).second) {
        throw InputError("duplicate patent id " + record.id);
    }
    patents.push_back(std::move(record));
}

DomainCatalog read_catalog(std::istream& in) {
    constexpr std::string_view source = "domains.csv";
    expect_header(in, source, {"code", "improvement_rate", "nber_subcategory"});
    DomainCatalog catalog;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank(line)) {
            continue;
        }
        try {
            auto fields = split_csv(line);
            if (fields.size() != 3) {
                throw InputError("expected 3 fields, got " + std::to_string(fields.size()));
            }
            if (fields[0].empty()) {
                throw InputError("empty domain code");
            }
            DomainInfo info;
            info.improvement_rate = parse_double(fields[1]);
            if (!(info.improvement_rate > 0.0) || !std::isfinite(info.improvement_rate)) {
                throw InputError("improvement_rate must be positive");
            }
            auto sub = nber::parse_subcategory(fields[2]);
            if (!sub) {
                throw InputError("unknown NBER subcategory '" + fields[2] + "'");
            }
            info.nber_subcategory = *sub;
            info.nber_category = nber::category_of(*sub);
            catalog.add(fields[0], info);
        } catch (const InputError& e) {
            throw InputError(line_error(source, lineno, e.what()));
        }
    }
    return catalog;
}

Corpus read_patents(std::istream& in, const DomainCatalog& catalog) {
    constexpr std::string_view source = "patents.jsonl";
    Corpus corpus;
    std::set<std::string> unknown;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank(line)) {
            continue;
        }
        PatentRecord record;
        try {
            const auto obj = nlohmann::json::parse(line);
            if (!obj.is_object()) {
                throw InputError("expected a JSON object");
            }
            for (const char* key : {"id", "title", "abstract", "domain"}) {
                if (!obj.contains(key) || !obj[key].is_string()) {
                    throw InputError(std::string("missing string field '") + key + "'");
                }
            }
            if (!obj.contains("year") || !obj["year"].is_number_integer()) {
                throw InputError("missing integer field 'year'");
            }
            record.id = obj["id"].get<std::string>();
            record.title = obj["title"].get<std::string>();
            record.abstract = obj["abstract"].get<std::string>();
            record.year = obj["year"].get<int>();
            record.domain = obj["domain"].get<std::string>();
            if (record.id.empty()) {
                throw InputError("empty patent id");
            }
            if (!catalog.contains(record.domain)) {
                unknown.insert(record.domain);
            }
            corpus.add(std::move(record));
        } catch (const nlohmann::json::exception& e) {
            throw InputError(line_error(source, lineno, e.what()));
        } catch (const InputError& e) {
            throw InputError(line_error(source, lineno, e.what()));
        }
    }
    if (!unknown.empty()) {
        std::string list;
        for (const auto& code : unknown) {
            list += (list.empty() ? "" : ", ") + code;
        }
        throw InputError("patents reference unknown domain codes: " + list);
    }
    return corpus;
}

CitationTable read_citations(std::istream& in, const Corpus& corpus) {
    constexpr std::string_view source = "citations.csv";
    CitationTable table;
    std::string line;
    if (!std::getline(in, line)) {
        return table; // empty file: no relation
    }
    if (split_csv(line) != std::vector<std::string>{"citing_id", "cited_id"}) {
        throw InputError(line_error(source, 1, "expected header 'citing_id,cited_id'"));
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank(line)) {
            continue;
        }
        std::vector<std::string> fields;
        try {
            fields = split_csv(line);
        } catch (const InputError& e) {
            throw InputError(line_error(source, lineno, e.what()));
        }
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
            throw InputError(line_error(source, lineno, "expected 'citing_id,cited_id'"));
        }
        auto citing = corpus.index.find(fields[0]);
        auto cited = corpus.index.find(fields[1]);
        if (citing == corpus.index.end() || cited == corpus.index.end()) {
            ++table.dangling;
            continue;
        }
        table.pairs.push_back({citing->second, cited->second});
    }
    return table;
}

IngestResult ingest(const std::filesystem::path& patents_path,
                    const std::filesystem::path& citations_path,
                    const std::filesystem::path& catalog_path) {
    IngestResult result;
    {
        auto in = open_input(catalog_path);
        result.catalog = read_catalog(in);
    }
    {
        auto in = open_input(patents_path);
        result.corpus = read_patents(in, result.catalog);
    }
    {
        auto in = open_input(citations_path);
        result.citations = read_citations(in, result.corpus);
    }
    return result;
}

CountMatrix build_domain_counts(const Corpus& corpus, std::span<const CitationPair> pairs,
                                const std::vector<DomainCode>& nodes, CountOptions options) {
    std::unordered_map<DomainCode, Eigen::Index> index;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        index.emplace(nodes[i], static_cast<Eigen::Index>(i));
    }
    std::vector<Eigen::Index> domain_of(corpus.size());
    for (std::size_t p = 0; p < corpus.size(); ++p) {
        auto it = index.find(corpus.patents[p].domain);
        if (it == index.end()) {
            throw InputError("patent " + corpus.patents[p].id + " has domain outside the node list: " +
                             corpus.patents[p].domain);
        }
        domain_of[p] = it->second;
    }
    std::vector<Eigen::Triplet<std::int64_t>> triplets;
    triplets.reserve(pairs.size());
    for (const auto& pair : pairs) {
        const auto from = domain_of.at(pair.citing);
        const auto to = domain_of.at(pair.cited);
        if (from == to && !options.include_intra_domain) {
            continue;
        }
        triplets.emplace_back(from, to, 1);
    }
    const auto n = static_cast<Eigen::Index>(nodes.size());
    CountMatrix counts(n, n);
    counts.setFromTriplets(triplets.begin(), triplets.end()); // duplicates are summed
    counts.makeCompressed();
    return counts;
}

DomainGraph build_domain_graph(std::vector<DomainCode> nodes, CountMatrix counts) {
    if (counts.rows() != static_cast<Eigen::Index>(nodes.size()) || counts.cols() != counts.rows()) {
        throw std::invalid_argument("build_domain_graph: count matrix shape does not match node list");
    }
    DomainGraph graph;
    graph.nodes = std::move(nodes);
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        if (!graph.index.emplace(graph.nodes[i], static_cast<Eigen::Index>(i)).second) {
            throw InputError("duplicate node " + graph.nodes[i]);
        }
    }
    counts.prune(std::int64_t(0), 0);
    counts.makeCompressed();
    graph.weights = normalize_weights<double>(counts, &graph.isolated_out);
    graph.counts = std::move(counts);
    return graph;
}

DomainGraph graph_from_edges(std::vector<DomainCode> nodes,
                             const std::vector<Eigen::Triplet<std::int64_t>>& edges) {
    const auto n = static_cast<Eigen::Index>(nodes.size());
    CountMatrix counts(n, n);
    counts.setFromTriplets(edges.begin(), edges.end());
    return build_domain_graph(std::move(nodes), std::move(counts));
}

NeighborPolicy parse_neighbor_policy(std::string_view name) {
    if (name == "undirected") {
        return NeighborPolicy::undirected;
    }
    if (name == "out" || name == "out_edges") {
        return NeighborPolicy::out_edges;
    }
    throw InputError("unknown neighbor policy '" + std::string(name) + "' (expected undirected|out)");
}

std::string_view to_string(NeighborPolicy policy) {
    return policy == NeighborPolicy::undirected ? "undirected" : "out";
}

std::vector<Neighborhood> neighborhoods(const DomainGraph& graph, NeighborPolicy policy) {
    const auto n = static_cast<std::size_t>(graph.size());
    std::vector<std::map<Eigen::Index, double>> adjacency(n);
    for (Eigen::Index row = 0; row < graph.weights.outerSize(); ++row) {
        for (WeightMatrix::InnerIterator it(graph.weights, row); it; ++it) {
            if (it.value() <= 0.0) {
                continue;
            }
            adjacency[static_cast<std::size_t>(row)][it.col()] += it.value();
            if (policy == NeighborPolicy::undirected && it.col() != row) {
                adjacency[static_cast<std::size_t>(it.col())][row] += it.value();
            }
        }
    }
    std::vector<Neighborhood> result(n);
    for (std::size_t v = 0; v < n; ++v) {
        for (const auto& [u, w] : adjacency[v]) {
            result[v].nodes.push_back(u);
            result[v].weights.push_back(w);
        }
        result[v].isolated = result[v].nodes.empty();
    }
    return result;
}

} // namespace techland
