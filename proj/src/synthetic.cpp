#include "techland/synthetic.hpp"

#include "techland/common.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace techland::synthetic {

namespace fs = std::filesystem;

namespace {

constexpr std::array<const char*, 24> kSyllables{
    "ra", "lo", "ven", "tis", "mar", "quo", "del", "sun", "pex", "bri", "cal", "dor",
    "fen", "gul", "hax", "jor", "kel", "mun", "nix", "pol", "rim", "sol", "tav", "wex",
};

constexpr std::array<const char*, 20> kSharedWords{
    "system", "method", "device", "apparatus", "means",    "unit",   "assembly", "process", "member", "control",
    "first",  "second", "surface", "portion",  "provided", "having", "includes", "further", "plural", "coupled",
};

// Subcategories assigned round-robin within each cluster; the first cluster is ICT.
constexpr std::array<std::array<int, 5>, 6> kClusterSubcategories{{
    {{21, 22, 23, 24, 25}},
    {{41, 42, 43, 45, 46}},
    {{31, 32, 33, 39, 44}},
    {{51, 52, 53, 54, 55}},
    {{11, 12, 13, 14, 15}},
    {{61, 62, 63, 64, 65}},
}};

std::vector<std::vector<std::string>> cluster_vocabularies(int clusters) {
    // Each cluster owns a disjoint set of leading syllables.
    const int per_cluster = static_cast<int>(kSyllables.size()) / clusters;
    std::vector<std::vector<std::string>> vocab(static_cast<std::size_t>(clusters));
    for (int c = 0; c < clusters; ++c) {
        for (int a = c * per_cluster; a < (c + 1) * per_cluster; ++a) {
            for (const char* second : kSyllables) {
                vocab[static_cast<std::size_t>(c)].push_back(std::string(kSyllables[static_cast<std::size_t>(a)]) + second);
            }
        }
    }
    return vocab;
}

std::string words(Rng& rng, int count, const std::vector<std::string>& own, double own_share) {
    std::string text;
    for (int i = 0; i < count; ++i) {
        const bool from_own = uniform01(rng) < own_share;
        const std::string& w = from_own ? own[uniform_index(rng, own.size())]
                                        : std::string(kSharedWords[uniform_index(rng, kSharedWords.size())]);
        text += (i ? " " : "") + w;
    }
    return text;
}

std::ofstream open(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

} // namespace

CorpusFiles write_corpus(const fs::path& dir, const CorpusSpec& spec) {
    if (spec.clusters < 1 || spec.clusters > static_cast<int>(kClusterSubcategories.size()) ||
        spec.domains < spec.clusters || spec.patents < spec.domains) {
        throw InputError("synthetic corpus: need 1..6 clusters, domains >= clusters, patents >= domains");
    }
    fs::create_directories(dir);
    Rng rng(spec.seed);
    CorpusFiles files{dir / "patents.jsonl", dir / "citations.csv", dir / "domains.csv", {}, 0};

    for (int d = 0; d < spec.domains; ++d) {
        DomainRow row;
        std::ostringstream code;
        code << 'D' << std::setw(3) << std::setfill('0') << d + 1;
        row.code = code.str();
        row.cluster = d % spec.clusters;
        const auto& subs = kClusterSubcategories[static_cast<std::size_t>(row.cluster)];
        row.nber_subcategory = subs[static_cast<std::size_t>(d / spec.clusters) % subs.size()];
        // Cluster 0 sits near 30%/yr, the others decline towards ~5%/yr.
        const double base = row.cluster == 0 ? 30.0 : 16.0 - 2.5 * row.cluster;
        row.improvement_rate = std::max(0.5, base + 4.0 * (uniform01(rng) - 0.5));
        files.domain_rows.push_back(row);
    }
    {
        auto out = open(files.domains);
        out << "code,improvement_rate,nber_subcategory\n";
        for (const auto& row : files.domain_rows) {
            out << row.code << ',' << format_double(row.improvement_rate) << ',' << row.nber_subcategory << '\n';
        }
    }

    const auto vocab = cluster_vocabularies(spec.clusters);
    std::vector<int> patent_cluster(static_cast<std::size_t>(spec.patents));
    std::vector<std::vector<int>> by_cluster(static_cast<std::size_t>(spec.clusters));
    {
        auto out = open(files.patents);
        for (int p = 0; p < spec.patents; ++p) {
            // The first pass over the domains guarantees every domain has a patent.
            const int d = p < spec.domains ? p : static_cast<int>(uniform_index(rng, static_cast<std::size_t>(spec.domains)));
            const auto& domain = files.domain_rows[static_cast<std::size_t>(d)];
            const auto& own = vocab[static_cast<std::size_t>(domain.cluster)];
            nlohmann::ordered_json record;
            record["id"] = "P" + std::to_string(100000 + p);
            record["title"] = words(rng, spec.title_words, own, spec.cluster_word_share);
            record["abstract"] = words(rng, spec.abstract_words, own, spec.cluster_word_share);
            record["year"] = 1976 + static_cast<int>(uniform_index(rng, 38));
            record["domain"] = domain.code;
            out << record.dump() << '\n';
            patent_cluster[static_cast<std::size_t>(p)] = domain.cluster;
            by_cluster[static_cast<std::size_t>(domain.cluster)].push_back(p);
        }
    }

    auto out = open(files.citations);
    out << "citing_id,cited_id\n";
    for (int p = 0; p < spec.patents; ++p) {
        for (int c = 0; c < spec.citations_per_patent; ++c) {
            if (uniform01(rng) < spec.dangling_fraction) {
                out << 'P' << 100000 + p << ",X" << 900000 + uniform_index(rng, 100000) << '\n';
                ++files.citation_lines;
                continue;
            }
            int cited;
            if (uniform01(rng) < spec.intra_cluster_citation) {
                const auto& pool = by_cluster[static_cast<std::size_t>(patent_cluster[static_cast<std::size_t>(p)])];
                cited = pool[uniform_index(rng, pool.size())];
            } else {
                cited = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(spec.patents)));
            }
            if (cited == p) {
                continue;
            }
            out << 'P' << 100000 + p << ",P" << 100000 + cited << '\n';
            ++files.citation_lines;
        }
    }
    return files;
}

} // namespace techland::synthetic
