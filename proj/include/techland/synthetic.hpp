#ifndef TECHLAND_SYNTHETIC_HPP
#define TECHLAND_SYNTHETIC_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

// Clustered synthetic corpus in the three input formats. Domains fall into
// clusters that share a vocabulary and cite each other preferentially; the
// first cluster carries the highest improvement rates, so the landscape has a
// single well-defined peak.
namespace techland::synthetic {

struct CorpusSpec {
    int patents = 2000;
    int domains = 50;
    int clusters = 5;
    int citations_per_patent = 4;
    double intra_cluster_citation = 0.85; // probability a citation stays inside the cluster
    double dangling_fraction = 0.01;      // citations pointing outside the corpus
    int title_words = 5;
    int abstract_words = 40;
    double cluster_word_share = 0.7;      // remaining words come from a shared pool
    std::uint64_t seed = 7;
};

struct DomainRow {
    std::string code;
    double improvement_rate;
    int nber_subcategory;
    int cluster;
};

struct CorpusFiles {
    std::filesystem::path patents;   // patents.jsonl
    std::filesystem::path citations; // citations.csv
    std::filesystem::path domains;   // domains.csv
    std::vector<DomainRow> domain_rows;
    std::size_t citation_lines = 0;
};

/// Writes patents.jsonl, citations.csv and domains.csv into `dir`.
CorpusFiles write_corpus(const std::filesystem::path& dir, const CorpusSpec& spec);

} // namespace techland::synthetic

#endif // TECHLAND_SYNTHETIC_HPP
