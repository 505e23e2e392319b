#ifndef TECHLAND_TEXTEMBED_HPP
#define TECHLAND_TEXTEMBED_HPP

#include "techland/common.hpp"
#include "techland/corpus.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace techland {

/// Lowercase, split on non-alphanumerics, drop pure numbers and tokens shorter than 2 chars.
std::vector<std::string> tokenize(std::string_view text);

/// Title and abstract of every patent, tokenized, in corpus order.
std::vector<std::vector<std::string>> tokenize_corpus(const Corpus& corpus);

class Vocabulary {
public:
    Vocabulary() = default;

    /// Retains tokens with frequency >= min_count, indexed by (frequency desc, token asc).
    static Vocabulary build(const std::vector<std::vector<std::string>>& documents,
                            std::int64_t min_count, double subsample);

    /// Rebuild from a saved (token, count) listing, preserving its order.
    static Vocabulary from_counts(std::vector<std::pair<std::string, std::int64_t>> entries,
                                  std::int64_t min_count, double subsample);

    std::optional<int> find(std::string_view token) const;
    std::size_t size() const { return tokens_.size(); }
    bool empty() const { return tokens_.empty(); }
    const std::string& token(int index) const { return tokens_.at(static_cast<std::size_t>(index)); }
    std::int64_t count(int index) const { return counts_.at(static_cast<std::size_t>(index)); }
    std::int64_t total_count() const { return total_; }
    std::int64_t min_count() const { return min_count_; }
    double subsample() const { return subsample_; }

    /// word2vec keep probability for frequent-word subsampling; 1 when subsampling is off.
    double keep_probability(int index) const;

    /// Map tokens to indices, dropping out-of-vocabulary tokens.
    std::vector<int> encode(const std::vector<std::string>& tokens) const;

private:
    std::vector<std::string> tokens_;
    std::vector<std::int64_t> counts_;
    std::unordered_map<std::string, int> index_;
    std::int64_t total_ = 0;
    std::int64_t min_count_ = 1;
    double subsample_ = 0.0;
};

struct TextEmbedConfig {
    int dim = 64;
    int epochs = 10;
    int negatives = 5;
    double learning_rate = 0.025;       // decays linearly to learning_rate * 1e-4
    std::int64_t min_count = 5;
    double subsample = 1e-4;
    std::uint64_t seed = 1;
};

/// Distributed bag-of-words document vectors trained with negative sampling.
struct DocVectors {
    RowMatrixXd documents;      // one row per document
    RowMatrixXd output_words;   // output (context) word vectors, one row per vocabulary entry
    std::vector<double> epoch_loss; // mean pair loss per epoch
};

DocVectors train_doc_vectors(const std::vector<std::vector<int>>& documents,
                             const Vocabulary& vocabulary, const TextEmbedConfig& config);

struct SemanticFeatures {
    std::vector<DomainCode> nodes;
    RowMatrixXd values; // row v is x_v
};

/// x_v = mean of the vectors of the patents assigned to domain v.
SemanticFeatures domain_features(const RowMatrixXd& patent_vectors,
                                 const std::vector<DomainCode>& patent_domains,
                                 const std::vector<DomainCode>& nodes);

} // namespace techland

#endif // TECHLAND_TEXTEMBED_HPP
