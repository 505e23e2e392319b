#include "techland/textembed.hpp"

#include "techland/negative_sampling.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

namespace techland {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (current.size() >= 2 &&
            !std::all_of(current.begin(), current.end(), [](unsigned char c) { return std::isdigit(c); })) {
            tokens.push_back(current);
        }
        current.clear();
    };
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (c < 0x80 && std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

std::vector<std::vector<std::string>> tokenize_corpus(const Corpus& corpus) {
    std::vector<std::vector<std::string>> docs;
    docs.reserve(corpus.size());
    for (const auto& patent : corpus.patents) {
        auto tokens = tokenize(patent.title);
        auto rest = tokenize(patent.abstract);
        tokens.insert(tokens.end(), std::make_move_iterator(rest.begin()), std::make_move_iterator(rest.end()));
        docs.push_back(std::move(tokens));
    }
    return docs;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& documents,
                             std::int64_t min_count, double subsample) {
    std::unordered_map<std::string, std::int64_t> freq;
    for (const auto& doc : documents) {
        for (const auto& token : doc) {
            ++freq[token];
        }
    }
    std::vector<std::pair<std::string, std::int64_t>> entries;
    for (auto& [token, count] : freq) {
        if (count >= min_count) {
            entries.emplace_back(token, count);
        }
    }
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    return from_counts(std::move(entries), min_count, subsample);
}

Vocabulary Vocabulary::from_counts(std::vector<std::pair<std::string, std::int64_t>> entries,
                                   std::int64_t min_count, double subsample) {
    Vocabulary vocab;
    vocab.min_count_ = min_count;
    vocab.subsample_ = subsample;
    for (auto& [token, count] : entries) {
        if (count < min_count) {
            throw InputError("vocabulary entry '" + token + "' below min_count");
        }
        const int idx = static_cast<int>(vocab.tokens_.size());
        if (!vocab.index_.emplace(token, idx).second) {
            throw InputError("duplicate vocabulary entry '" + token + "'");
        }
        vocab.tokens_.push_back(std::move(token));
        vocab.counts_.push_back(count);
        vocab.total_ += count;
    }
    return vocab;
}

std::optional<int> Vocabulary::find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

double Vocabulary::keep_probability(int index) const {
    if (subsample_ <= 0.0) {
        return 1.0;
    }
    const double threshold = subsample_ * static_cast<double>(total_);
    const double f = static_cast<double>(count(index));
    return std::min(1.0, (std::sqrt(f / threshold) + 1.0) * threshold / f);
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        if (auto idx = find(t)) {
            out.push_back(*idx);
        }
    }
    return out;
}

DocVectors train_doc_vectors(const std::vector<std::vector<int>>& documents,
                             const Vocabulary& vocabulary, const TextEmbedConfig& config) {
    if (vocabulary.empty()) {
        throw InputError("textembed: empty vocabulary (lower min_count or provide more text)");
    }
    if (documents.empty()) {
        throw InputError("textembed: no documents");
    }
    std::size_t total_words = 0;
    for (const auto& doc : documents) {
        total_words += doc.size();
    }
    if (total_words == 0) {
        throw InputError("textembed: every document is empty after tokenization");
    }
    if (config.dim <= 0 || config.epochs <= 0 || config.negatives < 0) {
        throw InputError("textembed: dim and epochs must be positive, negatives nonnegative");
    }

    const auto n_docs = static_cast<Eigen::Index>(documents.size());
    const auto n_words = static_cast<Eigen::Index>(vocabulary.size());
    const int dim = config.dim;

    Rng rng(config.seed);
    DocVectors out;
    out.documents.resize(n_docs, dim);
    const double bound = 0.5 / dim;
    for (Eigen::Index i = 0; i < out.documents.size(); ++i) {
        out.documents.data()[i] = (2.0 * uniform01(rng) - 1.0) * bound;
    }
    out.output_words = RowMatrixXd::Zero(n_words, dim);

    std::vector<double> noise(static_cast<std::size_t>(n_words));
    for (Eigen::Index w = 0; w < n_words; ++w) {
        noise[static_cast<std::size_t>(w)] = std::pow(static_cast<double>(vocabulary.count(static_cast<int>(w))), 0.75);
    }
    const DiscreteSampler negative_sampler(noise);

    std::vector<std::size_t> order(documents.size());
    std::iota(order.begin(), order.end(), 0);

    const double planned = static_cast<double>(total_words) * config.epochs;
    double processed = 0.0;
    RowMatrixXd negatives(config.negatives, dim);
    std::vector<int> negative_ids;
    negative_ids.reserve(static_cast<std::size_t>(config.negatives));

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        std::size_t epoch_pairs = 0;
        for (const std::size_t d : order) {
            auto doc_vec = out.documents.row(static_cast<Eigen::Index>(d));
            for (const int word : documents[d]) {
                processed += 1.0;
                if (uniform01(rng) >= vocabulary.keep_probability(word)) {
                    continue;
                }
                const double lr = config.learning_rate * std::max(1e-4, 1.0 - processed / (planned + 1.0));
                negative_ids.clear();
                for (int q = 0; q < config.negatives; ++q) {
                    const int neg = static_cast<int>(negative_sampler(rng));
                    if (neg != word) {
                        negative_ids.push_back(neg);
                    }
                }
                const auto n_neg = static_cast<Eigen::Index>(negative_ids.size());
                for (Eigen::Index q = 0; q < n_neg; ++q) {
                    negatives.row(q) = out.output_words.row(negative_ids[static_cast<std::size_t>(q)]);
                }
                const auto doc_now = doc_vec.transpose().eval();
                const auto pos_now = out.output_words.row(word).transpose().eval();
                epoch_loss += negative_sampling_loss(doc_now, pos_now, negatives.topRows(n_neg));
                ++epoch_pairs;
                const auto grad = negative_sampling_gradient(doc_now, pos_now, negatives.topRows(n_neg));
                doc_vec -= lr * grad.anchor.transpose();
                out.output_words.row(word) -= lr * grad.positive.transpose();
                for (Eigen::Index q = 0; q < n_neg; ++q) {
                    out.output_words.row(negative_ids[static_cast<std::size_t>(q)]) -= lr * grad.negatives.row(q);
                }
            }
        }
        out.epoch_loss.push_back(epoch_pairs == 0 ? 0.0 : epoch_loss / static_cast<double>(epoch_pairs));
    }
    if (!out.documents.allFinite()) {
        throw std::runtime_error("textembed: non-finite document vectors (learning rate too high?)");
    }
    return out;
}

SemanticFeatures domain_features(const RowMatrixXd& patent_vectors,
                                 const std::vector<DomainCode>& patent_domains,
                                 const std::vector<DomainCode>& nodes) {
    if (static_cast<std::size_t>(patent_vectors.rows()) != patent_domains.size()) {
        throw std::invalid_argument("domain_features: one domain per patent vector required");
    }
    std::unordered_map<DomainCode, Eigen::Index> index;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        index.emplace(nodes[i], static_cast<Eigen::Index>(i));
    }
    SemanticFeatures features;
    features.nodes = nodes;
    features.values = RowMatrixXd::Zero(static_cast<Eigen::Index>(nodes.size()), patent_vectors.cols());
    std::vector<std::int64_t> members(nodes.size(), 0);
    for (std::size_t p = 0; p < patent_domains.size(); ++p) {
        auto it = index.find(patent_domains[p]);
        if (it == index.end()) {
            throw InputError("domain_features: patent domain " + patent_domains[p] + " not in node list");
        }
        features.values.row(it->second) += patent_vectors.row(static_cast<Eigen::Index>(p));
        ++members[static_cast<std::size_t>(it->second)];
    }
    std::string empty;
    for (std::size_t v = 0; v < nodes.size(); ++v) {
        if (members[v] == 0) {
            empty += (empty.empty() ? "" : ", ") + nodes[v];
            continue;
        }
        features.values.row(static_cast<Eigen::Index>(v)) /= static_cast<double>(members[v]);
    }
    if (!empty.empty()) {
        throw InputError("domain_features: domains without patents: " + empty);
    }
    return features;
}

} // namespace techland
