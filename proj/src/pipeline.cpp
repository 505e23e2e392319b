#include "techland/pipeline.hpp"

#include "techland/artifacts.hpp"
#include "techland/nber.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace techland {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

// Bumped whenever a stage's algorithm or artifact layout changes.
const std::vector<std::pair<Stage, const char*>> kStageVersions{
    {Stage::ingest, "1"},   {Stage::textembed, "1"}, {Stage::graphembed, "1"}, {Stage::project, "1"},
    {Stage::landscape, "1"}, {Stage::analyze, "1"},  {Stage::export_bundle, "1"},
};

std::vector<const char*> stage_outputs(Stage stage) {
    switch (stage) {
    case Stage::ingest: return {"nodes.tsv", "counts.tsv", "weights.tsv", "ingest_report.json"};
    case Stage::textembed: return {"vocabulary.tsv", "patent_vectors.tsv", "domain_features.tsv", "textembed_report.json"};
    case Stage::graphembed: return {"embeddings.tsv", "model.json", "graphembed_report.json"};
    case Stage::project: return {"projection.tsv", "projection.json"};
    case Stage::landscape: return {"surface.json", "contours.json", "peak.json"};
    case Stage::analyze: return {"deciles.csv", "nber_shift.csv", "topics.json", "analysis.json"};
    case Stage::export_bundle: return {"landscape_bundle.json"};
    }
    return {};
}

std::vector<Stage> stage_inputs(Stage stage) {
    switch (stage) {
    case Stage::ingest: return {};
    case Stage::textembed: return {Stage::ingest};
    case Stage::graphembed: return {Stage::ingest, Stage::textembed};
    case Stage::project: return {Stage::graphembed};
    case Stage::landscape: return {Stage::ingest, Stage::graphembed, Stage::project};
    case Stage::analyze: return {Stage::ingest, Stage::textembed, Stage::graphembed, Stage::project};
    case Stage::export_bundle:
        return {Stage::ingest, Stage::textembed, Stage::graphembed, Stage::project, Stage::landscape, Stage::analyze};
    }
    return {};
}

void require_upstream(Stage stage, const fs::path& dir) {
    for (Stage upstream : stage_inputs(stage)) {
        for (const char* file : stage_outputs(upstream)) {
            if (!fs::exists(dir / file)) {
                throw InputError("missing artifact " + (dir / file).string() + ": run " +
                                 std::string(stage_name(upstream)) + " first");
            }
        }
    }
}

void log_stage(Stage stage, const std::string& message) {
    std::cerr << "[" << stage_name(stage) << "] " << message << '\n';
}

// Reads keys of `json` into the struct fields; unknown keys are rejected.
class Reader {
public:
    Reader(const nlohmann::json& json, std::string section) : json_(json), section_(std::move(section)) {
        if (!json_.is_object()) {
            throw InputError("config: '" + section_ + "' must be an object");
        }
    }

    template <typename T>
    bool read(const char* key, T& target) {
        seen_.insert(key);
        if (!json_.contains(key)) {
            return false;
        }
        try {
            target = json_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw InputError("config: bad value for " + section_ + "." + key);
        }
        return true;
    }

    // Descriptive keys echoed by to_json(); accepted only with the one value they can have.
    void fixed(const char* key, const char* value) {
        seen_.insert(key);
        if (json_.contains(key) && json_.at(key) != value) {
            throw InputError("config: " + section_ + "." + key + " can only be \"" + value + "\"");
        }
    }

    void finish() const {
        for (const auto& [key, value] : json_.items()) {
            if (!seen_.count(key)) {
                throw InputError("config: unknown key " + section_ + "." + key);
            }
        }
    }

private:
    const nlohmann::json& json_;
    std::string section_;
    std::set<std::string> seen_;
};

std::string space_name(DistanceSpace space) { return space == DistanceSpace::embedding ? "32d" : "2d"; }

DistanceSpace parse_space(const std::string& name) {
    if (name == "32d" || name == "embedding") {
        return DistanceSpace::embedding;
    }
    if (name == "2d" || name == "projection") {
        return DistanceSpace::projection;
    }
    throw InputError("config: analysis.space must be 32d or 2d");
}

std::vector<int> peak_sizes(const AnalysisConfig& analysis) {
    std::set<int> sizes(analysis.peak_sizes.begin(), analysis.peak_sizes.end());
    sizes.insert(analysis.peak_m);
    return {sizes.begin(), sizes.end()};
}

void check_same_nodes(const std::vector<std::string>& expected, const std::vector<std::string>& found,
                      const std::string& artifact) {
    if (expected == found) {
        return;
    }
    const std::set<std::string> a(expected.begin(), expected.end());
    const std::set<std::string> b(found.begin(), found.end());
    std::vector<std::string> only_a;
    std::vector<std::string> only_b;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(only_a));
    std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(only_b));
    std::ostringstream os;
    os << "domain set mismatch between nodes.tsv and " << artifact << ":";
    if (only_a.empty() && only_b.empty()) {
        os << " same domains in a different order";
    }
    auto list = [&](const char* label, const std::vector<std::string>& codes) {
        if (codes.empty()) {
            return;
        }
        os << ' ' << label << " [";
        for (std::size_t i = 0; i < codes.size() && i < 10; ++i) {
            os << (i ? ", " : "") << codes[i];
        }
        if (codes.size() > 10) {
            os << ", ... (" << codes.size() << " total)";
        }
        os << ']';
    };
    list("missing", only_a);
    list("unexpected", only_b);
    throw InputError(os.str());
}

Eigen::VectorXd rates_vector(const artifacts::NodeTable& nodes) {
    return Eigen::Map<const Eigen::VectorXd>(nodes.rates.data(), static_cast<Eigen::Index>(nodes.rates.size()));
}

struct LoadedSpace {
    artifacts::NodeTable nodes;
    artifacts::KeyedMatrix embeddings;
    artifacts::KeyedMatrix projection;
};

LoadedSpace load_space(const fs::path& dir) {
    LoadedSpace space;
    space.nodes = artifacts::read_nodes(dir / "nodes.tsv");
    space.embeddings = artifacts::read_keyed_matrix(dir / "embeddings.tsv");
    check_same_nodes(space.nodes.codes, space.embeddings.keys, "embeddings.tsv");
    space.projection = artifacts::read_keyed_matrix(dir / "projection.tsv");
    check_same_nodes(space.nodes.codes, space.projection.keys, "projection.tsv");
    return space;
}

std::vector<std::string> numbered_header(const std::string& key, const std::string& prefix, Eigen::Index count) {
    std::vector<std::string> header{key};
    for (Eigen::Index i = 1; i <= count; ++i) {
        header.push_back(prefix + std::to_string(i));
    }
    return header;
}

ordered_json quantile_json(const QuantileReport& report) {
    ordered_json json;
    json["m"] = report.m;
    json["groups"] = ordered_json::array();
    for (std::size_t g = 0; g < report.groups.size(); ++g) {
        const auto& group = report.groups[g];
        json["groups"].push_back({{"decile", g + 1},
                                  {"d_min", group.d_min},
                                  {"d_max", group.d_max},
                                  {"count", group.count},
                                  {"mean_rate", group.mean_rate}});
    }
    return json;
}

std::string quantile_csv(const QuantileReport& report) {
    std::ostringstream os;
    os << "decile,d_min,d_max,count,mean_rate\n";
    for (std::size_t g = 0; g < report.groups.size(); ++g) {
        const auto& group = report.groups[g];
        os << g + 1 << ',' << format_double(group.d_min) << ',' << format_double(group.d_max) << ','
           << group.count << ',' << format_double(group.mean_rate) << '\n';
    }
    return os.str();
}

std::string shift_csv(const ShiftMatrix& shift) {
    std::ostringstream os;
    os << "subcategory,name,category";
    for (Eigen::Index b = 0; b < shift.values.cols(); ++b) {
        os << ",bin" << b + 1;
    }
    os << '\n';
    for (std::size_t r = 0; r < nber::kSubcategories.size(); ++r) {
        const auto& sub = nber::kSubcategories[r];
        os << sub.code << ",\"" << sub.name << "\"," << nber::category_of(sub.code);
        for (Eigen::Index b = 0; b < shift.values.cols(); ++b) {
            os << ',' << format_double(shift.values(static_cast<Eigen::Index>(r), b));
        }
        os << '\n';
    }
    return os.str();
}

ordered_json shift_rows_json(const ShiftMatrix& shift) {
    auto rows = ordered_json::array();
    for (std::size_t r = 0; r < nber::kSubcategories.size(); ++r) {
        const auto& sub = nber::kSubcategories[r];
        std::vector<double> values(static_cast<std::size_t>(shift.values.cols()));
        for (Eigen::Index b = 0; b < shift.values.cols(); ++b) {
            values[static_cast<std::size_t>(b)] = shift.values(static_cast<Eigen::Index>(r), b);
        }
        rows.push_back({{"subcategory", sub.code},
                        {"name", std::string(sub.name)},
                        {"category", nber::category_of(sub.code)},
                        {"values", values}});
    }
    return rows;
}

ordered_json topics_json(const TopicSet& topics) {
    auto list = ordered_json::array();
    for (std::size_t t = 0; t < topics.topics.size(); ++t) {
        ordered_json topic;
        topic["topic"] = t + 1;
        topic["terms"] = ordered_json::array();
        for (const auto& [term, weight] : topics.topics[t].top_terms) {
            topic["terms"].push_back({{"term", term}, {"weight", weight}});
        }
        list.push_back(std::move(topic));
    }
    return list;
}

IngestResult read_inputs_without_citations(const PipelineConfig& config) {
    IngestResult result;
    {
        std::ifstream in(config.domains);
        if (!in) {
            throw InputError("cannot open " + config.domains.string());
        }
        result.catalog = read_catalog(in);
    }
    std::ifstream in(config.patents);
    if (!in) {
        throw InputError("cannot open " + config.patents.string());
    }
    result.corpus = read_patents(in, result.catalog);
    return result;
}

// --- stages --------------------------------------------------------------

void run_ingest(const PipelineConfig& config) {
    const auto& dir = config.out_dir;
    auto input = ingest(config.patents, config.citations, config.domains);
    auto nodes = input.catalog.codes();
    auto counts = build_domain_counts(input.corpus, input.citations.pairs, nodes, config.counts);
    const auto retained = counts.sum();
    auto graph = build_domain_graph(std::move(nodes), std::move(counts));

    artifacts::write_nodes(dir / "nodes.tsv", graph, input.catalog);
    artifacts::write_counts(dir / "counts.tsv", graph);
    artifacts::write_weights(dir / "weights.tsv", graph);

    std::vector<std::string> isolated;
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        if (graph.isolated_out[i]) {
            isolated.push_back(graph.nodes[i]);
        }
    }
    ordered_json report;
    report["patents"] = input.corpus.size();
    report["domains"] = graph.nodes.size();
    report["citation_pairs"] = input.citations.pairs.size();
    report["dangling_citations"] = input.citations.dangling;
    report["counted_citations"] = retained;
    report["include_intra_domain"] = config.counts.include_intra_domain;
    report["isolated_out"] = isolated;
    artifacts::write_json(dir / "ingest_report.json", report);
    log_stage(Stage::ingest, std::to_string(input.corpus.size()) + " patents, " +
                                 std::to_string(input.citations.pairs.size()) + " citations (" +
                                 std::to_string(input.citations.dangling) + " dangling), " +
                                 std::to_string(graph.nodes.size()) + " domains");
}

void run_textembed(const PipelineConfig& config) {
    const auto& dir = config.out_dir;
    const auto nodes = artifacts::read_nodes(dir / "nodes.tsv");
    const auto input = read_inputs_without_citations(config);
    const auto docs = tokenize_corpus(input.corpus);
    const auto vocab = Vocabulary::build(docs, config.text.min_count, config.text.subsample);
    std::vector<std::vector<int>> encoded;
    encoded.reserve(docs.size());
    for (const auto& doc : docs) {
        encoded.push_back(vocab.encode(doc));
    }
    const auto vectors = train_doc_vectors(encoded, vocab, config.text);

    std::vector<std::string> ids;
    std::vector<DomainCode> domains;
    for (const auto& p : input.corpus.patents) {
        ids.push_back(p.id);
        domains.push_back(p.domain);
    }
    const auto features = domain_features(vectors.documents, domains, nodes.codes);

    artifacts::write_vocabulary(dir / "vocabulary.tsv", vocab);
    artifacts::write_keyed_matrix(dir / "patent_vectors.tsv", numbered_header("id", "v", config.text.dim), ids,
                                  vectors.documents);
    artifacts::write_keyed_matrix(dir / "domain_features.tsv", numbered_header("code", "x", config.text.dim),
                                  features.nodes, features.values);
    ordered_json report;
    report["vocabulary_size"] = vocab.size();
    report["documents"] = encoded.size();
    report["epoch_loss"] = vectors.epoch_loss;
    artifacts::write_json(dir / "textembed_report.json", report);
    log_stage(Stage::textembed, std::to_string(vocab.size()) + " terms, final loss " +
                                    format_double(vectors.epoch_loss.back()));
}

void run_graphembed(const PipelineConfig& config) {
    const auto& dir = config.out_dir;
    const auto nodes = artifacts::read_nodes(dir / "nodes.tsv");
    const auto graph = artifacts::read_graph(dir / "counts.tsv", nodes.codes);
    const auto feature_table = artifacts::read_keyed_matrix(dir / "domain_features.tsv");
    check_same_nodes(nodes.codes, feature_table.keys, "domain_features.tsv");
    SemanticFeatures features{feature_table.keys, feature_table.values};
    std::optional<FeatureScaling> scaling;
    if (config.sage.standardize_features) {
        scaling = standardize_columns(features.values);
    }

    const auto result = train(graph, features, config.sage);
    artifacts::write_keyed_matrix(dir / "embeddings.tsv",
                                  numbered_header("code", "z", result.embeddings.vectors.cols()),
                                  result.embeddings.nodes, result.embeddings.vectors);
    artifacts::write_json(dir / "model.json", artifacts::model_to_json(result.model));

    std::vector<std::string> degenerate;
    for (std::size_t i = 0; i < result.embeddings.nodes.size(); ++i) {
        if (result.embeddings.degenerate[i]) {
            degenerate.push_back(result.embeddings.nodes[i]);
        }
    }
    ordered_json report;
    report["epoch_loss"] = result.epoch_loss;
    report["degenerate"] = degenerate;
    if (scaling) {
        report["feature_mean"] = std::vector<double>(scaling->mean.data(), scaling->mean.data() + scaling->mean.size());
        report["feature_scale"] =
            std::vector<double>(scaling->scale.data(), scaling->scale.data() + scaling->scale.size());
    }
    artifacts::write_json(dir / "graphembed_report.json", report);
    log_stage(Stage::graphembed,
              "loss " + format_double(result.epoch_loss.empty() ? 0.0 : result.epoch_loss.front()) + " -> " +
                  format_double(result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back()));
}

void run_project(const PipelineConfig& config) {
    const auto& dir = config.out_dir;
    const auto embeddings = artifacts::read_keyed_matrix(dir / "embeddings.tsv");
    const auto projection = tsne(embeddings.values, embeddings.keys, config.tsne);
    artifacts::write_keyed_matrix(dir / "projection.tsv", {"code", "x", "y"}, projection.nodes,
                                  projection.coordinates);
    ordered_json sidecar;
    sidecar["config"] = config.to_json()["tsne"];
    sidecar["kl_divergence"] = projection.kl_divergence;
    sidecar["warnings"] = projection.warnings;
    sidecar["kl_trace"] = projection.kl_trace;
    artifacts::write_json(dir / "projection.json", sidecar);
    for (const auto& w : projection.warnings) {
        log_stage(Stage::project, "warning: " + w);
    }
    log_stage(Stage::project, "KL " + format_double(projection.kl_divergence));
}

void run_landscape(const PipelineConfig& config) {
    const auto& dir = config.out_dir;
    const auto space = load_space(dir);
    const auto rates = rates_vector(space.nodes);
    const auto grid = fit_surface(space.projection.values, rates, config.surface);
    const auto contours = export_contours(grid, default_levels(grid, config.contour_levels));

    ordered_json peaks;
    peaks["primary_m"] = config.analysis.peak_m;
    peaks["peaks"] = ordered_json::array();
    for (int m : peak_sizes(config.analysis)) {
        peaks["peaks"].push_back(artifacts::peak_to_json(
            find_peak(space.embeddings.values, space.projection.values, rates, space.nodes.codes, m)));
    }
    artifacts::write_json(dir / "surface.json", artifacts::surface_to_json(grid));
    artifacts::write_json(dir / "contours.json", artifacts::contours_to_json(contours));
    artifacts::write_json(dir / "peak.json", peaks);
    log_stage(Stage::landscape, std::to_string(grid.nx) + "x" + std::to_string(grid.ny) + " grid, bandwidth " +
                                    format_double(grid.bandwidth));
}

void run_analyze(const PipelineConfig& config) {
    const auto& dir = config.out_dir;
    const auto space = load_space(dir);
    const auto rates = rates_vector(space.nodes);
    const auto& a = config.analysis;
    const RowMatrixXd& points =
        a.space == DistanceSpace::embedding ? space.embeddings.values : space.projection.values;

    ordered_json analysis;
    analysis["space"] = space_name(a.space);
    analysis["deciles"] = ordered_json::array();
    std::optional<PeakInfo> primary;
    Eigen::VectorXd primary_distances;
    for (int m : peak_sizes(a)) {
        const auto peak = find_peak(space.embeddings.values, space.projection.values, rates, space.nodes.codes, m);
        const Eigen::VectorXd center =
            a.space == DistanceSpace::embedding ? peak.centroid_high : Eigen::VectorXd(peak.centroid_2d);
        const auto distances = distances_to(points, center);
        const auto report = distance_deciles(distances, rates, space.nodes.codes, m);
        artifacts::write_text(dir / ("deciles_m" + std::to_string(m) + ".csv"), quantile_csv(report));
        if (m == a.peak_m) {
            artifacts::write_text(dir / "deciles.csv", quantile_csv(report));
            primary = peak;
            primary_distances = distances;
        }
        analysis["deciles"].push_back(quantile_json(report));
    }

    const auto shift = nber_shift(space.nodes.subcategories, primary_distances, space.nodes.codes, a.shift_bins,
                                  a.binning);
    artifacts::write_text(dir / "nber_shift.csv", shift_csv(shift));
    analysis["nber_shift"] = {{"m", a.peak_m},
                              {"binning", std::string(to_string(a.binning))},
                              {"bin_edges", shift.bin_edges},
                              {"column_counts", shift.column_counts},
                              {"empty_columns", shift.empty_columns},
                              {"rows", shift_rows_json(shift)}};

    const auto input = read_inputs_without_citations(config);
    const std::set<std::string> members(primary->members.begin(), primary->members.end());
    std::vector<std::vector<std::string>> peak_docs;
    const auto docs = tokenize_corpus(input.corpus);
    for (std::size_t p = 0; p < input.corpus.size(); ++p) {
        if (members.count(input.corpus.patents[p].domain)) {
            peak_docs.push_back(docs[p]);
        }
    }
    const auto vocab = artifacts::read_vocabulary(dir / "vocabulary.tsv", config.text.min_count, config.text.subsample);
    const auto topics = nmf_topics(peak_docs, vocab, a.topics, a.nmf_iterations, a.seed, a.top_terms);
    ordered_json topic_doc;
    topic_doc["m"] = a.peak_m;
    topic_doc["documents"] = peak_docs.size();
    topic_doc["k"] = topics.k;
    topic_doc["final_error"] = topics.error_trace.empty() ? 0.0 : topics.error_trace.back();
    topic_doc["topics"] = topics_json(topics);
    artifacts::write_json(dir / "topics.json", topic_doc);
    artifacts::write_json(dir / "analysis.json", analysis);
    log_stage(Stage::analyze, std::to_string(peak_docs.size()) + " peak documents, " + std::to_string(a.topics) +
                                  " topics");
}

void run_export(const PipelineConfig& config) {
    artifacts::write_json(config.out_dir / "landscape_bundle.json", build_bundle(config));
    log_stage(Stage::export_bundle, (config.out_dir / "landscape_bundle.json").string());
}

} // namespace

std::string_view stage_name(Stage stage) {
    switch (stage) {
    case Stage::ingest: return "ingest";
    case Stage::textembed: return "textembed";
    case Stage::graphembed: return "graphembed";
    case Stage::project: return "project";
    case Stage::landscape: return "landscape";
    case Stage::analyze: return "analyze";
    case Stage::export_bundle: return "export";
    }
    return "?";
}

Stage parse_stage(std::string_view name) {
    for (Stage s : kStages) {
        if (stage_name(s) == name) {
            return s;
        }
    }
    throw InputError("unknown stage '" + std::string(name) + "'");
}

void PipelineConfig::reseed(std::uint64_t base) {
    seed = base;
    text.seed = mix_seed(base, 11);
    sage.seed = mix_seed(base, 12);
    tsne.seed = mix_seed(base, 13);
    analysis.seed = mix_seed(base, 14);
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& json) {
    PipelineConfig c;
    Reader top(json, "config");
    top.read("seed", c.seed);
    c.reseed(c.seed);
    top.read("deterministic", c.deterministic);
    std::string out_dir;
    if (top.read("out_dir", out_dir)) {
        c.out_dir = out_dir;
    }

    static const nlohmann::json empty = nlohmann::json::object();
    auto sub = [&](const char* name) -> const nlohmann::json& {
        return json.contains(name) ? json.at(name) : empty;
    };
    for (const char* name : {"inputs", "corpus", "textembed", "graphembed", "tsne", "landscape", "analysis"}) {
        nlohmann::json ignored;
        top.read(name, ignored);
    }
    top.finish();

    {
        Reader r(sub("inputs"), "inputs");
        std::string path;
        if (r.read("patents", path)) c.patents = path;
        if (r.read("citations", path)) c.citations = path;
        if (r.read("domains", path)) c.domains = path;
        r.finish();
    }
    {
        Reader r(sub("corpus"), "corpus");
        r.read("include_intra_domain", c.counts.include_intra_domain);
        std::string policy;
        if (r.read("neighbor_policy", policy)) {
            c.sage.policy = parse_neighbor_policy(policy);
        }
        r.finish();
    }
    {
        Reader r(sub("textembed"), "textembed");
        auto& t = c.text;
        r.fixed("variant", "dbow-negative-sampling");
        r.fixed("learning_rate_schedule", "linear decay to 1e-4 of initial");
        r.fixed("negative_distribution", "unigram^0.75");
        r.fixed("init", "uniform [-0.5/dim, 0.5/dim]");
        r.read("dim", t.dim);
        r.read("epochs", t.epochs);
        r.read("negatives", t.negatives);
        r.read("learning_rate", t.learning_rate);
        r.read("min_count", t.min_count);
        r.read("subsample", t.subsample);
        r.read("seed", t.seed);
        r.finish();
    }
    {
        Reader r(sub("graphembed"), "graphembed");
        auto& s = c.sage;
        r.fixed("negative_distribution", "degree^0.75");
        r.fixed("init", "xavier-uniform");
        r.read("depth", s.depth);
        r.read("sample_sizes", s.sample_sizes);
        r.read("hidden_dim", s.hidden_dim);
        r.read("output_dim", s.output_dim);
        r.read("nonlinearity", s.nonlinearity);
        r.read("aggregator", s.aggregator);
        r.read("negatives", s.negatives);
        r.read("walk_length", s.walk_length);
        r.read("walks_per_node", s.walks_per_node);
        r.read("window", s.window);
        r.read("learning_rate", s.learning_rate);
        r.read("epochs", s.epochs);
        r.read("batch_size", s.batch_size);
        r.read("optimizer", s.optimizer);
        r.read("weighted_sampling", s.weighted_sampling);
        r.read("weighted_walks", s.weighted_walks);
        r.read("full_neighborhood", s.full_neighborhood);
        r.read("frozen_samples", s.frozen_samples);
        r.read("standardize_features", s.standardize_features);
        r.read("seed", s.seed);
        r.finish();
    }
    {
        Reader r(sub("tsne"), "tsne");
        auto& t = c.tsne;
        r.fixed("method", "exact");
        r.read("perplexity", t.perplexity);
        r.read("iterations", t.iterations);
        r.read("exaggeration", t.exaggeration);
        r.read("exaggeration_iterations", t.exaggeration_iterations);
        r.read("learning_rate", t.learning_rate);
        r.read("initial_momentum", t.initial_momentum);
        r.read("final_momentum", t.final_momentum);
        r.read("momentum_switch", t.momentum_switch);
        r.read("init_stddev", t.init_stddev);
        r.read("calibration_iterations", t.calibration_iterations);
        r.read("seed", t.seed);
        r.finish();
    }
    {
        Reader r(sub("landscape"), "landscape");
        r.fixed("method", "gaussian kernel smoothing");
        r.fixed("bandwidth_rule", "bounding-box diagonal / 30 when bandwidth <= 0");
        r.read("nx", c.surface.nx);
        r.read("ny", c.surface.ny);
        r.read("bandwidth", c.surface.bandwidth);
        r.read("min_weight", c.surface.min_weight);
        r.read("contour_levels", c.contour_levels);
        r.finish();
    }
    {
        Reader r(sub("analysis"), "analysis");
        auto& a = c.analysis;
        r.read("peak_sizes", a.peak_sizes);
        r.read("peak_m", a.peak_m);
        std::string text;
        if (r.read("space", text)) a.space = parse_space(text);
        r.read("shift_bins", a.shift_bins);
        if (r.read("binning", text)) a.binning = parse_binning(text);
        r.read("topics", a.topics);
        r.read("nmf_iterations", a.nmf_iterations);
        r.read("top_terms", a.top_terms);
        r.read("seed", a.seed);
        r.finish();
    }
    return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open config " + path.string());
    }
    nlohmann::json json;
    try {
        json = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InputError("config " + path.string() + ": " + e.what());
    }
    auto config = from_json(json);
    // Relative input paths are relative to the config file.
    const auto base = path.parent_path();
    for (fs::path* p : {&config.patents, &config.citations, &config.domains}) {
        if (!p->empty() && p->is_relative()) {
            *p = base / *p;
        }
    }
    return config;
}

ordered_json PipelineConfig::to_json() const {
    ordered_json j;
    j["seed"] = seed;
    j["deterministic"] = deterministic;
    j["inputs"] = {{"patents", patents.string()}, {"citations", citations.string()}, {"domains", domains.string()}};
    j["corpus"] = {{"include_intra_domain", counts.include_intra_domain},
                   {"neighbor_policy", std::string(to_string(sage.policy))}};
    j["textembed"] = {{"variant", "dbow-negative-sampling"},
                      {"dim", text.dim},
                      {"epochs", text.epochs},
                      {"negatives", text.negatives},
                      {"learning_rate", text.learning_rate},
                      {"learning_rate_schedule", "linear decay to 1e-4 of initial"},
                      {"min_count", text.min_count},
                      {"subsample", text.subsample},
                      {"negative_distribution", "unigram^0.75"},
                      {"init", "uniform [-0.5/dim, 0.5/dim]"},
                      {"seed", text.seed}};
    j["graphembed"] = {{"depth", sage.depth},
                       {"sample_sizes", sage.sample_sizes},
                       {"hidden_dim", sage.hidden_dim},
                       {"output_dim", sage.output_dim},
                       {"nonlinearity", sage.nonlinearity},
                       {"aggregator", sage.aggregator},
                       {"negatives", sage.negatives},
                       {"negative_distribution", "degree^0.75"},
                       {"walk_length", sage.walk_length},
                       {"walks_per_node", sage.walks_per_node},
                       {"window", sage.window},
                       {"learning_rate", sage.learning_rate},
                       {"epochs", sage.epochs},
                       {"batch_size", sage.batch_size},
                       {"optimizer", sage.optimizer},
                       {"init", "xavier-uniform"},
                       {"weighted_sampling", sage.weighted_sampling},
                       {"weighted_walks", sage.weighted_walks},
                       {"full_neighborhood", sage.full_neighborhood},
                       {"frozen_samples", sage.frozen_samples},
                       {"standardize_features", sage.standardize_features},
                       {"seed", sage.seed}};
    j["tsne"] = {{"method", "exact"},
                 {"perplexity", tsne.perplexity},
                 {"iterations", tsne.iterations},
                 {"exaggeration", tsne.exaggeration},
                 {"exaggeration_iterations", tsne.exaggeration_iterations},
                 {"learning_rate", tsne.learning_rate},
                 {"initial_momentum", tsne.initial_momentum},
                 {"final_momentum", tsne.final_momentum},
                 {"momentum_switch", tsne.momentum_switch},
                 {"init_stddev", tsne.init_stddev},
                 {"calibration_iterations", tsne.calibration_iterations},
                 {"seed", tsne.seed}};
    j["landscape"] = {{"method", "gaussian kernel smoothing"},
                      {"nx", surface.nx},
                      {"ny", surface.ny},
                      {"bandwidth", surface.bandwidth},
                      {"bandwidth_rule", "bounding-box diagonal / 30 when bandwidth <= 0"},
                      {"min_weight", surface.min_weight},
                      {"contour_levels", contour_levels}};
    j["analysis"] = {{"peak_sizes", analysis.peak_sizes},
                     {"peak_m", analysis.peak_m},
                     {"space", space_name(analysis.space)},
                     {"shift_bins", analysis.shift_bins},
                     {"binning", std::string(to_string(analysis.binning))},
                     {"topics", analysis.topics},
                     {"nmf_iterations", analysis.nmf_iterations},
                     {"top_terms", analysis.top_terms},
                     {"seed", analysis.seed}};
    return j;
}

void PipelineConfig::validate(std::optional<Stage> stage) const {
    const bool needs_inputs = !stage || *stage == Stage::ingest || *stage == Stage::textembed ||
                              *stage == Stage::analyze;
    if (needs_inputs) {
        std::vector<std::pair<const char*, const fs::path*>> inputs{{"patents", &patents}, {"domains", &domains}};
        if (!stage || *stage == Stage::ingest) {
            inputs.emplace_back("citations", &citations);
        }
        for (const auto& [name, path] : inputs) {
            if (path->empty()) {
                throw InputError(std::string("config: inputs.") + name + " is not set");
            }
            if (!fs::is_regular_file(*path)) {
                throw InputError(std::string("config: inputs.") + name + " not found: " + path->string());
            }
        }
    }
    sage.validate();
    if (text.dim <= 0 || text.epochs <= 0 || text.negatives < 0 || !(text.learning_rate > 0.0) || text.min_count < 1) {
        throw InputError("config: invalid textembed settings");
    }
    if (!(tsne.perplexity > 0.0) || tsne.iterations < 1 || !(tsne.learning_rate > 0.0)) {
        throw InputError("config: invalid tsne settings");
    }
    if (surface.nx < 2 || surface.ny < 2 || contour_levels < 0) {
        throw InputError("config: invalid landscape settings");
    }
    if (analysis.peak_m < 1 || analysis.shift_bins < 2 || analysis.topics < 1 || analysis.nmf_iterations < 1 ||
        std::any_of(analysis.peak_sizes.begin(), analysis.peak_sizes.end(), [](int m) { return m < 1; })) {
        throw InputError("config: invalid analysis settings");
    }
}

void run_stage(Stage stage, const PipelineConfig& config) {
    config.validate(stage);
    require_upstream(stage, config.out_dir);
    fs::create_directories(config.out_dir);
    switch (stage) {
    case Stage::ingest: run_ingest(config); break;
    case Stage::textembed: run_textembed(config); break;
    case Stage::graphembed: run_graphembed(config); break;
    case Stage::project: run_project(config); break;
    case Stage::landscape: run_landscape(config); break;
    case Stage::analyze: run_analyze(config); break;
    case Stage::export_bundle: run_export(config); break;
    }
}

void run_all(const PipelineConfig& config) {
    config.validate();
    for (Stage stage : kStages) {
        run_stage(stage, config);
    }
}

ordered_json build_bundle(const PipelineConfig& config) {
    const auto& dir = config.out_dir;
    require_upstream(Stage::export_bundle, dir);
    const auto space = load_space(dir);
    const auto features = artifacts::read_keyed_matrix(dir / "domain_features.tsv");
    check_same_nodes(space.nodes.codes, features.keys, "domain_features.tsv");

    auto peaks = artifacts::read_json(dir / "peak.json");
    auto analysis = artifacts::read_json(dir / "analysis.json");
    auto topics = artifacts::read_json(dir / "topics.json");
    auto projection = artifacts::read_json(dir / "projection.json");
    auto ingest_report = artifacts::read_json(dir / "ingest_report.json");

    const std::set<std::string> known(space.nodes.codes.begin(), space.nodes.codes.end());
    ordered_json primary_peak;
    for (const auto& peak : peaks.at("peaks")) {
        for (const auto& member : peak.at("members")) {
            if (!known.count(member.get<std::string>())) {
                throw InputError("domain set mismatch: peak.json lists unknown domain " + member.get<std::string>());
            }
        }
        if (peak.at("m").get<int>() == peaks.at("primary_m").get<int>()) {
            primary_peak = peak;
        }
    }
    if (primary_peak.is_null()) {
        throw InputError("peak.json has no entry for the primary peak size");
    }

    ordered_json bundle;
    ordered_json meta;
    meta["schema_version"] = kBundleSchemaVersion;
    meta["generator"] = {{"name", "techland"}, {"version", kToolVersion}};
    ordered_json stages;
    for (const auto& [stage, version] : kStageVersions) {
        stages[std::string(stage_name(stage))] = version;
    }
    meta["stage_versions"] = stages;
    meta["config"] = config.to_json();
    meta["corpus"] = ingest_report;
    meta["projection"] = {{"kl_divergence", projection.at("kl_divergence")}, {"warnings", projection.at("warnings")}};
    meta["distance_space"] = analysis.at("space");
    auto labels = ordered_json::array();
    for (const auto& sub : nber::kSubcategories) {
        labels.push_back({{"code", sub.code},
                          {"name", std::string(sub.name)},
                          {"category", nber::category_of(sub.code)}});
    }
    auto categories = ordered_json::array();
    for (const auto& cat : nber::kCategories) {
        categories.push_back({{"code", cat.code}, {"name", std::string(cat.name)}});
    }
    meta["nber_subcategories"] = labels;
    meta["nber_categories"] = categories;
    bundle["meta"] = meta;

    auto domains = ordered_json::array();
    for (std::size_t i = 0; i < space.nodes.codes.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const auto& z = space.embeddings.values;
        std::vector<double> zv(static_cast<std::size_t>(z.cols()));
        for (Eigen::Index c = 0; c < z.cols(); ++c) {
            zv[static_cast<std::size_t>(c)] = z(row, c);
        }
        domains.push_back({{"code", space.nodes.codes[i]},
                           {"rate", space.nodes.rates[i]},
                           {"nber", space.nodes.subcategories[i]},
                           {"nber_category", nber::category_of(space.nodes.subcategories[i])},
                           {"xy", {space.projection.values(row, 0), space.projection.values(row, 1)}},
                           {"z", zv}});
    }
    bundle["domains"] = domains;
    bundle["surface"] = artifacts::read_json(dir / "surface.json");
    bundle["contours"] = artifacts::read_json(dir / "contours.json");
    bundle["peak"] = primary_peak;
    bundle["peaks"] = peaks.at("peaks");
    bundle["deciles"] = analysis.at("deciles");
    const auto& shift = analysis.at("nber_shift");
    bundle["nber_shift"] = shift.at("rows");
    bundle["nber_shift_bins"] = {{"m", shift.at("m")},
                                 {"binning", shift.at("binning")},
                                 {"edges", shift.at("bin_edges")},
                                 {"counts", shift.at("column_counts")},
                                 {"empty", shift.at("empty_columns")}};
    bundle["topics"] = topics.at("topics");
    return bundle;
}

} // namespace techland
