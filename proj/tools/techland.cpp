#include "techland/pipeline.hpp"

#include <CLI11.hpp>

#ifdef TECHLAND_HAVE_OPENMP
#include <omp.h>
#endif

#include <iostream>
#include <optional>

namespace {

struct GlobalOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    bool deterministic = false;
    std::string out_dir;
    std::string patents;
    std::string citations;
    std::string domains;
    std::string neighbors;
    std::string space;
    std::string binning;
    bool exclude_intra_domain = false;
};

techland::PipelineConfig resolve(const GlobalOptions& opts) {
    auto config = opts.config_path.empty() ? techland::PipelineConfig::from_json(nlohmann::json::object())
                                           : techland::PipelineConfig::load(opts.config_path);
    if (opts.seed) {
        config.reseed(*opts.seed);
    }
    if (opts.deterministic) {
        config.deterministic = true;
    }
    if (!opts.out_dir.empty()) {
        config.out_dir = opts.out_dir;
    }
    if (!opts.patents.empty()) {
        config.patents = opts.patents;
    }
    if (!opts.citations.empty()) {
        config.citations = opts.citations;
    }
    if (!opts.domains.empty()) {
        config.domains = opts.domains;
    }
    if (!opts.neighbors.empty()) {
        config.sage.policy = techland::parse_neighbor_policy(opts.neighbors);
    }
    if (!opts.space.empty()) {
        if (opts.space == "32d") {
            config.analysis.space = techland::DistanceSpace::embedding;
        } else if (opts.space == "2d") {
            config.analysis.space = techland::DistanceSpace::projection;
        } else {
            throw techland::InputError("--space must be 32d or 2d");
        }
    }
    if (!opts.binning.empty()) {
        config.analysis.binning = techland::parse_binning(opts.binning);
    }
    if (opts.exclude_intra_domain) {
        config.counts.include_intra_domain = false;
    }
#ifdef TECHLAND_HAVE_OPENMP
    // Eigen's threaded products partition by thread count, which shifts rounding.
    Eigen::setNbThreads(1);
    if (config.deterministic) {
        omp_set_num_threads(1);
    }
#endif
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"techland: technology landscape pipeline"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions opts;
    app.add_option("--config", opts.config_path, "Pipeline config (JSON)");
    app.add_option("--seed", opts.seed, "Base seed; re-derives every stage seed");
    app.add_flag("--deterministic", opts.deterministic, "Single-threaded, byte-reproducible run");
    app.add_option("--out-dir", opts.out_dir, "Directory for stage artifacts");
    app.add_option("--patents", opts.patents, "patents.jsonl (overrides the config)");
    app.add_option("--citations", opts.citations, "citations.csv (overrides the config)");
    app.add_option("--domains", opts.domains, "domains.csv (overrides the config)");
    app.add_option("--neighbors", opts.neighbors, "Neighborhood policy: undirected | out");
    app.add_option("--space", opts.space, "Distance space for the analysis: 32d | 2d");
    app.add_option("--binning", opts.binning, "Shift-matrix binning: equal_count | equal_width");
    app.add_flag("--exclude-intra-domain", opts.exclude_intra_domain,
                 "Drop citations between patents of the same domain");

    std::optional<techland::Stage> single;
    std::string run_target;
    bool show_config = false;
    for (techland::Stage stage : techland::kStages) {
        const std::string name(techland::stage_name(stage));
        app.add_subcommand(name, "Run the " + name + " stage")->callback([&single, stage] { single = stage; });
    }
    auto* run = app.add_subcommand("run", "Run one stage by name, or every stage with 'all'");
    run->add_option("stage", run_target, "Stage name or 'all'")->required();
    app.add_subcommand("config", "Print the fully resolved configuration")->callback([&] { show_config = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const auto config = resolve(opts);
        if (show_config) {
            std::cout << config.to_json().dump(2) << '\n';
        } else if (single) {
            techland::run_stage(*single, config);
        } else if (run_target == "all") {
            techland::run_all(config);
        } else {
            techland::run_stage(techland::parse_stage(run_target), config);
        }
    } catch (const techland::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
