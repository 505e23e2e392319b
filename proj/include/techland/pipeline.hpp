#ifndef TECHLAND_PIPELINE_HPP
#define TECHLAND_PIPELINE_HPP

#include "techland/analyze.hpp"
#include "techland/corpus.hpp"
#include "techland/graphembed.hpp"
#include "techland/landscape.hpp"
#include "techland/project.hpp"
#include "techland/textembed.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace techland {

inline constexpr const char* kBundleSchemaVersion = "1.0";

enum class Stage { ingest, textembed, graphembed, project, landscape, analyze, export_bundle };

inline constexpr Stage kStages[] = {Stage::ingest,    Stage::textembed, Stage::graphembed, Stage::project,
                                    Stage::landscape, Stage::analyze,   Stage::export_bundle};

std::string_view stage_name(Stage stage);
Stage parse_stage(std::string_view name);

enum class DistanceSpace { embedding, projection };

struct AnalysisConfig {
    std::vector<int> peak_sizes{1, 5, 10}; // one decile profile per M
    int peak_m = 10;                        // peak used for the theme shift, topics and the bundle marker
    DistanceSpace space = DistanceSpace::embedding;
    int shift_bins = 10;
    Binning binning = Binning::equal_count;
    int topics = 5;
    int nmf_iterations = 500;
    int top_terms = 10;
    std::uint64_t seed = 0;
};

struct PipelineConfig {
    std::filesystem::path patents;
    std::filesystem::path citations;
    std::filesystem::path domains;
    std::filesystem::path out_dir = "out";

    std::uint64_t seed = 42; // base seed; stage seeds derive from it unless set explicitly
    bool deterministic = false;

    CountOptions counts;
    TextEmbedConfig text;
    SageConfig sage;
    TsneConfig tsne;
    SurfaceConfig surface;
    int contour_levels = 10;
    AnalysisConfig analysis;

    /// Defaults, overridden by any keys present in `json`. Stage seeds not given
    /// explicitly are derived from `seed`.
    static PipelineConfig from_json(const nlohmann::json& json);
    static PipelineConfig load(const std::filesystem::path& path);

    /// Re-derive every stage seed from the base seed.
    void reseed(std::uint64_t base);

    /// Complete resolved configuration, including every default.
    nlohmann::ordered_json to_json() const;

    /// Throws InputError; checks input paths needed by `stage` (all inputs when nullopt).
    void validate(std::optional<Stage> stage = std::nullopt) const;
};

/// Run one stage. Refuses to start when an upstream artifact is missing.
void run_stage(Stage stage, const PipelineConfig& config);

/// Every stage in order.
void run_all(const PipelineConfig& config);

/// Self-contained explorer document assembled from the stage artifacts in `config.out_dir`.
nlohmann::ordered_json build_bundle(const PipelineConfig& config);

} // namespace techland

#endif // TECHLAND_PIPELINE_HPP
