#ifndef TECHLAND_ARTIFACTS_HPP
#define TECHLAND_ARTIFACTS_HPP

#include "techland/corpus.hpp"
#include "techland/graphembed.hpp"
#include "techland/landscape.hpp"
#include "techland/textembed.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

// On-disk stage artifacts. Tab-separated text with shortest round-trip
// decimals, so re-reading an artifact reproduces the in-memory values exactly.
namespace techland::artifacts {

namespace fs = std::filesystem;

struct KeyedMatrix {
    std::vector<std::string> keys;
    RowMatrixXd values;
};

/// `header` names every column, key column first.
void write_keyed_matrix(const fs::path& path, const std::vector<std::string>& header,
                        const std::vector<std::string>& keys, const RowMatrixXd& values);
KeyedMatrix read_keyed_matrix(const fs::path& path);

struct NodeTable {
    std::vector<DomainCode> codes;
    std::vector<double> rates;
    std::vector<int> subcategories;
    std::vector<bool> isolated_out;
};

void write_nodes(const fs::path& path, const DomainGraph& graph, const DomainCatalog& catalog);
NodeTable read_nodes(const fs::path& path);

/// Sparse matrix as (row code, column code, value) lines.
void write_counts(const fs::path& path, const DomainGraph& graph);
void write_weights(const fs::path& path, const DomainGraph& graph);
DomainGraph read_graph(const fs::path& counts_path, const std::vector<DomainCode>& nodes);

void write_vocabulary(const fs::path& path, const Vocabulary& vocabulary);
Vocabulary read_vocabulary(const fs::path& path, std::int64_t min_count, double subsample);

/// {"format": "techland-sage-model", "layers": [{"rows", "cols", "data" (row-major)}]}
nlohmann::ordered_json model_to_json(const SageModel& model);
SageModel model_from_json(const nlohmann::ordered_json& json);

nlohmann::ordered_json surface_to_json(const SurfaceGrid& grid);
nlohmann::ordered_json contours_to_json(const std::vector<ContourLevel>& contours);
nlohmann::ordered_json peak_to_json(const PeakInfo& peak);

void write_json(const fs::path& path, const nlohmann::ordered_json& json);
nlohmann::ordered_json read_json(const fs::path& path);

/// Writes `text` exactly (used for CSV tables).
void write_text(const fs::path& path, const std::string& text);

} // namespace techland::artifacts

#endif // TECHLAND_ARTIFACTS_HPP
