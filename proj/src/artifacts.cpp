#include "techland/artifacts.hpp"

#include <fstream>
#include <sstream>

namespace techland::artifacts {

namespace {

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

std::ifstream open_artifact(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot read artifact " + path.string());
    }
    return in;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        out.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos) {
            break;
        }
        start = tab + 1;
    }
    return out;
}

std::string artifact_error(const fs::path& path, std::size_t line, const std::string& what) {
    return path.filename().string() + ":" + std::to_string(line) + ": " + what;
}

} // namespace

void write_keyed_matrix(const fs::path& path, const std::vector<std::string>& header,
                        const std::vector<std::string>& keys, const RowMatrixXd& values) {
    if (static_cast<Eigen::Index>(keys.size()) != values.rows() ||
        static_cast<Eigen::Index>(header.size()) != values.cols() + 1) {
        throw std::invalid_argument("write_keyed_matrix: shape mismatch");
    }
    auto out = open_output(path);
    for (std::size_t c = 0; c < header.size(); ++c) {
        out << (c ? "\t" : "") << header[c];
    }
    out << '\n';
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        out << keys[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            out << '\t' << format_double(values(r, c));
        }
        out << '\n';
    }
}

KeyedMatrix read_keyed_matrix(const fs::path& path) {
    auto in = open_artifact(path);
    std::string line;
    if (!std::getline(in, line)) {
        throw InputError(artifact_error(path, 1, "missing header"));
    }
    const auto cols = static_cast<Eigen::Index>(split_tabs(line).size()) - 1;
    KeyedMatrix result;
    std::vector<double> data;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        auto fields = split_tabs(line);
        if (static_cast<Eigen::Index>(fields.size()) != cols + 1) {
            throw InputError(artifact_error(path, lineno, "wrong column count"));
        }
        result.keys.push_back(fields[0]);
        for (std::size_t c = 1; c < fields.size(); ++c) {
            try {
                data.push_back(parse_double(fields[c]));
            } catch (const InputError& e) {
                throw InputError(artifact_error(path, lineno, e.what()));
            }
        }
    }
    result.values = Eigen::Map<RowMatrixXd>(data.data(), static_cast<Eigen::Index>(result.keys.size()), cols);
    return result;
}

void write_nodes(const fs::path& path, const DomainGraph& graph, const DomainCatalog& catalog) {
    auto out = open_output(path);
    out << "code\timprovement_rate\tnber_subcategory\tnber_category\tisolated_out\n";
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        const auto& info = catalog.at(graph.nodes[i]);
        out << graph.nodes[i] << '\t' << format_double(info.improvement_rate) << '\t' << info.nber_subcategory
            << '\t' << info.nber_category << '\t' << (graph.isolated_out[i] ? 1 : 0) << '\n';
    }
}

NodeTable read_nodes(const fs::path& path) {
    auto in = open_artifact(path);
    std::string line;
    std::getline(in, line);
    NodeTable table;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        const auto f = split_tabs(line);
        if (f.size() != 5) {
            throw InputError(artifact_error(path, lineno, "expected 5 columns"));
        }
        table.codes.push_back(f[0]);
        table.rates.push_back(parse_double(f[1]));
        table.subcategories.push_back(std::stoi(f[2]));
        table.isolated_out.push_back(f[4] == "1");
    }
    return table;
}

namespace {

template <typename Matrix, typename Format>
void write_sparse(const fs::path& path, const DomainGraph& graph, const Matrix& m, const char* value_name,
                  Format format) {
    auto out = open_output(path);
    out << "citing\tcited\t" << value_name << '\n';
    for (Eigen::Index row = 0; row < m.outerSize(); ++row) {
        for (typename Matrix::InnerIterator it(m, row); it; ++it) {
            out << graph.nodes[static_cast<std::size_t>(row)] << '\t' << graph.nodes[static_cast<std::size_t>(it.col())]
                << '\t' << format(it.value()) << '\n';
        }
    }
}

} // namespace

void write_counts(const fs::path& path, const DomainGraph& graph) {
    write_sparse(path, graph, graph.counts, "count", [](std::int64_t v) { return std::to_string(v); });
}

void write_weights(const fs::path& path, const DomainGraph& graph) {
    write_sparse(path, graph, graph.weights, "weight", [](double v) { return format_double(v); });
}

DomainGraph read_graph(const fs::path& counts_path, const std::vector<DomainCode>& nodes) {
    std::unordered_map<DomainCode, Eigen::Index> index;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        index.emplace(nodes[i], static_cast<Eigen::Index>(i));
    }
    auto in = open_artifact(counts_path);
    std::string line;
    std::getline(in, line);
    std::vector<Eigen::Triplet<std::int64_t>> triplets;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        const auto f = split_tabs(line);
        if (f.size() != 3 || !index.count(f[0]) || !index.count(f[1])) {
            throw InputError(artifact_error(counts_path, lineno, "malformed count entry"));
        }
        triplets.emplace_back(index.at(f[0]), index.at(f[1]), std::stoll(f[2]));
    }
    return graph_from_edges(nodes, triplets);
}

void write_vocabulary(const fs::path& path, const Vocabulary& vocabulary) {
    auto out = open_output(path);
    out << "token\tcount\n";
    for (std::size_t i = 0; i < vocabulary.size(); ++i) {
        out << vocabulary.token(static_cast<int>(i)) << '\t' << vocabulary.count(static_cast<int>(i)) << '\n';
    }
}

Vocabulary read_vocabulary(const fs::path& path, std::int64_t min_count, double subsample) {
    auto in = open_artifact(path);
    std::string line;
    std::getline(in, line);
    std::vector<std::pair<std::string, std::int64_t>> entries;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = split_tabs(line);
        if (f.size() != 2) {
            throw InputError("malformed vocabulary line in " + path.string());
        }
        entries.emplace_back(f[0], std::stoll(f[1]));
    }
    return Vocabulary::from_counts(std::move(entries), min_count, subsample);
}

nlohmann::ordered_json model_to_json(const SageModel& model) {
    nlohmann::ordered_json json;
    json["format"] = "techland-sage-model";
    json["version"] = 1;
    json["layers"] = nlohmann::ordered_json::array();
    for (const auto& w : model.weights) {
        nlohmann::ordered_json layer;
        layer["rows"] = w.rows();
        layer["cols"] = w.cols();
        std::vector<double> data;
        data.reserve(static_cast<std::size_t>(w.size()));
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                data.push_back(w(r, c));
            }
        }
        layer["data"] = std::move(data);
        json["layers"].push_back(std::move(layer));
    }
    return json;
}

SageModel model_from_json(const nlohmann::ordered_json& json) {
    if (json.value("format", "") != "techland-sage-model") {
        throw InputError("not a techland model checkpoint");
    }
    SageModel model;
    for (const auto& layer : json.at("layers")) {
        const auto rows = layer.at("rows").get<Eigen::Index>();
        const auto cols = layer.at("cols").get<Eigen::Index>();
        const auto data = layer.at("data").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
            throw InputError("model checkpoint: layer data does not match its shape");
        }
        Eigen::MatrixXd w(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) {
                w(r, c) = data[static_cast<std::size_t>(r * cols + c)];
            }
        }
        model.weights.push_back(std::move(w));
    }
    return model;
}

nlohmann::ordered_json surface_to_json(const SurfaceGrid& grid) {
    nlohmann::ordered_json json;
    json["nx"] = grid.nx;
    json["ny"] = grid.ny;
    json["bbox"] = {{"x_min", grid.bbox.x_min}, {"x_max", grid.bbox.x_max},
                    {"y_min", grid.bbox.y_min}, {"y_max", grid.bbox.y_max}};
    json["bandwidth"] = grid.bandwidth;
    auto values = nlohmann::ordered_json::array();
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            if (auto v = grid.at(ix, iy)) {
                values.push_back(*v);
            } else {
                values.push_back(nullptr);
            }
        }
    }
    json["values"] = std::move(values);
    return json;
}

nlohmann::ordered_json contours_to_json(const std::vector<ContourLevel>& contours) {
    auto json = nlohmann::ordered_json::array();
    for (const auto& level : contours) {
        nlohmann::ordered_json entry;
        entry["level"] = level.level;
        entry["polylines"] = nlohmann::ordered_json::array();
        for (const auto& line : level.polylines) {
            nlohmann::ordered_json poly;
            poly["closed"] = line.closed;
            poly["points"] = nlohmann::ordered_json::array();
            for (const auto& p : line.points) {
                poly["points"].push_back({p.x(), p.y()});
            }
            entry["polylines"].push_back(std::move(poly));
        }
        json.push_back(std::move(entry));
    }
    return json;
}

nlohmann::ordered_json peak_to_json(const PeakInfo& peak) {
    nlohmann::ordered_json json;
    json["m"] = peak.m;
    json["members"] = peak.members;
    json["centroid_2d"] = {peak.centroid_2d.x(), peak.centroid_2d.y()};
    json["centroid_z"] = std::vector<double>(peak.centroid_high.data(),
                                             peak.centroid_high.data() + peak.centroid_high.size());
    json["peak_rate"] = peak.peak_rate;
    json["mean_rate"] = peak.mean_rate;
    return json;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& json) {
    auto out = open_output(path);
    out << json.dump(1) << '\n';
}

nlohmann::ordered_json read_json(const fs::path& path) {
    auto in = open_artifact(path);
    try {
        return nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path.filename().string() + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    auto out = open_output(path);
    out << text;
}

} // namespace techland::artifacts
