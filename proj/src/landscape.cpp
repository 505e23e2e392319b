#include "techland/landscape.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <unordered_map>

namespace techland {

SurfaceGrid fit_surface(const RowMatrixXd& coordinates, const Eigen::VectorXd& rates, const SurfaceConfig& config) {
    const Eigen::Index n = coordinates.rows();
    if (coordinates.cols() != 2 || rates.size() != n) {
        throw std::invalid_argument("fit_surface: expected n x 2 coordinates and n rates");
    }
    if (n < 3) {
        throw InputError("fit_surface: need at least 3 points");
    }
    if (config.nx < 2 || config.ny < 2) {
        throw InputError("fit_surface: grid must be at least 2 x 2");
    }
    const Eigen::RowVector2d mean = coordinates.colwise().mean();
    const Eigen::Matrix2d scatter = (coordinates.rowwise() - mean).transpose() * (coordinates.rowwise() - mean);
    const Eigen::Vector2d eig = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(scatter).eigenvalues();
    if (!(eig(1) > 0.0) || eig(0) <= 1e-12 * eig(1)) {
        throw InputError("fit_surface: all points are collinear");
    }

    SurfaceGrid grid;
    grid.nx = config.nx;
    grid.ny = config.ny;
    grid.bbox = {coordinates.col(0).minCoeff(), coordinates.col(0).maxCoeff(), coordinates.col(1).minCoeff(),
                 coordinates.col(1).maxCoeff()};
    grid.bandwidth = config.bandwidth > 0.0 ? config.bandwidth : grid.bbox.diagonal() / 30.0;
    grid.values = Eigen::MatrixXd::Zero(grid.ny, grid.nx);
    grid.mask.setConstant(grid.ny, grid.nx, false);

    const double r_min = rates.minCoeff();
    const double r_max = rates.maxCoeff();
    const double inv_two_h2 = 1.0 / (2.0 * grid.bandwidth * grid.bandwidth);

#pragma omp parallel for schedule(static)
    for (int iy = 0; iy < grid.ny; ++iy) {
        const double cy = grid.y_at(iy);
        for (int ix = 0; ix < grid.nx; ++ix) {
            const double cx = grid.x_at(ix);
            double weight = 0.0;
            double weighted = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double dx = coordinates(i, 0) - cx;
                const double dy = coordinates(i, 1) - cy;
                const double k = std::exp(-(dx * dx + dy * dy) * inv_two_h2);
                weight += k;
                weighted += k * rates(i);
            }
            if (weight < config.min_weight) {
                grid.mask(iy, ix) = true;
                continue;
            }
            grid.values(iy, ix) = std::clamp(weighted / weight, r_min, r_max);
        }
    }
    return grid;
}

PeakInfo find_peak(const RowMatrixXd& embeddings, const RowMatrixXd& coordinates, const Eigen::VectorXd& rates,
                   const std::vector<std::string>& codes, int m) {
    const Eigen::Index n = rates.size();
    if (embeddings.rows() != n || coordinates.rows() != n || static_cast<Eigen::Index>(codes.size()) != n) {
        throw std::invalid_argument("find_peak: inputs disagree on domain count");
    }
    if (m < 1 || m > n) {
        throw InputError("find_peak: M must be in [1, number of domains]");
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index(0));
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (rates(a) != rates(b)) {
            return rates(a) > rates(b);
        }
        return codes[static_cast<std::size_t>(a)] < codes[static_cast<std::size_t>(b)];
    });

    PeakInfo peak;
    peak.m = m;
    peak.centroid_high = Eigen::VectorXd::Zero(embeddings.cols());
    for (int i = 0; i < m; ++i) {
        const Eigen::Index row = order[static_cast<std::size_t>(i)];
        peak.members.push_back(codes[static_cast<std::size_t>(row)]);
        peak.member_rows.push_back(row);
        peak.centroid_high += embeddings.row(row).transpose();
        peak.centroid_2d += coordinates.row(row).transpose();
        peak.mean_rate += rates(row);
    }
    peak.centroid_high /= m;
    peak.centroid_2d /= m;
    peak.mean_rate /= m;
    peak.peak_rate = rates(order.front());
    return peak;
}

namespace {

enum Edge { kBottom = 0, kRight = 1, kTop = 2, kLeft = 3 };

// Edges isolating each corner (0 = bottom-left, counter-clockwise).
constexpr std::array<std::array<Edge, 2>, 4> kCornerCut{{
    {kLeft, kBottom},
    {kBottom, kRight},
    {kRight, kTop},
    {kTop, kLeft},
}};

} // namespace

std::vector<ContourLevel> export_contours(const SurfaceGrid& grid, const std::vector<double>& levels) {
    std::vector<ContourLevel> result;
    double v_min = std::numeric_limits<double>::infinity();
    double v_max = -std::numeric_limits<double>::infinity();
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            if (!grid.mask(iy, ix)) {
                v_min = std::min(v_min, grid.values(iy, ix));
                v_max = std::max(v_max, grid.values(iy, ix));
            }
        }
    }
    const auto nx = static_cast<std::int64_t>(grid.nx);

    for (const double level : levels) {
        ContourLevel contour{level, {}};
        if (!(level >= v_min && level <= v_max)) {
            result.push_back(std::move(contour));
            continue;
        }
        // Edge point key: 2 * node + (0 horizontal edge to the right, 1 vertical edge upwards).
        std::unordered_map<std::int64_t, Eigen::Vector2d> points;
        std::unordered_map<std::int64_t, std::vector<std::size_t>> incident;
        std::vector<std::array<std::int64_t, 2>> segments;
        std::vector<std::int64_t> key_order;

        auto edge_point = [&](int ix, int iy, Edge edge) {
            int ax = ix, ay = iy, bx = ix, by = iy;
            std::int64_t key = 0;
            switch (edge) {
            case kBottom: bx = ix + 1; key = 2 * (iy * nx + ix); break;
            case kTop: ay = by = iy + 1; bx = ix + 1; key = 2 * ((iy + 1) * nx + ix); break;
            case kLeft: by = iy + 1; key = 2 * (iy * nx + ix) + 1; break;
            case kRight: ax = bx = ix + 1; by = iy + 1; key = 2 * (iy * nx + ix + 1) + 1; break;
            }
            if (!points.count(key)) {
                const double va = grid.values(ay, ax);
                const double vb = grid.values(by, bx);
                const double t = (level - va) / (vb - va);
                const Eigen::Vector2d pa(grid.x_at(ax), grid.y_at(ay));
                const Eigen::Vector2d pb(grid.x_at(bx), grid.y_at(by));
                points.emplace(key, pa + t * (pb - pa));
                key_order.push_back(key);
            }
            return key;
        };
        auto add_segment = [&](int ix, int iy, Edge e1, Edge e2) {
            const std::int64_t k1 = edge_point(ix, iy, e1);
            const std::int64_t k2 = edge_point(ix, iy, e2);
            incident[k1].push_back(segments.size());
            incident[k2].push_back(segments.size());
            segments.push_back({k1, k2});
        };

        for (int iy = 0; iy + 1 < grid.ny; ++iy) {
            for (int ix = 0; ix + 1 < grid.nx; ++ix) {
                const std::array<std::pair<int, int>, 4> corners{{{ix, iy}, {ix + 1, iy}, {ix + 1, iy + 1}, {ix, iy + 1}}};
                std::array<bool, 4> above{};
                bool masked = false;
                int count_above = 0;
                double center = 0.0;
                for (int c = 0; c < 4; ++c) {
                    const auto [cx, cy] = corners[static_cast<std::size_t>(c)];
                    masked = masked || grid.mask(cy, cx);
                    above[static_cast<std::size_t>(c)] = grid.values(cy, cx) > level;
                    count_above += above[static_cast<std::size_t>(c)] ? 1 : 0;
                    center += grid.values(cy, cx) / 4.0;
                }
                if (masked || count_above == 0 || count_above == 4) {
                    continue;
                }
                const bool saddle = above[0] == above[2] && above[1] == above[3] && above[0] != above[1];
                if (saddle) {
                    // Isolate the corners on the opposite side of the cell center.
                    const bool center_above = center > level;
                    for (int c = 0; c < 4; ++c) {
                        if (above[static_cast<std::size_t>(c)] != center_above) {
                            const auto& cut = kCornerCut[static_cast<std::size_t>(c)];
                            add_segment(ix, iy, cut[0], cut[1]);
                        }
                    }
                    continue;
                }
                std::array<Edge, 2> crossed{};
                int found = 0;
                for (int e = 0; e < 4; ++e) {
                    // Edge e joins corner e and corner e + 1.
                    if (above[static_cast<std::size_t>(e)] != above[static_cast<std::size_t>((e + 1) % 4)]) {
                        crossed[static_cast<std::size_t>(found++)] = static_cast<Edge>(e);
                    }
                }
                add_segment(ix, iy, crossed[0], crossed[1]);
            }
        }

        std::vector<bool> used(segments.size(), false);
        auto walk = [&](std::int64_t start, std::size_t first_segment) {
            Polyline line;
            line.points.push_back(points.at(start));
            std::int64_t key = start;
            std::size_t seg = first_segment;
            while (true) {
                used[seg] = true;
                const auto& s = segments[seg];
                key = s[0] == key ? s[1] : s[0];
                if (key == start) {
                    line.closed = true;
                    break;
                }
                line.points.push_back(points.at(key));
                std::optional<std::size_t> next;
                for (std::size_t cand : incident.at(key)) {
                    if (!used[cand]) {
                        next = cand;
                        break;
                    }
                }
                if (!next) {
                    break;
                }
                seg = *next;
            }
            return line;
        };
        for (std::int64_t key : key_order) {
            const auto& segs = incident.at(key);
            if (segs.size() == 1 && !used[segs.front()]) {
                contour.polylines.push_back(walk(key, segs.front()));
            }
        }
        for (std::size_t s = 0; s < segments.size(); ++s) {
            if (!used[s]) {
                contour.polylines.push_back(walk(segments[s][0], s));
            }
        }
        result.push_back(std::move(contour));
    }
    return result;
}

std::vector<double> default_levels(const SurfaceGrid& grid, int count) {
    double v_min = std::numeric_limits<double>::infinity();
    double v_max = -std::numeric_limits<double>::infinity();
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            if (!grid.mask(iy, ix)) {
                v_min = std::min(v_min, grid.values(iy, ix));
                v_max = std::max(v_max, grid.values(iy, ix));
            }
        }
    }
    std::vector<double> levels;
    if (!(v_max > v_min) || count < 1) {
        return levels;
    }
    for (int i = 1; i <= count; ++i) {
        levels.push_back(v_min + (v_max - v_min) * i / (count + 1));
    }
    return levels;
}

} // namespace techland
