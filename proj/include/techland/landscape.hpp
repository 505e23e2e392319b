#ifndef TECHLAND_LANDSCAPE_HPP
#define TECHLAND_LANDSCAPE_HPP

#include "techland/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace techland {

struct BoundingBox {
    double x_min = 0.0;
    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;

    double diagonal() const { return std::hypot(x_max - x_min, y_max - y_min); }
};

struct SurfaceConfig {
    int nx = 200;
    int ny = 200;
    double bandwidth = 0.0;        // <= 0: 1/30 of the bounding-box diagonal
    double min_weight = 0.011109;  // exp(-4.5): no point within 3 bandwidths -> masked
};

/// Kernel-smoothed rate surface on a regular grid spanning the data bounding box.
/// Node (ix, iy) sits at x_min + ix * dx, y_min + iy * dy; storage is row-major in iy.
struct SurfaceGrid {
    int nx = 0;
    int ny = 0;
    BoundingBox bbox;
    double bandwidth = 0.0;
    Eigen::MatrixXd values;                                          // ny x nx
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask;        // true = beyond data support

    double x_at(int ix) const { return nx > 1 ? bbox.x_min + ix * (bbox.x_max - bbox.x_min) / (nx - 1) : bbox.x_min; }
    double y_at(int iy) const { return ny > 1 ? bbox.y_min + iy * (bbox.y_max - bbox.y_min) / (ny - 1) : bbox.y_min; }
    std::optional<double> at(int ix, int iy) const {
        if (mask(iy, ix)) {
            return std::nullopt;
        }
        return values(iy, ix);
    }
};

/// value = sum k(d_i) r_i / sum k(d_i) with a Gaussian kernel k.
SurfaceGrid fit_surface(const RowMatrixXd& coordinates, const Eigen::VectorXd& rates, const SurfaceConfig& config);

/// The M fastest domains and their centroids.
struct PeakInfo {
    int m = 0;
    std::vector<std::string> members;      // rate descending, ties by code
    std::vector<Eigen::Index> member_rows;
    Eigen::VectorXd centroid_high;         // in the embedding space
    Eigen::Vector2d centroid_2d = Eigen::Vector2d::Zero();
    double peak_rate = 0.0;                // fastest member's rate
    double mean_rate = 0.0;
};

PeakInfo find_peak(const RowMatrixXd& embeddings, const RowMatrixXd& coordinates, const Eigen::VectorXd& rates,
                   const std::vector<std::string>& codes, int m);

struct Polyline {
    std::vector<Eigen::Vector2d> points;
    bool closed = false; // closed loops repeat no point; the last joins the first
};

struct ContourLevel {
    double level = 0.0;
    std::vector<Polyline> polylines;
};

/// Marching-squares isolines of the grid at each level. Cells with a masked
/// corner are skipped, so lines end at the mask or the grid boundary.
std::vector<ContourLevel> export_contours(const SurfaceGrid& grid, const std::vector<double>& levels);

/// `count` evenly spaced levels strictly inside the unmasked value range.
std::vector<double> default_levels(const SurfaceGrid& grid, int count);

} // namespace techland

#endif // TECHLAND_LANDSCAPE_HPP
