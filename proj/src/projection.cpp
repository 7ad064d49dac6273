#include "sseg/projection.hpp"

#include <cmath>
#include <random>

namespace sseg {

namespace {
constexpr double kRadToDeg = 180.0 / M_PI;
}

void GridConfig::validate() const {
    SSEG_CHECK(rows >= 1 && cols >= 1, "grid: rows/cols must be >= 1");
    SSEG_CHECK(zenith_min < zenith_max, "grid: zenith_min >= zenith_max");
    SSEG_CHECK(azimuth_fov > 0.0 && azimuth_fov <= 360.0,
               "grid: azimuth_fov out of (0, 360]");
}

SphericalGrid project(const PointCloud& cloud, const GridConfig& cfg) {
    cfg.validate();
    SphericalGrid grid;
    grid.config = cfg;
    grid.features = Tensor({cfg.rows, cfg.cols, GridConfig::channels});
    grid.mask.assign(static_cast<std::size_t>(cfg.rows) * cfg.cols, 0);
    grid.point_index.assign(static_cast<std::size_t>(cfg.rows) * cfg.cols, -1);

    const double dtheta = cfg.dtheta();
    const double dphi = cfg.dphi();
    const double half_fov = cfg.azimuth_fov / 2.0;

    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const Point& p = cloud.points[i];
        SSEG_CHECK(std::isfinite(p.x) && std::isfinite(p.y) &&
                       std::isfinite(p.z),
                   "project: non-finite point coordinate");
        // Forward hemisphere only; the azimuth formula is ambiguous behind
        // the sensor.
        if (p.x <= 0.0f) continue;
        double r = std::sqrt(double(p.x) * p.x + double(p.y) * p.y +
                             double(p.z) * p.z);
        if (r == 0.0) continue;
        double theta = std::asin(p.z / r) * kRadToDeg;
        double phi =
            std::asin(p.y / std::sqrt(double(p.x) * p.x + double(p.y) * p.y)) *
            kRadToDeg;

        int row = static_cast<int>(std::floor((cfg.zenith_max - theta) / dtheta));
        int col = static_cast<int>(std::floor((phi + half_fov) / dphi));
        if (row < 0 || row >= cfg.rows || col < 0 || col >= cfg.cols) continue;

        std::size_t cell = static_cast<std::size_t>(row) * cfg.cols + col;
        if (grid.mask[cell]) {
            float prev_r = grid.features.at(row, col, 4);
            if (static_cast<float>(r) >= prev_r) continue;
        }
        grid.mask[cell] = 1;
        grid.point_index[cell] = static_cast<std::int32_t>(i);
        grid.features.at(row, col, 0) = p.x;
        grid.features.at(row, col, 1) = p.y;
        grid.features.at(row, col, 2) = p.z;
        grid.features.at(row, col, 3) = p.intensity;
        grid.features.at(row, col, 4) = static_cast<float>(r);
    }
    return grid;
}

LabelGrid project_labels(const PointCloud& cloud, const SphericalGrid& grid) {
    SSEG_CHECK(cloud.has_labels(), "project_labels: cloud has no labels");
    SSEG_CHECK(cloud.labels.size() == cloud.points.size(),
               "project_labels: label/point count mismatch");
    LabelGrid lg;
    lg.rows = grid.config.rows;
    lg.cols = grid.config.cols;
    lg.classes.assign(grid.mask.size(), kBackground);
    lg.mask = grid.mask;
    for (std::size_t cell = 0; cell < grid.mask.size(); ++cell) {
        if (!grid.mask[cell]) continue;
        std::int32_t idx = grid.point_index[cell];
        SSEG_CHECK(idx >= 0 &&
                       static_cast<std::size_t>(idx) < cloud.points.size(),
                   "project_labels: grid does not index this cloud");
        lg.classes[cell] = cloud.labels[idx];
    }
    return lg;
}

NoiseModel estimate_noise(const std::vector<std::vector<std::uint8_t>>& masks,
                          int rows, int cols) {
    SSEG_CHECK(!masks.empty(), "estimate_noise: no masks");
    const std::size_t n_cells = static_cast<std::size_t>(rows) * cols;
    for (const auto& m : masks)
        SSEG_CHECK(m.size() == n_cells, "estimate_noise: mask shape mismatch");

    NoiseModel model;
    model.rows = rows;
    model.cols = cols;
    model.n_frames = static_cast<int>(masks.size());
    model.eps.assign(n_cells, 0.0f);
    for (const auto& m : masks)
        for (std::size_t i = 0; i < n_cells; ++i)
            if (!m[i]) model.eps[i] += 1.0f;
    for (auto& e : model.eps) e /= static_cast<float>(masks.size());
    return model;
}

SphericalGrid inject_noise(const SphericalGrid& grid, const NoiseModel& model,
                           std::uint64_t seed) {
    SSEG_CHECK(model.rows == grid.config.rows &&
                   model.cols == grid.config.cols,
               "inject_noise: model/grid shape mismatch");
    SphericalGrid out = grid;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const int C = GridConfig::channels;
    for (int r = 0; r < grid.config.rows; ++r) {
        for (int c = 0; c < grid.config.cols; ++c) {
            std::size_t cell =
                static_cast<std::size_t>(r) * grid.config.cols + c;
            double u = uni(rng);  // drawn for every cell, occupied or not
            if (!out.mask[cell]) continue;
            if (u < model.eps[cell]) {
                out.mask[cell] = 0;
                out.point_index[cell] = -1;
                for (int ch = 0; ch < C; ++ch)
                    out.features.at(r, c, ch) = 0.0f;
            }
        }
    }
    return out;
}

}  // namespace sseg
