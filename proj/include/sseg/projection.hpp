#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sseg/tensor.hpp"

namespace sseg {

struct Point {
    float x = 0, y = 0, z = 0;
    float intensity = 0;  // normalized to [0,1] at ingestion
};

struct PointCloud {
    std::vector<Point> points;
    std::vector<std::uint8_t> labels;  // empty, or one class id per point
    bool has_labels() const { return !labels.empty(); }
};

// Class ids used across the pipeline.
enum ClassId : std::uint8_t {
    kBackground = 0,
    kCar = 1,
    kPedestrian = 2,
    kCyclist = 3
};
constexpr int kNumClasses = 4;

struct GridConfig {
    int rows = 64;               // zenith bins
    int cols = 512;              // azimuth bins
    double azimuth_fov = 90.0;   // degrees, centered on +x
    double zenith_min = -24.8;   // degrees
    double zenith_max = 2.0;
    static constexpr int channels = 5;  // x, y, z, intensity, range

    double dtheta() const { return (zenith_max - zenith_min) / rows; }
    double dphi() const { return azimuth_fov / cols; }
    void validate() const;
};

struct SphericalGrid {
    GridConfig config;
    Tensor features;                  // [rows, cols, 5]
    std::vector<std::uint8_t> mask;   // rows*cols, 1 = occupied
    std::vector<std::int32_t> point_index;  // source index, -1 if empty

    bool occupied(int r, int c) const {
        return mask[static_cast<std::size_t>(r) * config.cols + c] != 0;
    }
};

struct LabelGrid {
    int rows = 0, cols = 0;
    std::vector<std::uint8_t> classes;  // rows*cols
    std::vector<std::uint8_t> mask;     // shared occupancy

    std::uint8_t cls(int r, int c) const {
        return classes[static_cast<std::size_t>(r) * cols + c];
    }
    bool occupied(int r, int c) const {
        return mask[static_cast<std::size_t>(r) * cols + c] != 0;
    }
};

struct NoiseModel {
    int rows = 0, cols = 0;
    std::vector<float> eps;  // rows*cols frequencies in [0,1]
    int n_frames = 0;
};

// Spherical projection. Points behind the sensor (x <= 0) and outside the
// configured FOV are discarded; bin collisions keep the nearer point.
SphericalGrid project(const PointCloud& cloud, const GridConfig& cfg);

// Carries per-point labels onto the grid via point_index.
LabelGrid project_labels(const PointCloud& cloud, const SphericalGrid& grid);

NoiseModel estimate_noise(const std::vector<std::vector<std::uint8_t>>& masks,
                          int rows, int cols);

SphericalGrid inject_noise(const SphericalGrid& grid, const NoiseModel& model,
                           std::uint64_t seed);

}  // namespace sseg
