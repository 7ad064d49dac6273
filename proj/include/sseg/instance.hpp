#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sseg/projection.hpp"

namespace sseg {

struct Vec3 {
    double x = 0, y = 0, z = 0;
};

constexpr int kNoise = -1;

// Standard density-based clustering, Euclidean metric, uniform-grid
// neighbor index. Seed points are visited in index order; border points
// attach to the first core cluster that reaches them. Returns a cluster
// id per point (kNoise for noise).
std::vector<int> dbscan(const std::vector<Vec3>& points, double eps,
                        int min_pts);

struct ClassClusterParams {
    double eps = 0.5;
    int min_pts = 5;
};

struct ClusterConfig {
    // indexed by class id; background unused
    std::array<ClassClusterParams, kNumClasses> per_class{
        ClassClusterParams{0.5, 5},  // background (never clustered)
        ClassClusterParams{1.0, 5},  // car
        ClassClusterParams{0.5, 5},  // pedestrian
        ClassClusterParams{0.5, 5},  // cyclist
    };
};

// One instance: a set of flat cell indices (row*cols + col) into the grid.
struct Instance {
    std::vector<int> cells;  // sorted ascending
};

struct InstanceSet {
    // per class id: instances sorted by size desc, then smallest index
    std::array<std::vector<Instance>, kNumClasses> instances;
    std::array<std::vector<int>, kNumClasses> noise;  // unclustered cells
};

// Clusters the occupied cells of each non-background class in 3D
// cartesian space.
InstanceSet extract_instances(const LabelGrid& labels,
                              const SphericalGrid& grid,
                              const ClusterConfig& cfg);

}  // namespace sseg
