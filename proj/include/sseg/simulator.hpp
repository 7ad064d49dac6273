#pragma once

#include <cstdint>
#include <vector>

#include "sseg/projection.hpp"

namespace sseg {

enum class ShapeKind { Box, Cylinder };

// Axis-aligned box or vertical cylinder standing on the ground plane.
struct SceneObject {
    ShapeKind shape = ShapeKind::Box;
    // box: center (cx, cy) of footprint, extents (sx, sy, sz), base at z=0
    // cylinder: axis through (cx, cy), radius sx, height sz
    double cx = 0, cy = 0;
    double sx = 0, sy = 0, sz = 0;
    std::uint8_t cls = kCar;
    std::uint16_t instance_id = 0;
};

struct Scene {
    std::vector<SceneObject> objects;
    bool ground = true;  // plane z = 0, background class
};

struct LidarConfig {
    int rays_v = 64;            // H
    int rays_h = 512;           // W
    double zenith_min = -24.8;  // degrees
    double zenith_max = 2.0;
    double azimuth_fov = 90.0;  // centered on +x
    double pitch = 0.0;         // degrees, rotation about +y
    double sensor_height = 1.73;  // meters above ground
    double max_range = 80.0;
};

struct RaycastResult {
    PointCloud cloud;  // sensor-frame coordinates, labels filled
    std::vector<std::uint16_t> instance_ids;  // per point, 0 = ground
};

// Casts one ray per (zenith, azimuth) bin center; returns the nearest hit
// per ray. Misses produce no point.
RaycastResult raycast(const Scene& scene, const LidarConfig& cfg);

struct SceneGenConfig {
    int cars = 3;
    int pedestrians = 2;
    int cyclists = 1;
    double min_dist = 6.0;   // placement range along +x
    double max_dist = 35.0;
    int max_retries = 100;   // per object, before giving up
};

// Seeded random placement in the forward 90-degree wedge with
// non-overlapping footprints.
Scene generate_scene(std::uint64_t seed, const SceneGenConfig& cfg);

// Per-class constant intensities (simulated clouds have no real sensor
// intensity).
double class_intensity(std::uint8_t cls);

}  // namespace sseg
