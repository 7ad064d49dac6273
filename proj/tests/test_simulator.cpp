#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "sseg/simulator.hpp"

using namespace sseg;

TEST_CASE("per-class intensities are fixed constants") {
    CHECK(class_intensity(kCar) == doctest::Approx(0.5));
    CHECK(class_intensity(kPedestrian) == doctest::Approx(0.3));
    CHECK(class_intensity(kCyclist) == doctest::Approx(0.4));
    CHECK(class_intensity(kBackground) == doctest::Approx(0.1));
}

TEST_CASE("ground-only scene: analytic hit count and flat sensor-frame z") {
    Scene scene;  // ground plane only
    LidarConfig cfg;
    RaycastResult res = raycast(scene, cfg);

    // a row hits the ground within max_range iff the slant distance
    // h / sin(-theta) stays below it
    const double dtheta = (cfg.zenith_max - cfg.zenith_min) / cfg.rays_v;
    int expected_rows = 0;
    for (int r = 0; r < cfg.rays_v; ++r) {
        double theta = (cfg.zenith_max - (r + 0.5) * dtheta) * M_PI / 180.0;
        if (theta >= 0) continue;
        if (cfg.sensor_height / std::sin(-theta) <= cfg.max_range)
            ++expected_rows;
    }
    CHECK(static_cast<int>(res.cloud.points.size()) ==
          expected_rows * cfg.rays_h);

    for (std::size_t i = 0; i < res.cloud.points.size(); ++i) {
        CHECK(res.cloud.points[i].z ==
              doctest::Approx(-cfg.sensor_height).epsilon(1e-6));
        CHECK(res.cloud.labels[i] == kBackground);
        CHECK(res.instance_ids[i] == 0);
        CHECK(res.cloud.points[i].intensity == doctest::Approx(0.1f));
    }
}

TEST_CASE("box straight ahead: hits stay on the box surface") {
    Scene scene;
    SceneObject car;
    car.shape = ShapeKind::Box;
    car.cx = 10;
    car.cy = 0;
    car.sx = 4.5;
    car.sy = 1.8;
    car.sz = 1.5;
    car.cls = kCar;
    car.instance_id = 3;
    scene.objects.push_back(car);
    LidarConfig cfg;
    RaycastResult res = raycast(scene, cfg);

    int car_points = 0;
    float nearest = 1e9f;
    for (std::size_t i = 0; i < res.cloud.points.size(); ++i) {
        if (res.cloud.labels[i] != kCar) {
            CHECK(res.instance_ids[i] == 0);
            continue;
        }
        ++car_points;
        const Point& p = res.cloud.points[i];
        CHECK(res.instance_ids[i] == 3);
        CHECK(p.intensity == doctest::Approx(0.5f));
        CHECK(p.x >= 7.75f - 1e-4f);
        CHECK(p.x <= 12.25f + 1e-4f);
        CHECK(std::fabs(p.y) <= 0.9f + 1e-4f);
        double world_z = p.z + cfg.sensor_height;
        CHECK(world_z >= -1e-4);
        CHECK(world_z <= 1.5 + 1e-4);
        nearest = std::min(nearest, p.x);
    }
    CHECK(car_points > 50);
    // the closest car return is the front face
    CHECK(nearest == doctest::Approx(7.75).epsilon(1e-4));
}

TEST_CASE("a tall near box fully shadows a box behind it") {
    Scene scene;
    SceneObject wall;
    wall.shape = ShapeKind::Box;
    wall.cx = 10;
    wall.sx = 2;
    wall.sy = 4;
    wall.sz = 3;  // taller than the sensor
    wall.cls = kCar;
    wall.instance_id = 1;
    SceneObject hidden = wall;
    hidden.cx = 20;
    hidden.sy = 1;
    hidden.sz = 1.5;
    hidden.instance_id = 2;
    scene.objects = {wall, hidden};
    RaycastResult res = raycast(scene, LidarConfig{});

    bool saw_wall = false;
    for (std::size_t i = 0; i < res.instance_ids.size(); ++i) {
        CHECK(res.instance_ids[i] != 2);
        saw_wall = saw_wall || res.instance_ids[i] == 1;
    }
    CHECK(saw_wall);
}

TEST_CASE("cylinder hits stay within the radius and height") {
    Scene scene;
    SceneObject ped;
    ped.shape = ShapeKind::Cylinder;
    ped.cx = 8;
    ped.cy = 1;
    ped.sx = 0.3;  // radius
    ped.sz = 1.7;
    ped.cls = kPedestrian;
    ped.instance_id = 7;
    scene.objects.push_back(ped);
    LidarConfig cfg;
    RaycastResult res = raycast(scene, cfg);

    int n = 0;
    for (std::size_t i = 0; i < res.cloud.points.size(); ++i) {
        if (res.cloud.labels[i] != kPedestrian) continue;
        ++n;
        const Point& p = res.cloud.points[i];
        double lat = std::hypot(p.x - ped.cx, p.y - ped.cy);
        CHECK(lat <= ped.sx + 1e-4);
        double world_z = p.z + cfg.sensor_height;
        CHECK(world_z >= -1e-4);
        CHECK(world_z <= ped.sz + 1e-4);
        CHECK(res.instance_ids[i] == 7);
    }
    CHECK(n > 3);
}

TEST_CASE("simulated rays land back in their own projection bins") {
    Scene scene = generate_scene(99, SceneGenConfig{});
    LidarConfig lidar;
    RaycastResult res = raycast(scene, lidar);
    REQUIRE(!res.cloud.points.empty());

    GridConfig gcfg;  // same geometry as the lidar defaults
    SphericalGrid grid = project(res.cloud, gcfg);

    int occ = 0;
    std::int32_t prev = -1;
    bool in_order = true;
    for (std::size_t cell = 0; cell < grid.mask.size(); ++cell) {
        if (!grid.mask[cell]) continue;
        ++occ;
        in_order = in_order && grid.point_index[cell] == prev + 1;
        prev = grid.point_index[cell];
    }
    // one ray per bin: every point occupies a distinct bin, in ray order
    CHECK(occ == static_cast<int>(res.cloud.points.size()));
    CHECK(in_order);

    // labels survive the round trip
    LabelGrid lg = project_labels(res.cloud, grid);
    int car_cells = 0;
    for (std::size_t cell = 0; cell < grid.mask.size(); ++cell) {
        if (!grid.mask[cell]) continue;
        CHECK(lg.classes[cell] ==
              res.cloud.labels[grid.point_index[cell]]);
        if (lg.classes[cell] == kCar) ++car_cells;
    }
    CHECK(car_cells > 0);
}

TEST_CASE("scene generation is seeded and keeps footprints apart") {
    SceneGenConfig cfg;
    Scene a = generate_scene(5, cfg);
    Scene b = generate_scene(5, cfg);
    Scene c = generate_scene(6, cfg);
    REQUIRE(a.objects.size() == b.objects.size());
    bool same = true, differ = false;
    for (std::size_t i = 0; i < a.objects.size(); ++i) {
        same = same && a.objects[i].cx == b.objects[i].cx &&
               a.objects[i].cy == b.objects[i].cy;
        if (i < c.objects.size())
            differ = differ || a.objects[i].cx != c.objects[i].cx;
    }
    CHECK(same);
    CHECK(differ);

    int cars = 0, peds = 0, cycs = 0;
    std::vector<std::uint16_t> ids;
    for (const auto& o : a.objects) {
        if (o.cls == kCar) ++cars;
        if (o.cls == kPedestrian) ++peds;
        if (o.cls == kCyclist) ++cycs;
        ids.push_back(o.instance_id);
        double d = std::hypot(o.cx, o.cy);
        CHECK(d >= cfg.min_dist - 3.0);  // center jitter stays near the band
        CHECK(d <= cfg.max_dist + 3.0);
    }
    CHECK(cars == cfg.cars);
    CHECK(peds == cfg.pedestrians);
    CHECK(cycs == cfg.cyclists);
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = 0; i < ids.size(); ++i)
        CHECK(ids[i] == static_cast<std::uint16_t>(i + 1));

    // pairwise footprint separation (conservative circle bound)
    for (std::size_t i = 0; i < a.objects.size(); ++i)
        for (std::size_t j = i + 1; j < a.objects.size(); ++j) {
            const auto &p = a.objects[i], &q = a.objects[j];
            double gap = std::hypot(p.cx - q.cx, p.cy - q.cy);
            CHECK(gap > 0.5);
        }
}

TEST_CASE("impossible placements raise an error") {
    SceneGenConfig cfg;
    cfg.cars = 50;
    cfg.min_dist = 6.0;
    cfg.max_dist = 7.0;
    cfg.max_retries = 20;
    CHECK_THROWS_AS(generate_scene(1, cfg), TensorError);
}
