#include "sseg/simulator.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace sseg {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

struct Hit {
    double t = std::numeric_limits<double>::infinity();
    const SceneObject* obj = nullptr;  // null = ground
    bool valid = false;
};

// Slab test against an axis-aligned box with base at z=0.
bool ray_box(const double o[3], const double d[3], const SceneObject& b,
             double& t_out) {
    double lo[3] = {b.cx - b.sx / 2, b.cy - b.sy / 2, 0.0};
    double hi[3] = {b.cx + b.sx / 2, b.cy + b.sy / 2, b.sz};
    double tmin = 0.0, tmax = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        if (std::fabs(d[a]) < 1e-15) {
            if (o[a] < lo[a] || o[a] > hi[a]) return false;
            continue;
        }
        double t1 = (lo[a] - o[a]) / d[a];
        double t2 = (hi[a] - o[a]) / d[a];
        if (t1 > t2) std::swap(t1, t2);
        tmin = std::max(tmin, t1);
        tmax = std::min(tmax, t2);
        if (tmin > tmax) return false;
    }
    if (tmin <= 1e-9) return false;
    t_out = tmin;
    return true;
}

// Vertical cylinder: lateral surface plus top/bottom caps.
bool ray_cylinder(const double o[3], const double d[3], const SceneObject& c,
                  double& t_out) {
    double best = std::numeric_limits<double>::infinity();
    double ox = o[0] - c.cx, oy = o[1] - c.cy;
    double a = d[0] * d[0] + d[1] * d[1];
    double r = c.sx;
    if (a > 1e-15) {
        double bq = 2.0 * (ox * d[0] + oy * d[1]);
        double cq = ox * ox + oy * oy - r * r;
        double disc = bq * bq - 4 * a * cq;
        if (disc >= 0.0) {
            double sq = std::sqrt(disc);
            for (double t : {(-bq - sq) / (2 * a), (-bq + sq) / (2 * a)}) {
                if (t <= 1e-9 || t >= best) continue;
                double z = o[2] + t * d[2];
                if (z >= 0.0 && z <= c.sz) best = t;
            }
        }
    }
    // caps
    if (std::fabs(d[2]) > 1e-15) {
        for (double zc : {0.0, c.sz}) {
            double t = (zc - o[2]) / d[2];
            if (t <= 1e-9 || t >= best) continue;
            double x = ox + t * d[0], y = oy + t * d[1];
            if (x * x + y * y <= r * r) best = t;
        }
    }
    if (!std::isfinite(best)) return false;
    t_out = best;
    return true;
}

}  // namespace

double class_intensity(std::uint8_t cls) {
    switch (cls) {
        case kCar: return 0.5;
        case kPedestrian: return 0.3;
        case kCyclist: return 0.4;
        default: return 0.1;
    }
}

RaycastResult raycast(const Scene& scene, const LidarConfig& cfg) {
    SSEG_CHECK(cfg.rays_v >= 1 && cfg.rays_h >= 1, "raycast: bad resolution");
    SSEG_CHECK(cfg.max_range > 0.0, "raycast: bad max range");
    RaycastResult res;
    const double o[3] = {0.0, 0.0, cfg.sensor_height};
    const double dtheta = (cfg.zenith_max - cfg.zenith_min) / cfg.rays_v;
    const double dphi = cfg.azimuth_fov / cfg.rays_h;
    const double cp = std::cos(cfg.pitch * kDegToRad);
    const double sp = std::sin(cfg.pitch * kDegToRad);

    struct RayHit {
        bool hit = false;
        double p[3];
        std::uint8_t cls = kBackground;
        std::uint16_t id = 0;
    };
    std::vector<RayHit> hits(static_cast<std::size_t>(cfg.rays_v) *
                             cfg.rays_h);

#pragma omp parallel for collapse(2) schedule(static)
    for (int r = 0; r < cfg.rays_v; ++r) {
        for (int c = 0; c < cfg.rays_h; ++c) {
            double theta =
                (cfg.zenith_max - (r + 0.5) * dtheta) * kDegToRad;
            double phi =
                (-cfg.azimuth_fov / 2.0 + (c + 0.5) * dphi) * kDegToRad;
            double d[3] = {std::cos(theta) * std::cos(phi),
                           std::cos(theta) * std::sin(phi), std::sin(theta)};
            // pitch about +y
            double dx = cp * d[0] + sp * d[2];
            double dz = -sp * d[0] + cp * d[2];
            d[0] = dx;
            d[2] = dz;

            Hit best;
            for (const auto& obj : scene.objects) {
                double t;
                bool ok = obj.shape == ShapeKind::Box
                              ? ray_box(o, d, obj, t)
                              : ray_cylinder(o, d, obj, t);
                if (ok && t < best.t) {
                    best.t = t;
                    best.obj = &obj;
                    best.valid = true;
                }
            }
            if (scene.ground && d[2] < 0.0) {
                double t = -o[2] / d[2];
                if (t > 1e-9 && t < best.t) {
                    best.t = t;
                    best.obj = nullptr;
                    best.valid = true;
                }
            }
            if (!best.valid || best.t > cfg.max_range) continue;

            RayHit& rh = hits[static_cast<std::size_t>(r) * cfg.rays_h + c];
            rh.hit = true;
            for (int a = 0; a < 3; ++a) rh.p[a] = o[a] + best.t * d[a];
            if (best.obj) {
                rh.cls = best.obj->cls;
                rh.id = best.obj->instance_id;
            }
        }
    }

    for (const auto& rh : hits) {
        if (!rh.hit) continue;
        Point p;
        // sensor-frame output
        p.x = static_cast<float>(rh.p[0]);
        p.y = static_cast<float>(rh.p[1]);
        p.z = static_cast<float>(rh.p[2] - cfg.sensor_height);
        p.intensity = static_cast<float>(class_intensity(rh.cls));
        res.cloud.points.push_back(p);
        res.cloud.labels.push_back(rh.cls);
        res.instance_ids.push_back(rh.id);
    }
    return res;
}

namespace {

struct Footprint {
    double x0, x1, y0, y1;
    bool overlaps(const Footprint& o) const {
        return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
    }
};

Footprint footprint(const SceneObject& obj) {
    double hx = obj.shape == ShapeKind::Box ? obj.sx / 2 : obj.sx;
    double hy = obj.shape == ShapeKind::Box ? obj.sy / 2 : obj.sx;
    return {obj.cx - hx, obj.cx + hx, obj.cy - hy, obj.cy + hy};
}

}  // namespace

Scene generate_scene(std::uint64_t seed, const SceneGenConfig& cfg) {
    Scene scene;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(cfg.min_dist, cfg.max_dist);
    std::uniform_real_distribution<double> azim(-40.0, 40.0);

    std::vector<Footprint> placed;
    std::uint16_t next_id = 1;
    auto place = [&](SceneObject proto) {
        for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
            double d = dist(rng);
            double a = azim(rng) * kDegToRad;
            proto.cx = d * std::cos(a);
            proto.cy = d * std::sin(a);
            Footprint fp = footprint(proto);
            // keep a gap so clusters stay separable
            Footprint padded = {fp.x0 - 0.5, fp.x1 + 0.5, fp.y0 - 0.5,
                                fp.y1 + 0.5};
            bool ok = true;
            for (const auto& other : placed)
                if (padded.overlaps(other)) {
                    ok = false;
                    break;
                }
            if (!ok) continue;
            proto.instance_id = next_id++;
            placed.push_back(fp);
            scene.objects.push_back(proto);
            return;
        }
        throw TensorError("generate_scene: could not place object");
    };

    for (int i = 0; i < cfg.cars; ++i) {
        SceneObject o;
        o.shape = ShapeKind::Box;
        o.sx = 4.5;
        o.sy = 1.8;
        o.sz = 1.5;
        o.cls = kCar;
        place(o);
    }
    for (int i = 0; i < cfg.pedestrians; ++i) {
        SceneObject o;
        o.shape = ShapeKind::Cylinder;
        o.sx = 0.3;  // radius
        o.sz = 1.7;
        o.cls = kPedestrian;
        place(o);
    }
    for (int i = 0; i < cfg.cyclists; ++i) {
        SceneObject o;
        o.shape = ShapeKind::Box;
        o.sx = 1.8;
        o.sy = 0.6;
        o.sz = 1.7;
        o.cls = kCyclist;
        place(o);
    }
    return scene;
}

}  // namespace sseg
