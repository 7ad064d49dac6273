#include "sseg/instance.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

namespace sseg {

namespace {

// Uniform grid over 3D space with cell size eps; neighbor queries touch
// the 27 surrounding cells.
struct UniformGrid {
    double eps;
    std::unordered_map<std::int64_t, std::vector<int>> cells;

    static std::int64_t key(int ix, int iy, int iz) {
        // 21 bits per axis, offset to keep coordinates positive
        auto enc = [](int v) {
            return static_cast<std::int64_t>(v + (1 << 20)) & 0x1FFFFF;
        };
        return (enc(ix) << 42) | (enc(iy) << 21) | enc(iz);
    }

    UniformGrid(const std::vector<Vec3>& pts, double e) : eps(e) {
        for (int i = 0; i < static_cast<int>(pts.size()); ++i)
            cells[key(cell(pts[i].x), cell(pts[i].y), cell(pts[i].z))]
                .push_back(i);
    }

    int cell(double v) const { return static_cast<int>(std::floor(v / eps)); }

    // neighbors within eps, in ascending index order
    std::vector<int> query(const std::vector<Vec3>& pts, int i) const {
        std::vector<int> out;
        const Vec3& p = pts[i];
        int cx = cell(p.x), cy = cell(p.y), cz = cell(p.z);
        double e2 = eps * eps;
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -1; dz <= 1; ++dz) {
                    auto it = cells.find(key(cx + dx, cy + dy, cz + dz));
                    if (it == cells.end()) continue;
                    for (int j : it->second) {
                        double ddx = pts[j].x - p.x;
                        double ddy = pts[j].y - p.y;
                        double ddz = pts[j].z - p.z;
                        if (ddx * ddx + ddy * ddy + ddz * ddz <= e2)
                            out.push_back(j);
                    }
                }
        std::sort(out.begin(), out.end());
        return out;
    }
};

}  // namespace

std::vector<int> dbscan(const std::vector<Vec3>& points, double eps,
                        int min_pts) {
    SSEG_CHECK(eps > 0.0, "dbscan: eps must be positive");
    SSEG_CHECK(min_pts >= 1, "dbscan: min_pts must be >= 1");
    const int n = static_cast<int>(points.size());
    constexpr int kUndef = -2;
    std::vector<int> label(n, kUndef);
    if (n == 0) return label;

    UniformGrid index(points, eps);
    int next_cluster = 0;
    for (int i = 0; i < n; ++i) {
        if (label[i] != kUndef) continue;
        std::vector<int> nb = index.query(points, i);
        if (static_cast<int>(nb.size()) < min_pts) {
            label[i] = kNoise;
            continue;
        }
        int cid = next_cluster++;
        label[i] = cid;
        std::deque<int> frontier(nb.begin(), nb.end());
        while (!frontier.empty()) {
            int j = frontier.front();
            frontier.pop_front();
            if (label[j] == kNoise) label[j] = cid;  // border point
            if (label[j] != kUndef) continue;
            label[j] = cid;
            std::vector<int> nb2 = index.query(points, j);
            if (static_cast<int>(nb2.size()) >= min_pts)
                frontier.insert(frontier.end(), nb2.begin(), nb2.end());
        }
    }
    return label;
}

InstanceSet extract_instances(const LabelGrid& labels,
                              const SphericalGrid& grid,
                              const ClusterConfig& cfg) {
    SSEG_CHECK(labels.rows == grid.config.rows &&
                   labels.cols == grid.config.cols,
               "extract_instances: label/grid shape mismatch");
    InstanceSet out;
    for (int c = 1; c < kNumClasses; ++c) {
        std::vector<Vec3> pts;
        std::vector<int> cell_of;  // flat cell index per point
        for (int r = 0; r < labels.rows; ++r)
            for (int col = 0; col < labels.cols; ++col) {
                int flat = r * labels.cols + col;
                if (!labels.mask[flat] || labels.classes[flat] != c) continue;
                pts.push_back({grid.features.at(r, col, 0),
                               grid.features.at(r, col, 1),
                               grid.features.at(r, col, 2)});
                cell_of.push_back(flat);
            }
        std::vector<int> cid =
            dbscan(pts, cfg.per_class[c].eps, cfg.per_class[c].min_pts);
        int n_clusters = 0;
        for (int id : cid) n_clusters = std::max(n_clusters, id + 1);
        std::vector<Instance> inst(n_clusters);
        for (std::size_t i = 0; i < cid.size(); ++i) {
            if (cid[i] == kNoise)
                out.noise[c].push_back(cell_of[i]);
            else
                inst[cid[i]].cells.push_back(cell_of[i]);
        }
        for (auto& in : inst) std::sort(in.cells.begin(), in.cells.end());
        std::sort(inst.begin(), inst.end(),
                  [](const Instance& a, const Instance& b) {
                      if (a.cells.size() != b.cells.size())
                          return a.cells.size() > b.cells.size();
                      return a.cells.front() < b.cells.front();
                  });
        out.instances[c] = std::move(inst);
    }
    return out;
}

}  // namespace sseg
