#include "sseg/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace sseg {

namespace {

enum class KeyType { Int, Double, Enum };

struct KeySpec {
    KeyType type;
    double min = -std::numeric_limits<double>::infinity();
    double max = std::numeric_limits<double>::infinity();
    std::vector<std::string> choices;  // for Enum
    std::string def;
};

const std::map<std::string, KeySpec>& registry() {
    static const std::map<std::string, KeySpec> reg = {
        {"grid.rows", {KeyType::Int, 1, 4096, {}, "64"}},
        {"grid.cols", {KeyType::Int, 1, 8192, {}, "512"}},
        {"grid.azimuth_fov", {KeyType::Double, 1e-6, 360, {}, "90"}},
        {"grid.zenith_min", {KeyType::Double, -90, 90, {}, "-24.8"}},
        {"grid.zenith_max", {KeyType::Double, -90, 90, {}, "2.0"}},
        {"net.profile",
         {KeyType::Enum, 0, 0, {"toy", "paper-like"}, "paper-like"}},
        {"crf.w1", {KeyType::Double, 0, 1e6, {}, "1.0"}},
        {"crf.w2", {KeyType::Double, 0, 1e6, {}, "0.3"}},
        {"crf.sigma_alpha", {KeyType::Double, 1e-9, 1e6, {}, "3.0"}},
        {"crf.sigma_beta", {KeyType::Double, 1e-9, 1e6, {}, "0.5"}},
        {"crf.sigma_gamma", {KeyType::Double, 1e-9, 1e6, {}, "1.5"}},
        {"crf.iterations", {KeyType::Int, 1, 1000, {}, "3"}},
        {"cluster.car.eps", {KeyType::Double, 1e-9, 1e6, {}, "1.0"}},
        {"cluster.car.min_pts", {KeyType::Int, 1, 100000, {}, "5"}},
        {"cluster.pedestrian.eps", {KeyType::Double, 1e-9, 1e6, {}, "0.5"}},
        {"cluster.pedestrian.min_pts", {KeyType::Int, 1, 100000, {}, "5"}},
        {"cluster.cyclist.eps", {KeyType::Double, 1e-9, 1e6, {}, "0.5"}},
        {"cluster.cyclist.min_pts", {KeyType::Int, 1, 100000, {}, "5"}},
        {"train.epochs", {KeyType::Int, 1, 1000000, {}, "100"}},
        {"train.lr", {KeyType::Double, 0, 1e6, {}, "0.05"}},
        {"sim.cars", {KeyType::Int, 0, 1000, {}, "3"}},
        {"sim.pedestrians", {KeyType::Int, 0, 1000, {}, "2"}},
        {"sim.cyclists", {KeyType::Int, 0, 1000, {}, "1"}},
        {"sim.min_dist", {KeyType::Double, 0.1, 1000, {}, "6.0"}},
        {"sim.max_dist", {KeyType::Double, 0.1, 1000, {}, "35.0"}},
        {"sim.max_range", {KeyType::Double, 0.1, 10000, {}, "80.0"}},
        {"sim.sensor_height", {KeyType::Double, 0, 100, {}, "1.73"}},
        {"sim.pitch", {KeyType::Double, -90, 90, {}, "0"}},
    };
    return reg;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

Config::Config() = default;

void Config::set(const std::string& key, const std::string& value) {
    auto it = registry().find(key);
    if (it == registry().end())
        throw ConfigError("unknown config key: " + key);
    const KeySpec& spec = it->second;
    switch (spec.type) {
        case KeyType::Int: {
            std::size_t pos = 0;
            long long v;
            try {
                v = std::stoll(value, &pos);
            } catch (const std::exception&) {
                throw ConfigError("key " + key + ": not an integer: " + value);
            }
            if (pos != value.size())
                throw ConfigError("key " + key + ": not an integer: " + value);
            if (v < spec.min || v > spec.max)
                throw ConfigError("key " + key + ": out of range: " + value);
            break;
        }
        case KeyType::Double: {
            std::size_t pos = 0;
            double v;
            try {
                v = std::stod(value, &pos);
            } catch (const std::exception&) {
                throw ConfigError("key " + key + ": not a number: " + value);
            }
            if (pos != value.size() || !std::isfinite(v))
                throw ConfigError("key " + key + ": not a number: " + value);
            if (v < spec.min || v > spec.max)
                throw ConfigError("key " + key + ": out of range: " + value);
            break;
        }
        case KeyType::Enum: {
            bool ok = false;
            for (const auto& c : spec.choices) ok = ok || c == value;
            if (!ok)
                throw ConfigError("key " + key + ": invalid value: " + value);
            break;
        }
    }
    values_[key] = value;
}

void Config::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected key=value");
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

std::string Config::get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it != values_.end()) return it->second;
    auto reg = registry().find(key);
    if (reg == registry().end())
        throw ConfigError("unknown config key: " + key);
    return reg->second.def;
}

long long Config::get_int(const std::string& key) const {
    return std::stoll(get_string(key));
}

double Config::get_double(const std::string& key) const {
    return std::stod(get_string(key));
}

GridConfig Config::grid() const {
    GridConfig g;
    g.rows = static_cast<int>(get_int("grid.rows"));
    g.cols = static_cast<int>(get_int("grid.cols"));
    g.azimuth_fov = get_double("grid.azimuth_fov");
    g.zenith_min = get_double("grid.zenith_min");
    g.zenith_max = get_double("grid.zenith_max");
    g.validate();
    return g;
}

Profile Config::profile() const {
    return get_string("net.profile") == "toy" ? Profile::Toy
                                              : Profile::PaperLike;
}

CrfParams Config::crf() const {
    CrfParams p = CrfParams::make_default(kNumClasses);
    p.w1 = static_cast<float>(get_double("crf.w1"));
    p.w2 = static_cast<float>(get_double("crf.w2"));
    p.sigma_alpha = static_cast<float>(get_double("crf.sigma_alpha"));
    p.sigma_beta = static_cast<float>(get_double("crf.sigma_beta"));
    p.sigma_gamma = static_cast<float>(get_double("crf.sigma_gamma"));
    p.iterations = static_cast<int>(get_int("crf.iterations"));
    return p;
}

ClusterConfig Config::cluster() const {
    ClusterConfig c;
    c.per_class[kCar] = {get_double("cluster.car.eps"),
                         static_cast<int>(get_int("cluster.car.min_pts"))};
    c.per_class[kPedestrian] = {
        get_double("cluster.pedestrian.eps"),
        static_cast<int>(get_int("cluster.pedestrian.min_pts"))};
    c.per_class[kCyclist] = {
        get_double("cluster.cyclist.eps"),
        static_cast<int>(get_int("cluster.cyclist.min_pts"))};
    return c;
}

LidarConfig Config::lidar() const {
    GridConfig g = grid();
    LidarConfig l;
    l.rays_v = g.rows;
    l.rays_h = g.cols;
    l.zenith_min = g.zenith_min;
    l.zenith_max = g.zenith_max;
    l.azimuth_fov = g.azimuth_fov;
    l.pitch = get_double("sim.pitch");
    l.sensor_height = get_double("sim.sensor_height");
    l.max_range = get_double("sim.max_range");
    return l;
}

SceneGenConfig Config::scene_gen() const {
    SceneGenConfig s;
    s.cars = static_cast<int>(get_int("sim.cars"));
    s.pedestrians = static_cast<int>(get_int("sim.pedestrians"));
    s.cyclists = static_cast<int>(get_int("sim.cyclists"));
    s.min_dist = get_double("sim.min_dist");
    s.max_dist = get_double("sim.max_dist");
    return s;
}

}  // namespace sseg
