#include "sseg/io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sseg/instance.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts unsupported");

namespace sseg {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    return f;
}

void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}
std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
void write_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), 8);
}
std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

void write_tensor_stream(std::ostream& os, const Tensor& t) {
    os.write("TNSR", 4);
    os.put(0x01);  // version
    os.put(0x00);  // dtype f32
    os.put(static_cast<char>(t.rank()));
    for (int e : t.dims) write_u32(os, static_cast<std::uint32_t>(e));
    os.write(reinterpret_cast<const char*>(t.data.data()),
             static_cast<std::streamsize>(t.data.size() * sizeof(float)));
}

Tensor read_tensor_stream(std::istream& is, const std::string& what) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "TNSR", 4) != 0)
        throw IoError("bad TNSR magic in " + what);
    int version = is.get();
    if (version != 0x01) throw IoError("unsupported TNSR version in " + what);
    int dtype = is.get();
    if (dtype != 0x00) throw IoError("unsupported TNSR dtype in " + what);
    int rank = is.get();
    if (rank < 1 || rank > 8) throw IoError("bad TNSR rank in " + what);
    std::vector<int> dims(rank);
    for (int i = 0; i < rank; ++i) {
        dims[i] = static_cast<int>(read_u32(is));
        if (dims[i] < 1) throw IoError("bad TNSR extent in " + what);
    }
    Tensor t(dims);
    is.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!is) throw IoError("truncated TNSR payload in " + what);
    return t;
}

}  // namespace

void write_tensor(const std::string& path, const Tensor& t) {
    auto f = open_out(path);
    write_tensor_stream(f, t);
}

Tensor read_tensor(const std::string& path) {
    auto f = open_in(path);
    return read_tensor_stream(f, path);
}

PointCloud read_point_cloud(const std::string& path, double intensity_max) {
    auto f = open_in(path);
    f.seekg(0, std::ios::end);
    std::streamoff size = f.tellg();
    f.seekg(0);
    if (size % 16 != 0)
        throw IoError("point cloud size not a multiple of 16: " + path);
    std::size_t n = static_cast<std::size_t>(size / 16);
    PointCloud cloud;
    cloud.points.resize(n);
    std::vector<float> buf(n * 4);
    f.read(reinterpret_cast<char*>(buf.data()), size);
    if (!f) throw IoError("truncated point cloud: " + path);
    for (std::size_t i = 0; i < n; ++i) {
        Point& p = cloud.points[i];
        p.x = buf[i * 4 + 0];
        p.y = buf[i * 4 + 1];
        p.z = buf[i * 4 + 2];
        p.intensity =
            static_cast<float>(buf[i * 4 + 3] / intensity_max);
    }
    return cloud;
}

void write_point_cloud(const std::string& path, const PointCloud& cloud) {
    auto f = open_out(path);
    std::vector<float> buf;
    buf.reserve(cloud.points.size() * 4);
    for (const Point& p : cloud.points) {
        buf.push_back(p.x);
        buf.push_back(p.y);
        buf.push_back(p.z);
        buf.push_back(p.intensity);
    }
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

std::vector<std::uint8_t> read_labels(const std::string& path) {
    auto f = open_in(path);
    f.seekg(0, std::ios::end);
    std::streamoff size = f.tellg();
    f.seekg(0);
    std::vector<std::uint8_t> out(static_cast<std::size_t>(size));
    f.read(reinterpret_cast<char*>(out.data()), size);
    return out;
}

void write_labels(const std::string& path,
                  const std::vector<std::uint8_t>& labels) {
    auto f = open_out(path);
    f.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
}

std::vector<std::uint16_t> read_instance_ids(const std::string& path) {
    auto f = open_in(path);
    f.seekg(0, std::ios::end);
    std::streamoff size = f.tellg();
    f.seekg(0);
    if (size % 2 != 0) throw IoError("odd instance-id file size: " + path);
    std::vector<std::uint16_t> out(static_cast<std::size_t>(size / 2));
    f.read(reinterpret_cast<char*>(out.data()), size);
    return out;
}

void write_instance_ids(const std::string& path,
                        const std::vector<std::uint16_t>& ids) {
    auto f = open_out(path);
    f.write(reinterpret_cast<const char*>(ids.data()),
            static_cast<std::streamsize>(ids.size() * 2));
}

void write_grid(const std::string& path, const SphericalGrid& grid) {
    const int H = grid.config.rows, W = grid.config.cols;
    Tensor t({H, W, GridConfig::channels + 1});
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
            for (int ch = 0; ch < GridConfig::channels; ++ch)
                t.at(r, c, ch) = grid.features.at(r, c, ch);
            t.at(r, c, GridConfig::channels) = grid.occupied(r, c) ? 1.f : 0.f;
        }
    write_tensor(path, t);
}

SphericalGrid read_grid(const std::string& path, const GridConfig& cfg) {
    Tensor t = read_tensor(path);
    if (t.rank() != 3 || t.dims[2] != GridConfig::channels + 1 ||
        t.dims[0] != cfg.rows || t.dims[1] != cfg.cols)
        throw IoError("grid tensor shape mismatch: " + path);
    SphericalGrid grid;
    grid.config = cfg;
    grid.features = Tensor({cfg.rows, cfg.cols, GridConfig::channels});
    grid.mask.assign(static_cast<std::size_t>(cfg.rows) * cfg.cols, 0);
    grid.point_index.assign(grid.mask.size(), -1);
    for (int r = 0; r < cfg.rows; ++r)
        for (int c = 0; c < cfg.cols; ++c) {
            for (int ch = 0; ch < GridConfig::channels; ++ch)
                grid.features.at(r, c, ch) = t.at(r, c, ch);
            grid.mask[static_cast<std::size_t>(r) * cfg.cols + c] =
                t.at(r, c, GridConfig::channels) != 0.f;
        }
    return grid;
}

void write_label_grid(const std::string& path, const LabelGrid& lg) {
    auto f = open_out(path);
    f.write("LGRD", 4);
    write_u32(f, static_cast<std::uint32_t>(lg.rows));
    write_u32(f, static_cast<std::uint32_t>(lg.cols));
    f.write(reinterpret_cast<const char*>(lg.classes.data()),
            static_cast<std::streamsize>(lg.classes.size()));
    f.write(reinterpret_cast<const char*>(lg.mask.data()),
            static_cast<std::streamsize>(lg.mask.size()));
}

LabelGrid read_label_grid(const std::string& path) {
    auto f = open_in(path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "LGRD", 4) != 0)
        throw IoError("bad label grid magic: " + path);
    LabelGrid lg;
    lg.rows = static_cast<int>(read_u32(f));
    lg.cols = static_cast<int>(read_u32(f));
    std::size_t n = static_cast<std::size_t>(lg.rows) * lg.cols;
    lg.classes.resize(n);
    lg.mask.resize(n);
    f.read(reinterpret_cast<char*>(lg.classes.data()),
           static_cast<std::streamsize>(n));
    f.read(reinterpret_cast<char*>(lg.mask.data()),
           static_cast<std::streamsize>(n));
    if (!f) throw IoError("truncated label grid: " + path);
    return lg;
}

void write_noise_model(const std::string& path, const NoiseModel& model) {
    Tensor t({model.rows, model.cols, 1});
    for (std::size_t i = 0; i < model.eps.size(); ++i)
        t.data[i] = model.eps[i];
    write_tensor(path, t);
}

NoiseModel read_noise_model(const std::string& path) {
    Tensor t = read_tensor(path);
    if (t.rank() != 3 || t.dims[2] != 1)
        throw IoError("noise model shape mismatch: " + path);
    NoiseModel m;
    m.rows = t.dims[0];
    m.cols = t.dims[1];
    m.eps.assign(t.data.begin(), t.data.end());
    return m;
}

void write_checkpoint(
    const std::string& path,
    const std::vector<std::pair<std::string, const Tensor*>>& entries) {
    auto f = open_out(path);
    f.write("SSCK", 4);
    f.put(0x01);
    write_u32(f, static_cast<std::uint32_t>(entries.size()));
    // directory first with placeholder offsets, then payloads
    std::streampos dir_start = f.tellp();
    for (const auto& [name, t] : entries) {
        std::uint16_t len = static_cast<std::uint16_t>(name.size());
        f.write(reinterpret_cast<const char*>(&len), 2);
        f.write(name.data(), len);
        write_u64(f, 0);
    }
    std::vector<std::uint64_t> offsets;
    for (const auto& [name, t] : entries) {
        offsets.push_back(static_cast<std::uint64_t>(f.tellp()));
        write_tensor_stream(f, *t);
    }
    f.seekp(dir_start);
    std::size_t i = 0;
    for (const auto& [name, t] : entries) {
        f.seekp(2 + static_cast<std::streamoff>(name.size()),
                std::ios::cur);
        write_u64(f, offsets[i++]);
    }
}

std::vector<std::pair<std::string, Tensor>> read_checkpoint(
    const std::string& path) {
    auto f = open_in(path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "SSCK", 4) != 0)
        throw IoError("bad checkpoint magic: " + path);
    int version = f.get();
    if (version != 0x01)
        throw IoError("unsupported checkpoint version: " + path);
    std::uint32_t count = read_u32(f);
    std::vector<std::pair<std::string, std::uint64_t>> dir;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint16_t len = 0;
        f.read(reinterpret_cast<char*>(&len), 2);
        std::string name(len, '\0');
        f.read(name.data(), len);
        dir.emplace_back(std::move(name), read_u64(f));
    }
    if (!f) throw IoError("truncated checkpoint directory: " + path);
    std::vector<std::pair<std::string, Tensor>> out;
    for (const auto& [name, off] : dir) {
        f.seekg(static_cast<std::streamoff>(off));
        out.emplace_back(name, read_tensor_stream(f, path + ":" + name));
    }
    return out;
}

void render_labels(const LabelGrid& lg, const std::string& path) {
    auto f = open_out(path);
    f << "P6\n" << lg.cols << " " << lg.rows << "\n255\n";
    static const unsigned char palette[kNumClasses][3] = {
        {128, 128, 128},  // background
        {255, 0, 0},      // car
        {0, 255, 0},      // pedestrian
        {0, 0, 255},      // cyclist
    };
    for (int r = 0; r < lg.rows; ++r)
        for (int c = 0; c < lg.cols; ++c) {
            unsigned char px[3] = {0, 0, 0};
            if (lg.occupied(r, c)) {
                const unsigned char* p = palette[lg.cls(r, c)];
                px[0] = p[0];
                px[1] = p[1];
                px[2] = p[2];
            }
            f.write(reinterpret_cast<const char*>(px), 3);
        }
    if (!f) throw IoError("failed writing image: " + path);
}

std::vector<ManifestEntry> read_manifest(const std::string& path,
                                         bool verify) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open manifest: " + path);
    std::vector<ManifestEntry> out;
    std::string line;
    auto base = std::filesystem::path(path).parent_path();
    auto resolve = [&base](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, '\t')) fields.push_back(field);
        if (fields.size() < 2)
            throw IoError("manifest line needs cloud and label paths: " +
                          line);
        ManifestEntry e;
        e.cloud_path = resolve(fields[0]);
        e.label_path = resolve(fields[1]);
        if (fields.size() > 2 && !fields[2].empty())
            e.instance_path = resolve(fields[2]);
        if (verify) {
            if (!std::filesystem::exists(e.cloud_path))
                throw IoError("manifest: missing cloud " + e.cloud_path);
            if (!std::filesystem::exists(e.label_path))
                throw IoError("manifest: missing labels " + e.label_path);
            auto points = std::filesystem::file_size(e.cloud_path) / 16;
            auto labels = std::filesystem::file_size(e.label_path);
            if (points != labels)
                throw IoError("manifest: point/label count mismatch for " +
                              e.cloud_path);
            if (!e.instance_path.empty()) {
                if (!std::filesystem::exists(e.instance_path))
                    throw IoError("manifest: missing instances " +
                                  e.instance_path);
                if (std::filesystem::file_size(e.instance_path) / 2 != points)
                    throw IoError(
                        "manifest: point/instance count mismatch for " +
                        e.cloud_path);
            }
        }
        out.push_back(std::move(e));
    }
    return out;
}

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write manifest: " + path);
    for (const auto& e : entries) {
        f << e.cloud_path << '\t' << e.label_path;
        if (!e.instance_path.empty()) f << '\t' << e.instance_path;
        f << '\n';
    }
}

void write_instance_dump(const std::string& path, const InstanceSet& set,
                         int grid_cols) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write instance dump: " + path);
    for (int c = 1; c < kNumClasses; ++c) {
        int id = 0;
        for (const auto& inst : set.instances[c]) {
            f << c << ' ' << id++ << ' ' << inst.cells.size();
            for (int cell : inst.cells)
                f << ' ' << cell / grid_cols << ',' << cell % grid_cols;
            f << '\n';
        }
    }
}

}  // namespace sseg
