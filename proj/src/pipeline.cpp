#include "sseg/pipeline.hpp"

#include <filesystem>

namespace sseg {

void save_model(const std::string& path, Network& net, const CrfParams& crf) {
    std::vector<std::pair<std::string, const Tensor*>> entries;
    Tensor meta({2});
    meta.data[0] = net.profile() == Profile::Toy ? 0.f : 1.f;
    meta.data[1] = static_cast<float>(net.num_classes());
    entries.emplace_back("meta", &meta);

    Tensor crf_scalars({6});
    crf_scalars.data = {crf.w1,          crf.w2,
                        crf.sigma_alpha, crf.sigma_beta,
                        crf.sigma_gamma, static_cast<float>(crf.iterations)};
    entries.emplace_back("crf.scalars", &crf_scalars);
    entries.emplace_back("crf.compat", &crf.compat);

    auto named = net.named_params();
    for (auto& [name, t] : named) entries.emplace_back("net." + name, t);
    write_checkpoint(path, entries);
}

void load_model(const std::string& path, Network& net, CrfParams& crf) {
    auto entries = read_checkpoint(path);
    const Tensor* meta = nullptr;
    for (auto& [name, t] : entries)
        if (name == "meta") meta = &t;
    if (!meta) throw IoError("checkpoint missing meta entry: " + path);
    Profile profile = meta->data[0] == 0.f ? Profile::Toy : Profile::PaperLike;
    int num_classes = static_cast<int>(meta->data[1]);
    net = Network(profile, num_classes, 0);

    crf = CrfParams::make_default(num_classes);
    auto named = net.named_params();
    for (auto& [name, t] : entries) {
        if (name == "meta") continue;
        if (name == "crf.scalars") {
            crf.w1 = t.data[0];
            crf.w2 = t.data[1];
            crf.sigma_alpha = t.data[2];
            crf.sigma_beta = t.data[3];
            crf.sigma_gamma = t.data[4];
            crf.iterations = static_cast<int>(t.data[5]);
            continue;
        }
        if (name == "crf.compat") {
            crf.compat = t;
            continue;
        }
        bool found = false;
        for (auto& [pname, pt] : named) {
            if ("net." + pname == name) {
                if (pt->dims != t.dims)
                    throw IoError("checkpoint shape mismatch for " + name);
                pt->data = t.data;
                found = true;
                break;
            }
        }
        if (!found) throw IoError("unexpected checkpoint entry: " + name);
    }
}

Frame load_frame(const ManifestEntry& entry, const GridConfig& cfg) {
    PointCloud cloud = read_point_cloud(entry.cloud_path);
    cloud.labels = read_labels(entry.label_path);
    if (cloud.labels.size() != cloud.points.size())
        throw IoError("label count mismatch for " + entry.cloud_path);
    Frame f;
    f.grid = project(cloud, cfg);
    f.labels = project_labels(cloud, f.grid);
    return f;
}

std::vector<ManifestEntry> synth_dataset(const std::string& out_dir,
                                         int frames, std::uint64_t seed,
                                         const Config& cfg) {
    std::filesystem::create_directories(out_dir);
    LidarConfig lidar = cfg.lidar();
    SceneGenConfig gen = cfg.scene_gen();
    std::vector<ManifestEntry> entries;
    for (int i = 0; i < frames; ++i) {
        Scene scene = generate_scene(seed + static_cast<std::uint64_t>(i), gen);
        RaycastResult rc = raycast(scene, lidar);
        char stem[32];
        std::snprintf(stem, sizeof stem, "frame_%05d", i);
        ManifestEntry e;
        e.cloud_path = out_dir + "/" + stem + ".bin";
        e.label_path = out_dir + "/" + stem + ".labels";
        e.instance_path = out_dir + "/" + stem + ".inst";
        write_point_cloud(e.cloud_path, rc.cloud);
        write_labels(e.label_path, rc.cloud.labels);
        write_instance_ids(e.instance_path, rc.instance_ids);
        entries.push_back(std::move(e));
    }
    write_manifest(out_dir + "/manifest.tsv", entries);
    return entries;
}

LabelGrid argmax_labels(const Tensor& probs, const SphericalGrid& grid) {
    const int H = probs.dims[0], W = probs.dims[1], K = probs.dims[2];
    LabelGrid lg;
    lg.rows = H;
    lg.cols = W;
    lg.mask = grid.mask;
    lg.classes.assign(grid.mask.size(), kBackground);
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
            if (!grid.occupied(r, c)) continue;
            int best = 0;
            for (int k = 1; k < K; ++k)
                if (probs.at(r, c, k) > probs.at(r, c, best)) best = k;
            lg.classes[static_cast<std::size_t>(r) * W + c] =
                static_cast<std::uint8_t>(best);
        }
    return lg;
}

LabelGrid infer_frame(Network& net, const SphericalGrid& grid,
                      const CrfParams* crf) {
    Activations<float> acts;
    net.forward(grid, acts);
    Tensor probs =
        crf ? refine(acts.logits, grid, *crf) : acts.probs;
    return argmax_labels(probs, grid);
}

}  // namespace sseg
