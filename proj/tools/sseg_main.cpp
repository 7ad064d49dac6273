#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sseg/config.hpp"
#include "sseg/eval.hpp"
#include "sseg/io.hpp"
#include "sseg/pipeline.hpp"

namespace fs = std::filesystem;
using namespace sseg;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    int threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "key=value config file");
    cmd->add_option("--set", c.overrides, "override a config key (key=value)");
    cmd->add_option("--threads", c.threads, "worker thread count");
}

Config make_config(const Common& c) {
    Config cfg;
    if (!c.config_path.empty()) cfg.load(c.config_path);
    for (const auto& kv : c.overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got: " + kv);
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (c.threads > 0) omp_set_num_threads(c.threads);
    return cfg;
}

std::string pred_path(const std::string& dir, int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "pred_%05d.lgrd", i);
    return dir + "/" + buf;
}

std::uint64_t fnv1a(const void* data, std::size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

int cmd_project(const Common& common, const std::string& cloud_path,
                const std::string& labels_path, const std::string& grid_out,
                const std::string& labels_out, double intensity_max) {
    Config cfg = make_config(common);
    GridConfig gcfg = cfg.grid();
    PointCloud cloud = read_point_cloud(cloud_path, intensity_max);
    if (!labels_path.empty()) cloud.labels = read_labels(labels_path);
    SphericalGrid grid = project(cloud, gcfg);
    write_grid(grid_out, grid);
    long long occ = 0;
    for (auto m : grid.mask) occ += m ? 1 : 0;
    std::cout << "points=" << cloud.points.size() << " occupied=" << occ
              << "\n";
    if (!labels_out.empty()) {
        if (cloud.labels.empty())
            throw IoError("--label-grid requires --labels");
        write_label_grid(labels_out, project_labels(cloud, grid));
    }
    return 0;
}

int cmd_synth(const Common& common, const std::string& out_dir, int frames,
              std::uint64_t seed) {
    Config cfg = make_config(common);
    auto entries = synth_dataset(out_dir, frames, seed, cfg);
    std::cout << "frames=" << entries.size() << " manifest=" << out_dir
              << "/manifest.tsv\n";
    return 0;
}

int cmd_train(const Common& common, const std::string& manifest_path,
              const std::string& model_out, std::uint64_t seed, int epochs,
              double lr) {
    Config cfg = make_config(common);
    GridConfig gcfg = cfg.grid();
    auto entries = read_manifest(manifest_path);
    if (entries.empty()) throw IoError("empty manifest: " + manifest_path);

    std::vector<std::pair<Tensor, LabelGrid>> data;
    std::vector<LabelGrid> label_grids;
    Network net(cfg.profile(), kNumClasses, seed);
    for (const auto& e : entries) {
        Frame f = load_frame(e, gcfg);
        data.emplace_back(net.prepare_input(f.grid), f.labels);
        label_grids.push_back(f.labels);
    }
    auto weights = inverse_frequency_weights<float>(label_grids);

    if (epochs <= 0) epochs = static_cast<int>(cfg.train_epochs());
    if (lr < 0) lr = cfg.train_lr();
    for (int e = 0; e < epochs; ++e) {
        float loss = train_epoch(net, data, weights, static_cast<float>(lr),
                                 seed + 1000 + static_cast<std::uint64_t>(e));
        std::cout << "epoch=" << e << " loss=" << loss << "\n";
    }
    CrfParams crf = cfg.crf();
    save_model(model_out, net, crf);
    std::cout << "model=" << model_out << "\n";
    return 0;
}

int cmd_infer(const Common& common, const std::string& model_path,
              const std::string& manifest_path, const std::string& out_dir,
              bool use_crf) {
    Config cfg = make_config(common);
    GridConfig gcfg = cfg.grid();
    Network net;
    CrfParams crf;
    load_model(model_path, net, crf);
    auto entries = read_manifest(manifest_path);
    fs::create_directories(out_dir);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        Frame f = load_frame(entries[i], gcfg);
        LabelGrid pred =
            infer_frame(net, f.grid, use_crf ? &crf : nullptr);
        write_label_grid(pred_path(out_dir, static_cast<int>(i)), pred);
    }
    std::cout << "frames=" << entries.size() << " out=" << out_dir << "\n";
    return 0;
}

int cmd_refine(const Common& common, const std::string& grid_path,
               const std::string& logits_path, const std::string& out_path) {
    Config cfg = make_config(common);
    GridConfig gcfg = cfg.grid();
    SphericalGrid grid = read_grid(grid_path, gcfg);
    Tensor logits = read_tensor(logits_path);
    CrfParams crf = cfg.crf();
    Tensor probs = refine(logits, grid, crf);
    write_tensor(out_path, probs);
    std::cout << "refined=" << out_path << "\n";
    return 0;
}

int cmd_cluster(const Common& common, const std::string& grid_path,
                const std::string& labels_path, const std::string& out_path) {
    Config cfg = make_config(common);
    GridConfig gcfg = cfg.grid();
    SphericalGrid grid = read_grid(grid_path, gcfg);
    LabelGrid labels = read_label_grid(labels_path);
    InstanceSet set = extract_instances(labels, grid, cfg.cluster());
    write_instance_dump(out_path, set, gcfg.cols);
    for (int c = 1; c < kNumClasses; ++c)
        std::cout << "class=" << c
                  << " instances=" << set.instances[c].size()
                  << " noise_cells=" << set.noise[c].size() << "\n";
    return 0;
}

int cmd_eval(const Common& common, const std::string& manifest_path,
             const std::string& pred_dir, bool with_instances) {
    Config cfg = make_config(common);
    GridConfig gcfg = cfg.grid();
    auto entries = read_manifest(manifest_path);

    std::vector<Frame> frames;
    std::vector<LabelGrid> preds;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        frames.push_back(load_frame(entries[i], gcfg));
        preds.push_back(
            read_label_grid(pred_path(pred_dir, static_cast<int>(i))));
    }
    std::vector<InstanceSet> pred_sets, gt_sets;
    if (with_instances) {
        ClusterConfig ccfg = cfg.cluster();
        for (std::size_t i = 0; i < frames.size(); ++i) {
            pred_sets.push_back(
                extract_instances(preds[i], frames[i].grid, ccfg));
            gt_sets.push_back(
                extract_instances(frames[i].labels, frames[i].grid, ccfg));
        }
    }
    std::vector<FrameEval> evals;
    for (std::size_t i = 0; i < frames.size(); ++i)
        evals.push_back({&preds[i], &frames[i].labels,
                         with_instances ? &pred_sets[i] : nullptr,
                         with_instances ? &gt_sets[i] : nullptr});
    EvalReport rep = report(evals);
    std::cout << format_report(rep) << report_keyvalues(rep);
    return 0;
}

int cmd_bench(const Common& common, int frames, std::uint64_t seed,
              bool use_crf_timing) {
    Config cfg = make_config(common);
    if (frames < 1) throw ConfigError("bench: frames must be >= 1");
    GridConfig gcfg = cfg.grid();
    LidarConfig lidar = cfg.lidar();
    Scene scene = generate_scene(seed, cfg.scene_gen());
    RaycastResult rc = raycast(scene, lidar);
    SphericalGrid grid = project(rc.cloud, gcfg);
    Network net(cfg.profile(), kNumClasses, seed);
    CrfParams crf = cfg.crf();
    (void)use_crf_timing;

    auto time_runs = [&](bool with_crf) {
        std::vector<double> ms(frames);
        std::uint64_t digest = 0;
        for (int i = 0; i < frames; ++i) {
            auto t0 = std::chrono::steady_clock::now();
            Activations<float> acts;
            net.forward(grid, acts);
            Tensor probs =
                with_crf ? refine(acts.logits, grid, crf) : acts.probs;
            auto t1 = std::chrono::steady_clock::now();
            ms[i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
            digest = fnv1a(probs.data.data(),
                           probs.data.size() * sizeof(float));
        }
        double mean = 0;
        for (double v : ms) mean += v;
        mean /= frames;
        double var = 0;
        for (double v : ms) var += (v - mean) * (v - mean);
        double stdev = frames > 1 ? std::sqrt(var / (frames - 1)) : 0.0;
        return std::tuple<double, double, std::uint64_t>(mean, stdev, digest);
    };

    auto [m1, s1, d1] = time_runs(false);
    std::printf("forward mean_ms=%.3f std_ms=%.3f digest=%016llx\n", m1, s1,
                static_cast<unsigned long long>(d1));
    auto [m2, s2, d2] = time_runs(true);
    std::printf("forward+crf mean_ms=%.3f std_ms=%.3f digest=%016llx\n", m2,
                s2, static_cast<unsigned long long>(d2));
    return 0;
}

int cmd_viz(const std::string& labels_path, const std::string& out_path) {
    LabelGrid lg = read_label_grid(labels_path);
    render_labels(lg, out_path);
    std::cout << "image=" << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LiDAR road-object segmentation pipeline"};
    app.require_subcommand(1);

    Common common;

    // project
    auto* project_cmd =
        app.add_subcommand("project", "project a point cloud onto the grid");
    std::string cloud_path, labels_path, grid_out, labels_out;
    double intensity_max = 1.0;
    project_cmd->add_option("--cloud", cloud_path)->required();
    project_cmd->add_option("--labels", labels_path);
    project_cmd->add_option("--out", grid_out)->required();
    project_cmd->add_option("--label-grid", labels_out);
    project_cmd->add_option("--intensity-max", intensity_max);
    add_common(project_cmd, common);

    // synth
    auto* synth_cmd =
        app.add_subcommand("synth", "generate a simulated dataset");
    std::string synth_dir;
    int synth_frames = 10;
    std::uint64_t synth_seed = 1;
    synth_cmd->add_option("--out", synth_dir)->required();
    synth_cmd->add_option("--frames", synth_frames);
    synth_cmd->add_option("--seed", synth_seed);
    add_common(synth_cmd, common);

    // train
    auto* train_cmd = app.add_subcommand("train", "train a model");
    std::string train_manifest, train_model;
    std::uint64_t train_seed = 1;
    int train_epochs = 0;
    double train_lr = -1;
    train_cmd->add_option("--manifest", train_manifest)->required();
    train_cmd->add_option("--out", train_model)->required();
    train_cmd->add_option("--seed", train_seed);
    train_cmd->add_option("--epochs", train_epochs);
    train_cmd->add_option("--lr", train_lr);
    add_common(train_cmd, common);

    // infer
    auto* infer_cmd = app.add_subcommand("infer", "predict label grids");
    std::string infer_model, infer_manifest, infer_dir;
    bool infer_crf = false;
    infer_cmd->add_option("--model", infer_model)->required();
    infer_cmd->add_option("--manifest", infer_manifest)->required();
    infer_cmd->add_option("--out-dir", infer_dir)->required();
    infer_cmd->add_flag("--crf", infer_crf);
    add_common(infer_cmd, common);

    // refine
    auto* refine_cmd =
        app.add_subcommand("refine", "smooth stored logits over a grid");
    std::string refine_grid, refine_logits, refine_out;
    refine_cmd->add_option("--grid", refine_grid)->required();
    refine_cmd->add_option("--logits", refine_logits)->required();
    refine_cmd->add_option("--out", refine_out)->required();
    add_common(refine_cmd, common);

    // cluster
    auto* cluster_cmd =
        app.add_subcommand("cluster", "group labeled cells into instances");
    std::string cluster_grid, cluster_labels, cluster_out;
    cluster_cmd->add_option("--grid", cluster_grid)->required();
    cluster_cmd->add_option("--labels", cluster_labels)->required();
    cluster_cmd->add_option("--out", cluster_out)->required();
    add_common(cluster_cmd, common);

    // eval
    auto* eval_cmd =
        app.add_subcommand("eval", "score predictions against ground truth");
    std::string eval_manifest, eval_pred_dir;
    bool eval_instances = false;
    eval_cmd->add_option("--manifest", eval_manifest)->required();
    eval_cmd->add_option("--pred-dir", eval_pred_dir)->required();
    eval_cmd->add_flag("--instances", eval_instances);
    add_common(eval_cmd, common);

    // bench
    auto* bench_cmd =
        app.add_subcommand("bench", "time the forward and CRF passes");
    int bench_frames = 100;
    std::uint64_t bench_seed = 1;
    bench_cmd->add_option("--frames", bench_frames);
    bench_cmd->add_option("--seed", bench_seed);
    add_common(bench_cmd, common);

    // viz
    auto* viz_cmd = app.add_subcommand("viz", "render a label grid to PPM");
    std::string viz_labels, viz_out;
    viz_cmd->add_option("--labels", viz_labels)->required();
    viz_cmd->add_option("--out", viz_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*project_cmd)
            return cmd_project(common, cloud_path, labels_path, grid_out,
                               labels_out, intensity_max);
        if (*synth_cmd)
            return cmd_synth(common, synth_dir, synth_frames, synth_seed);
        if (*train_cmd)
            return cmd_train(common, train_manifest, train_model, train_seed,
                             train_epochs, train_lr);
        if (*infer_cmd)
            return cmd_infer(common, infer_model, infer_manifest, infer_dir,
                             infer_crf);
        if (*refine_cmd)
            return cmd_refine(common, refine_grid, refine_logits, refine_out);
        if (*cluster_cmd)
            return cmd_cluster(common, cluster_grid, cluster_labels,
                               cluster_out);
        if (*eval_cmd)
            return cmd_eval(common, eval_manifest, eval_pred_dir,
                            eval_instances);
        if (*bench_cmd)
            return cmd_bench(common, bench_frames, bench_seed, true);
        if (*viz_cmd) return cmd_viz(viz_labels, viz_out);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const TensorError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
