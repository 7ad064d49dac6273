#pragma once

#include <string>
#include <vector>

#include "sseg/config.hpp"
#include "sseg/crf.hpp"
#include "sseg/eval.hpp"
#include "sseg/io.hpp"
#include "sseg/network.hpp"

namespace sseg {

// Network weights plus CRF parameters in one checkpoint file.
void save_model(const std::string& path, Network& net, const CrfParams& crf);
// Restores both; the network is rebuilt from the profile stored in the file.
void load_model(const std::string& path, Network& net, CrfParams& crf);

struct Frame {
    SphericalGrid grid;
    LabelGrid labels;
};

Frame load_frame(const ManifestEntry& entry, const GridConfig& cfg);

// Writes `frames` simulated frames (cloud, labels, instance ids) plus a
// manifest into out_dir. Deterministic per seed.
std::vector<ManifestEntry> synth_dataset(const std::string& out_dir,
                                         int frames, std::uint64_t seed,
                                         const Config& cfg);

LabelGrid argmax_labels(const Tensor& probs, const SphericalGrid& grid);

// Forward pass (optionally CRF-refined) to a label grid.
LabelGrid infer_frame(Network& net, const SphericalGrid& grid,
                      const CrfParams* crf);

}  // namespace sseg
