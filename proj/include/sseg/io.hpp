#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sseg/projection.hpp"
#include "sseg/tensor.hpp"

namespace sseg {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- TNSR container ------------------------------------------------------
// magic "TNSR", version 0x01, dtype 0x00 (f32), rank byte,
// rank x little-endian u32 extents, row-major little-endian f32 payload.
void write_tensor(const std::string& path, const Tensor& t);
Tensor read_tensor(const std::string& path);

// --- point clouds --------------------------------------------------------
// Headerless little-endian f32 records (x, y, z, intensity), 16 bytes per
// point. intensity_max rescales raw intensity into [0,1] at ingestion.
PointCloud read_point_cloud(const std::string& path,
                            double intensity_max = 1.0);
void write_point_cloud(const std::string& path, const PointCloud& cloud);

// one unsigned byte per point, same order as the cloud
std::vector<std::uint8_t> read_labels(const std::string& path);
void write_labels(const std::string& path,
                  const std::vector<std::uint8_t>& labels);

// little-endian u16 per point
std::vector<std::uint16_t> read_instance_ids(const std::string& path);
void write_instance_ids(const std::string& path,
                        const std::vector<std::uint16_t>& ids);

// --- grids ---------------------------------------------------------------
// Grid stored as one TNSR of [H, W, 6]: the 5 feature channels plus the
// occupancy mask as a 0/1 channel.
void write_grid(const std::string& path, const SphericalGrid& grid);
SphericalGrid read_grid(const std::string& path, const GridConfig& cfg);

// Label grid: magic "LGRD", u32 rows, u32 cols, then rows*cols bytes of
// class ids followed by rows*cols bytes of occupancy mask.
void write_label_grid(const std::string& path, const LabelGrid& lg);
LabelGrid read_label_grid(const std::string& path);

// Noise model: TNSR of [H, W, 1] frequencies.
void write_noise_model(const std::string& path, const NoiseModel& model);
NoiseModel read_noise_model(const std::string& path);

// --- checkpoints ---------------------------------------------------------
// magic "SSCK", version byte 0x01, u32 entry count, then per entry:
// u16 name length, name bytes, u64 absolute payload offset. Payloads are
// TNSR blobs.
void write_checkpoint(const std::string& path,
                      const std::vector<std::pair<std::string, const Tensor*>>&
                          entries);
std::vector<std::pair<std::string, Tensor>> read_checkpoint(
    const std::string& path);

// --- rendering -----------------------------------------------------------
// Binary PPM, one pixel per grid cell: car red, pedestrian green, cyclist
// blue, background grey, unoccupied black.
void render_labels(const LabelGrid& lg, const std::string& path);

// --- manifests -----------------------------------------------------------
struct ManifestEntry {
    std::string cloud_path;
    std::string label_path;
    std::string instance_path;  // optional, may be empty
};

// Tab-separated: cloud<TAB>labels[<TAB>instances]. '#' comments allowed.
// Verifies that the files exist and that point/label counts agree.
std::vector<ManifestEntry> read_manifest(const std::string& path,
                                         bool verify = true);
void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries);

// Instance dump: one line per instance: class id, instance index, point
// count, then "row,col" cell coordinates.
struct InstanceSet;  // defined in instance.hpp
void write_instance_dump(const std::string& path, const InstanceSet& set,
                         int grid_cols);

}  // namespace sseg
