#pragma once

#include <string>

#include "wcp/print_oracle.hpp"
#include "wcp/trainer.hpp"

namespace wcp {

// Synthetic nesting dataset: identical bars on an nx-by-ny grid across the
// chamber floor plan (centered in z), each printed through the warp oracle.
struct BarDatasetSpec {
  Vec3 bar_size{100.0, 10.0, 5.0};  // mm
  int grid_nx = 3;
  int grid_ny = 4;
  double margin = 30.0;  // mm, kept clear of chamber walls
  ChamberSpec chamber{Vec3::Zero(), Vec3(400.0, 300.0, 120.0)};
  WarpSpec warp;             // wavelength defaults to the bar length when <= 0
  int target_vertices = 800;  // shell vertex budget per part
  uint64_t seed = 0;
  std::vector<int> val_parts;  // indices into the grid (row-major)
};

Dataset build_bar_dataset(const BarDatasetSpec& spec);

// Position-blind ablation: every sample rigidly shifted so its centroid
// sits at the chamber center, wiping the placement signal while keeping
// each displacement field intact.
Dataset recenter_dataset(const Dataset& dataset, const ChamberSpec& chamber);

// Directory layout: dataset.txt plus per-sample
// {id}_cad.ply / {id}_scan.ply / {id}_graph.ply / {id}_graph.edges /
// {id}_placement.txt files.
void save_dataset(const Dataset& dataset, const ChamberSpec& chamber, const std::string& dir);
Dataset load_dataset(const std::string& dir, ChamberSpec* chamber = nullptr);

void save_placement(const Placement& placement, const std::string& path);
Placement load_placement(const std::string& path);

}  // namespace wcp
