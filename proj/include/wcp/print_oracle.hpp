#pragma once

#include <cstdint>
#include <limits>

#include "wcp/geometry.hpp"

namespace wcp {

// Analytic position-dependent warp field standing in for the printer and
// scanner. Not a physics model: its contract is qualitative agreement with
// edge-amplified, sign-varying dome warpage across the build chamber.
struct WarpSpec {
  double amplitude = 1.0;   // A, mm
  double edge_gain = 2.0;   // gamma, dimensionless, >= 0
  double wavelength = 100.0;  // lambda, mm (typically the part length)
  double noise_sigma = 0.0;   // mm
  ChamberSpec chamber;
  uint64_t seed = 0;
  // Longitudinal reference of the part the field is evaluated for. NaN
  // means "derive from the cloud" (simulate_print uses its centroid).
  Vec3 part_center = Vec3::Constant(std::numeric_limits<double>::quiet_NaN());

  void validate() const;
  bool has_part_center() const { return part_center.allFinite(); }
  WarpSpec with_part_center(const Vec3& center) const;
};

// d(p) = A * (1 + gamma * r^2) * cos(2*pi*x_loc/lambda) * z_hat, where r is
// the normalized radial distance of p from the chamber center and x_loc the
// in-part longitudinal coordinate (x relative to the part center). Smooth,
// analytic, deterministic. Throws OutOfChamberError for p outside the
// chamber and ContractError when no part center is set.
Vec3 warp_displacement(const Vec3& p, const WarpSpec& spec);

// s_i = c_i + d(c_i) + noise(sigma, seed), index-aligned with the input.
PointCloud simulate_print(const PointCloud& cad, const WarpSpec& spec);

// Fixed-point inverse of the noiseless warp: returns c' with
// c' + d(c') ~= c. This is the ground-truth perfect compensator.
PointCloud invert_warp(const PointCloud& cad, const WarpSpec& spec, int iterations = 8);

}  // namespace wcp
