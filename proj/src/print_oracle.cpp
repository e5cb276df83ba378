#include "wcp/print_oracle.hpp"

#include <cmath>

#include "wcp/errors.hpp"
#include "wcp/rng.hpp"

namespace wcp {

void WarpSpec::validate() const {
  if (amplitude < 0.0) throw InvalidArgumentError("warp amplitude must be >= 0");
  if (edge_gain < 0.0) throw InvalidArgumentError("edge gain must be >= 0");
  if (wavelength <= 0.0) throw InvalidArgumentError("dome wavelength must be positive");
  if (noise_sigma < 0.0) throw InvalidArgumentError("noise sigma must be >= 0");
  chamber.validate();
}

WarpSpec WarpSpec::with_part_center(const Vec3& center) const {
  WarpSpec out = *this;
  out.part_center = center;
  return out;
}

Vec3 warp_displacement(const Vec3& p, const WarpSpec& spec) {
  spec.validate();
  if (!spec.has_part_center()) {
    throw ContractError("warp_displacement needs a part center (set it or use simulate_print)");
  }
  if (!spec.chamber.contains(p)) throw OutOfChamberError("point lies outside the build chamber");
  double r = spec.chamber.radial_fraction(p);
  double x_loc = p.x() - spec.part_center.x();
  double dome = std::cos(2.0 * M_PI * x_loc / spec.wavelength);
  double dz = spec.amplitude * (1.0 + spec.edge_gain * r * r) * dome;
  return Vec3(0.0, 0.0, dz);
}

PointCloud simulate_print(const PointCloud& cad, const WarpSpec& spec) {
  cad.validate();
  WarpSpec local = spec.has_part_center() ? spec : spec.with_part_center(cad.centroid());
  local.validate();
  PointCloud out;
  out.points.reserve(cad.points.size());
  Rng rng(local.seed);
  for (const Vec3& c : cad.points) {
    Vec3 s = c + warp_displacement(c, local);
    if (local.noise_sigma > 0.0) {
      s += local.noise_sigma * Vec3(rng.normal(), rng.normal(), rng.normal());
    }
    out.points.push_back(s);
  }
  return out;
}

PointCloud invert_warp(const PointCloud& cad, const WarpSpec& spec, int iterations) {
  cad.validate();
  WarpSpec local = spec.has_part_center() ? spec : spec.with_part_center(cad.centroid());
  PointCloud out = cad;
  for (int it = 0; it < iterations; ++it) {
    for (int i = 0; i < cad.size(); ++i) {
      out.points[i] = cad.points[i] - warp_displacement(out.points[i], local);
    }
  }
  return out;
}

}  // namespace wcp
