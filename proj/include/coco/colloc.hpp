#pragma once

// Collocation points in conformal coordinates: a uniform (rho, theta] grid
// mapped through Psi for the exterior, the image of |w| = gamma for the
// boundary, boundary offsets z +/- delta N, and radial interior rays.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "coco/analytic.hpp"
#include "coco/errors.hpp"
#include "coco/geometry.hpp"

namespace coco {

struct ExteriorPoint {
  double rho = 0.0, theta = 0.0, x1 = 0.0, x2 = 0.0;
};

struct BoundaryPoint {
  double theta = 0.0, x1 = 0.0, x2 = 0.0;
  Vec2 normal{};
};

struct CollocationCounts {
  int n_ext = 2000;
  int n_int = 500;
  int n_bd = 500;
};

struct CollocationSet {
  std::vector<ExteriorPoint> ext;
  std::vector<Vec2> interior;
  std::vector<BoundaryPoint> bd;
  std::vector<Vec2> bd_plus, bd_minus;
  double delta = 0.0;
  double L = 0.0;
  int n_rho = 0, n_theta = 0;
  /// Interior candidates rejected by the winding-number test.
  int discarded_interior = 0;
};

/// Exterior grid (rho_j, theta_i), rho in (rho0, ln L], theta in (0, 2 pi],
/// n_theta columns and ceil(n_ext / n_theta) rows.
inline std::vector<PolarPoint> exterior_grid(const ConformalMap &map,
                                             int n_ext, int n_theta,
                                             double L) {
  if (!(L > map.gamma()))
    throw ConfigError("outer radius L must exceed the conformal radius");
  if (n_ext < 1 || n_theta < 1)
    throw ConfigError("collocation counts must be >= 1");
  const int n_rho = (n_ext + n_theta - 1) / n_theta;
  const double r0 = map.rho0(), r1 = std::log(L);
  std::vector<PolarPoint> pts;
  pts.reserve(std::size_t(n_rho) * n_theta);
  for (int j = 1; j <= n_rho; ++j)
    for (int i = 1; i <= n_theta; ++i)
      pts.push_back({r0 + (r1 - r0) * j / n_rho, two_pi * i / n_theta});
  return pts;
}

/// Grid used for P-Neutral reports: the desk-scale exterior grid, L = 5.
inline std::vector<PolarPoint> standard_grid(const ConformalMap &map) {
  return exterior_grid(map, 2000, 500, 5.0 * map.gamma());
}

inline CollocationSet generate_collocation(const ConformalMap &map,
                                           const CollocationCounts &counts,
                                           double L, double delta) {
  if (counts.n_ext < 1 || counts.n_int < 1 || counts.n_bd < 1)
    throw ConfigError("collocation counts must be >= 1");
  if (!(L > map.gamma()))
    throw ConfigError("outer radius L must exceed the conformal radius");
  if (!(delta > 0.0))
    throw ConfigError("boundary offset delta must be positive");

  CollocationSet set;
  set.delta = delta;
  set.L = L;
  set.n_theta = counts.n_bd;
  set.n_rho = (counts.n_ext + counts.n_bd - 1) / counts.n_bd;

  for (const auto &p : exterior_grid(map, counts.n_ext, counts.n_bd, L)) {
    const cplx z = map.psi_unchecked(std::polar(std::exp(p.rho), p.theta));
    set.ext.push_back({p.rho, p.theta, z.real(), z.imag()});
  }

  set.bd.reserve(counts.n_bd);
  for (int i = 1; i <= counts.n_bd; ++i) {
    const double th = two_pi * i / counts.n_bd;
    const cplx z = map.boundary(th);
    const Vec2 N = boundary_normal(map, th);
    set.bd.push_back({th, z.real(), z.imag(), N});
    set.bd_plus.push_back({z.real() + delta * N[0], z.imag() + delta * N[1]});
    set.bd_minus.push_back({z.real() - delta * N[0], z.imag() - delta * N[1]});
  }
  // The polygonal winding test must resolve the curve finer than delta:
  // chord sag ~ (2 pi gamma / S)^2 / 8 is kept below delta / 10.
  const int S = static_cast<int>(std::clamp(
      std::ceil(10.0 * map.gamma() / std::sqrt(delta / map.gamma())), 2048.0,
      double(1 << 16)));
  for (const auto &q : set.bd_minus)
    if (winding_number(map, {q[0], q[1]}, S) == 0)
      throw ConfigError("boundary offset delta too large: interior offset "
                        "point leaves the inclusion");

  // Rays at fixed boundary angles; radii split |z| uniformly.
  const int n_r =
      std::max(1, static_cast<int>(std::lround(std::sqrt(counts.n_int) / 2)));
  const int n_angles = (counts.n_int + n_r - 1) / n_r;
  for (int a = 0; a < n_angles; ++a) {
    const double th = two_pi * (a + 1) / n_angles;
    const cplx z = map.boundary(th);
    const double R = std::abs(z), phi = std::arg(z);
    for (int k = 1; k <= n_r; ++k) {
      const cplx x = std::polar(R * k / (n_r + 1), phi);
      if (winding_number(map, x) == 0) {
        ++set.discarded_interior;
        continue;
      }
      set.interior.push_back({x.real(), x.imag()});
    }
  }
  return set;
}

} // namespace coco
