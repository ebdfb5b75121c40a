#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lab/errors.hpp"
#include "lab/specfun.hpp"

namespace lab {

// Intrinsic coordinates: torus (x, y) in [0,1)^2, sphere (theta, phi) with
// theta in [0, pi] (colatitude) and phi in [0, 2pi).
struct Vec2 {
  double a = 0.0;
  double b = 0.0;
};

inline double wrap01(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r -= 1.0;
  return r;
}

inline double wrap_two_pi(double x) {
  double r = x - kTwoPi * std::floor(x / kTwoPi);
  if (r >= kTwoPi) r -= kTwoPi;
  return r;
}

// Signed difference on the unit circle [0, 1), in [-1/2, 1/2).
inline double wrapped_diff01(double a, double b) {
  double d = a - b;
  d -= std::round(d);
  return d;
}

enum class SurfaceKind : std::uint8_t { FlatTorus, RoundSphere };

struct SurfaceParams {
  double torus_side_x = 1.0;
  double torus_side_y = 1.0;
  double sphere_radius = 1.0;
};

enum class CurveKind : std::uint8_t { TorusCircle, SphereMeridian, SphereGreatCircle };

// Unit-speed curve on a surface. All shipped segments lie inside Fix(tau).
struct CurveSegment {
  SurfaceKind surface = SurfaceKind::FlatTorus;
  CurveKind kind = CurveKind::TorusCircle;
  int component = 0;   // index within the fixed locus
  double param = 0.0;  // torus: the y offset; sphere meridian: phi
  double length = 1.0;
  bool closed = true;

  Vec2 point(double s) const {
    switch (kind) {
      case CurveKind::TorusCircle:
        return {wrap01(s), param};
      case CurveKind::SphereMeridian:
        return {s, param};
      case CurveKind::SphereGreatCircle: {
        const double u = wrap_two_pi(s);
        if (u <= kPi) return {u, 0.0};
        return {kTwoPi - u, kPi};
      }
    }
    return {};
  }
};

namespace detail {
inline std::array<double, 3> sphere_cartesian(const Vec2& p) {
  return {std::sin(p.a) * std::cos(p.b), std::sin(p.a) * std::sin(p.b), std::cos(p.a)};
}
}  // namespace detail

// Surface with the reflection involution. Torus: tau(x,y) = (x, -y), fixed
// locus {y=0} u {y=1/2}. Sphere: tau(theta,phi) = (theta, -phi), fixed locus
// the great circle through both poles (phi = 0 and phi = pi).
struct SurfaceModel {
  SurfaceKind kind = SurfaceKind::FlatTorus;
  int genus = 1;
  double area = 1.0;
  double diameter = 1.0;
  double liouville_normalizer = kTwoPi;  // vol(S*M) = 2pi * area

  Vec2 involution(const Vec2& p) const {
    if (kind == SurfaceKind::FlatTorus) return {p.a, wrap01(-p.b)};
    return {p.a, wrap_two_pi(-p.b)};
  }

  // (g11, g12, g22) in intrinsic coordinates.
  std::array<double, 3> metric(const Vec2& p) const {
    if (kind == SurfaceKind::FlatTorus) return {1.0, 0.0, 1.0};
    const double s = std::sin(p.a);
    return {1.0, 0.0, s * s};
  }

  double distance(const Vec2& p, const Vec2& q) const {
    if (kind == SurfaceKind::FlatTorus) {
      const double dx = wrapped_diff01(p.a, q.a);
      const double dy = wrapped_diff01(p.b, q.b);
      return std::sqrt(dx * dx + dy * dy);
    }
    const auto u = detail::sphere_cartesian(p);
    const auto v = detail::sphere_cartesian(q);
    const double dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    const double cx = u[1] * v[2] - u[2] * v[1];
    const double cy = u[2] * v[0] - u[0] * v[2];
    const double cz = u[0] * v[1] - u[1] * v[0];
    return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot);
  }

  bool on_fixed_locus(const Vec2& p, double tol = 1e-10) const {
    if (kind == SurfaceKind::FlatTorus) {
      const double d0 = std::abs(wrapped_diff01(p.b, 0.0));
      const double d1 = std::abs(wrapped_diff01(p.b, 0.5));
      return std::min(d0, d1) < tol;
    }
    // poles belong to the fixed circle regardless of phi
    if (p.a < tol || p.a > kPi - tol) return true;
    const double dphi = std::min(std::abs(wrapped_diff01(p.b / kTwoPi, 0.0)),
                                 std::abs(wrapped_diff01(p.b / kTwoPi, 0.5))) *
                        kTwoPi;
    return dphi * std::sin(p.a) < tol;
  }

  // Fixed locus as listed segments: torus two circles of length 1; sphere the
  // great circle split into two meridian segments of length pi.
  std::vector<CurveSegment> fixed_locus() const {
    if (kind == SurfaceKind::FlatTorus) {
      return {{kind, CurveKind::TorusCircle, 0, 0.0, 1.0, true},
              {kind, CurveKind::TorusCircle, 1, 0.5, 1.0, true}};
    }
    return {{kind, CurveKind::SphereMeridian, 0, 0.0, kPi, false},
            {kind, CurveKind::SphereMeridian, 1, kPi, kPi, false}};
  }

  // Closed components of Fix(tau): torus has two, the sphere one.
  std::vector<CurveSegment> fix_components() const {
    if (kind == SurfaceKind::FlatTorus) return fixed_locus();
    return {{kind, CurveKind::SphereGreatCircle, 0, 0.0, kTwoPi, true}};
  }
};

inline SurfaceModel make_surface(SurfaceKind kind, const SurfaceParams& params = {}) {
  if (kind == SurfaceKind::FlatTorus) {
    if (!(params.torus_side_x > 0.0) || !(params.torus_side_y > 0.0))
      throw config_error("torus side lengths must be positive");
    if (params.torus_side_x != 1.0 || params.torus_side_y != 1.0)
      throw config_error("only the unit torus is supported");
    SurfaceModel m;
    m.kind = kind;
    m.genus = 1;
    m.area = 1.0;
    m.diameter = 1.0;
    m.liouville_normalizer = kTwoPi * m.area;
    return m;
  }
  if (params.sphere_radius != 1.0) throw config_error("only the unit sphere is supported");
  SurfaceModel m;
  m.kind = SurfaceKind::RoundSphere;
  m.genus = 0;
  m.area = 4.0 * kPi;
  m.diameter = kPi;
  m.liouville_normalizer = kTwoPi * m.area;
  return m;
}

inline SurfaceModel surface_by_name(const std::string& name) {
  if (name == "torus") return make_surface(SurfaceKind::FlatTorus);
  if (name == "sphere") return make_surface(SurfaceKind::RoundSphere);
  throw config_error("unknown surface '" + name + "' (expected torus or sphere)");
}

// Fermi chart around a fixed-locus segment: t = arc length along the base,
// n = signed geodesic distance off it. The second-order coefficients of
// -Laplace in (d_n/i, d_t/i) are b20, b02, b11; drift_n multiplies plain d_n.
struct FermiChart {
  SurfaceKind surface = SurfaceKind::FlatTorus;
  CurveSegment base;
  double half_width = 0.0;

  Vec2 point(double t, double n) const {
    check(n);
    if (surface == SurfaceKind::FlatTorus) return {wrap01(t), wrap01(base.param + n)};
    const double phi0 = (base.kind == CurveKind::SphereGreatCircle) ? 0.0 : base.param;
    double tt = t, nn = n;
    if (base.kind == CurveKind::SphereGreatCircle && t > kPi) {
      // second meridian half: fold the parameter back
      tt = kTwoPi - t;
      nn = -n;
      return meridian_point(tt, nn, kPi);
    }
    return meridian_point(tt, nn, phi0);
  }

  double b20(double, double n) const {
    check(n);
    return 1.0;
  }
  double b02(double, double n) const {
    check(n);
    if (surface == SurfaceKind::FlatTorus) return 1.0;
    const double c = std::cos(n);
    return 1.0 / (c * c);
  }
  double b11(double, double n) const {
    check(n);
    return 0.0;
  }
  double drift_n(double, double n) const {
    check(n);
    if (surface == SurfaceKind::FlatTorus) return 0.0;
    return std::tan(n);
  }

 private:
  void check(double n) const {
    if (std::abs(n) > half_width) throw chart_error("normal coordinate outside the chart");
  }
  static Vec2 meridian_point(double t, double n, double phi0) {
    const double cp = std::cos(phi0), sp = std::sin(phi0);
    const double x = std::sin(t) * cp * std::cos(n) - sp * std::sin(n);
    const double y = std::sin(t) * sp * std::cos(n) + cp * std::sin(n);
    const double z = std::cos(t) * std::cos(n);
    const double theta = std::acos(std::max(-1.0, std::min(1.0, z)));
    double phi = std::atan2(y, x);
    if (theta < 1e-15 || theta > kPi - 1e-15) phi = 0.0;
    return {theta, wrap_two_pi(phi)};
  }
};

inline FermiChart fermi_chart(const SurfaceModel& surface, const CurveSegment& base,
                              double half_width) {
  if (base.surface != surface.kind) throw chart_error("segment does not lie on this surface");
  const double limit = (surface.kind == SurfaceKind::FlatTorus) ? 0.25 : kPi / 4.0;
  if (!(half_width > 0.0) || half_width >= limit)
    throw chart_error("chart half-width exceeds the non-overlap limit");
  return {surface.kind, base, half_width};
}

// Number of connected components of M \ Fix(tau) on an offset sample grid.
inline int separating_component_count(const SurfaceModel& surface, int n = 256) {
  if (n < 8) throw resolution_error("separating check needs at least an 8-node grid");
  const int rows = n;
  const int cols = (surface.kind == SurfaceKind::FlatTorus) ? n : 2 * n;
  std::vector<int> label(static_cast<std::size_t>(rows) * cols, -1);
  // crossing test for an edge in the wrapped coordinate: does (c0, c1) cross
  // one of the two cut values 0 or 1/2 (coordinates scaled to [0,1))?
  auto crosses_cut = [](double c0, double c1) {
    const double d = wrapped_diff01(c1, c0);
    const double lo = std::min(0.0, d), hi = std::max(0.0, d);
    auto hit = [&](double cut) {
      const double r = wrapped_diff01(cut, c0);
      return r > lo - 1e-15 && r < hi + 1e-15 && std::abs(r) <= std::abs(d) + 1e-15;
    };
    return hit(0.0) || hit(0.5);
  };
  auto coord = [&](int i, int j) -> std::pair<double, double> {
    if (surface.kind == SurfaceKind::FlatTorus)
      return {(i + 0.5) / rows, (j + 0.5) / rows};  // (x, y/1)
    return {(i + 0.5) * kPi / rows, (j + 0.5) / cols};  // (theta, phi/2pi)
  };
  const bool wrap_rows = surface.kind == SurfaceKind::FlatTorus;
  int comps = 0;
  std::vector<int> stack;
  for (int start = 0; start < rows * cols; ++start) {
    if (label[start] >= 0) continue;
    label[start] = comps;
    stack.push_back(start);
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      const int i = cur / cols, j = cur % cols;
      const auto [ci, cj] = coord(i, j);
      const int di[4] = {1, -1, 0, 0};
      const int dj[4] = {0, 0, 1, -1};
      for (int d = 0; d < 4; ++d) {
        int ni = i + di[d], nj = j + dj[d];
        if (wrap_rows)
          ni = (ni + rows) % rows;
        else if (ni < 0 || ni >= rows)
          continue;
        nj = (nj + cols) % cols;
        const int nxt = ni * cols + nj;
        if (label[nxt] >= 0) continue;
        const auto [c2i, c2j] = coord(ni, nj);
        // the reflected coordinate is the second one on both surfaces
        if (d >= 2 && crosses_cut(cj, c2j)) continue;
        (void)ci;
        (void)c2i;
        label[nxt] = comps;
        stack.push_back(nxt);
      }
    }
    ++comps;
  }
  return comps;
}

}  // namespace lab
