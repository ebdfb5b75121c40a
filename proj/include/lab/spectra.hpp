#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "lab/errors.hpp"
#include "lab/geometry.hpp"
#include "lab/rng.hpp"
#include "lab/specfun.hpp"

namespace lab {

enum class Parity : std::uint8_t { Even, Odd };

inline const char* parity_name(Parity p) { return p == Parity::Even ? "even" : "odd"; }

// Torus product mode amp * f(2pi k x) * g(2pi l y) with f,g in {cos, sin}.
enum class TorusTrig : std::uint8_t { CosCos, CosSin, SinCos, SinSin };

struct TorusMode {
  int k = 0;
  int l = 0;
  TorusTrig trig = TorusTrig::CosCos;
  double amp = 0.0;
};

// Sphere term amp * Pbar_l^m(cos theta) * {cos,sin}(m phi).
struct SphereTerm {
  int m = 0;
  bool sine = false;
  double amp = 0.0;
};

inline const char* torus_trig_name(TorusTrig t) {
  switch (t) {
    case TorusTrig::CosCos: return "cc";
    case TorusTrig::CosSin: return "cs";
    case TorusTrig::SinCos: return "sc";
    case TorusTrig::SinSin: return "ss";
  }
  return "cc";
}

inline TorusTrig torus_trig_from_name(const std::string& s) {
  if (s == "cc") return TorusTrig::CosCos;
  if (s == "cs") return TorusTrig::CosSin;
  if (s == "sc") return TorusTrig::SinCos;
  if (s == "ss") return TorusTrig::SinSin;
  throw io_error("unknown torus trig tag '" + s + "'");
}

// A Laplace eigenfunction given by an explicit finite mode sum. lambda is the
// frequency: the eigenvalue of -Laplace is lambda^2.
struct Eigenfunction {
  SurfaceKind surface = SurfaceKind::FlatTorus;
  double lambda = 0.0;
  Parity parity = Parity::Even;
  std::string id;
  int level = 0;  // torus: n with lambda = 2pi sqrt(n); sphere: degree l
  bool ensemble = false;

  std::vector<TorusMode> torus_modes;
  std::vector<SphereTerm> sphere_terms;

  double value(const Vec2& p) const {
    if (surface == SurfaceKind::FlatTorus) {
      double s = 0.0;
      for (const auto& m : torus_modes) {
        const double tx = kTwoPi * m.k * p.a;
        const double ty = kTwoPi * m.l * p.b;
        const bool sx = m.trig == TorusTrig::SinCos || m.trig == TorusTrig::SinSin;
        const bool sy = m.trig == TorusTrig::CosSin || m.trig == TorusTrig::SinSin;
        s += m.amp * (sx ? std::sin(tx) : std::cos(tx)) * (sy ? std::sin(ty) : std::cos(ty));
      }
      return s;
    }
    const double x = std::cos(p.a);
    double s = 0.0;
    for (const auto& t : sphere_terms) {
      const double ang = t.m * p.b;
      s += t.amp * legendre_pbar(level, t.m, x) * (t.sine ? std::sin(ang) : std::cos(ang));
    }
    return s;
  }

  // plain coordinate partials (du/dx, du/dy) or (du/dtheta, du/dphi);
  // sphere gradients require sin(theta) > 0
  Vec2 gradient(const Vec2& p) const {
    if (surface == SurfaceKind::FlatTorus) {
      double ga = 0.0, gb = 0.0;
      for (const auto& m : torus_modes) {
        const double tx = kTwoPi * m.k * p.a;
        const double ty = kTwoPi * m.l * p.b;
        const bool sx = m.trig == TorusTrig::SinCos || m.trig == TorusTrig::SinSin;
        const bool sy = m.trig == TorusTrig::CosSin || m.trig == TorusTrig::SinSin;
        const double fx = sx ? std::sin(tx) : std::cos(tx);
        const double fy = sy ? std::sin(ty) : std::cos(ty);
        const double dfx = kTwoPi * m.k * (sx ? std::cos(tx) : -std::sin(tx));
        const double dfy = kTwoPi * m.l * (sy ? std::cos(ty) : -std::sin(ty));
        ga += m.amp * dfx * fy;
        gb += m.amp * fx * dfy;
      }
      return {ga, gb};
    }
    double ga = 0.0, gb = 0.0;
    const double x = std::cos(p.a);
    for (const auto& t : sphere_terms) {
      const double ang = t.m * p.b;
      const double pb = legendre_pbar(level, t.m, x);
      const double dpb = legendre_pbar_dtheta(level, t.m, p.a);
      const double f = t.sine ? std::sin(ang) : std::cos(ang);
      const double df = t.m * (t.sine ? std::cos(ang) : -std::sin(ang));
      ga += t.amp * dpb * f;
      gb += t.amp * pb * df;
    }
    return {ga, gb};
  }

  // value at a pole of the sphere; only zonal terms contribute
  double pole_value(bool north) const {
    if (surface != SurfaceKind::RoundSphere) throw mode_error("poles exist only on the sphere");
    double s = 0.0;
    for (const auto& t : sphere_terms)
      if (t.m == 0 && !t.sine) s += t.amp * legendre_pbar(level, 0, north ? 1.0 : -1.0);
    return s;
  }
};

// All integer lattice points with |k|^2 = n, lexicographic order.
inline std::vector<std::pair<int, int>> lattice_points(int n) {
  if (n < 0) throw mode_error("lattice level must be nonnegative");
  std::vector<std::pair<int, int>> pts;
  const int r = static_cast<int>(std::lround(std::floor(std::sqrt(double(n)))));
  for (int a = -r; a <= r; ++a) {
    const long long rem = static_cast<long long>(n) - static_cast<long long>(a) * a;
    const int b = static_cast<int>(std::lround(std::sqrt(double(rem))));
    if (static_cast<long long>(b) * b == rem) {
      if (b == 0)
        pts.emplace_back(a, 0);
      else {
        pts.emplace_back(a, -b);
        pts.emplace_back(a, b);
      }
    }
  }
  std::sort(pts.begin(), pts.end());
  return pts;
}

inline double torus_lambda(int n) { return kTwoPi * std::sqrt(double(n)); }
inline double sphere_lambda(int l) { return std::sqrt(double(l) * (l + 1.0)); }

// L2-normalized single product mode on the torus.
inline Eigenfunction torus_mode(int k, int l, TorusTrig trig) {
  if (k < 0 || l < 0) throw mode_error("mode indices must be nonnegative");
  const bool sx = trig == TorusTrig::SinCos || trig == TorusTrig::SinSin;
  const bool sy = trig == TorusTrig::CosSin || trig == TorusTrig::SinSin;
  if (k == 0 && sx) throw mode_error("sin factor with k = 0 vanishes identically");
  if (l == 0 && sy) throw mode_error("sin factor with l = 0 vanishes identically");
  Eigenfunction u;
  u.surface = SurfaceKind::FlatTorus;
  u.level = k * k + l * l;
  u.lambda = torus_lambda(u.level);
  u.parity = sy ? Parity::Odd : Parity::Even;
  double amp = 1.0;
  if (k > 0) amp *= std::sqrt(2.0);
  if (l > 0) amp *= std::sqrt(2.0);
  u.torus_modes.push_back({k, l, trig, amp});
  u.id = std::string("torus-") + torus_trig_name(trig) + "-" + std::to_string(k) + "-" +
         std::to_string(l);
  return u;
}

// L2-normalized spherical harmonic Pbar_l^m (cos or sin longitude factor).
inline Eigenfunction sphere_mode(int l, int m, bool sine) {
  if (l < 0 || m < 0 || m > l) throw mode_error("need 0 <= m <= l");
  if (m == 0 && sine) throw mode_error("sin factor with m = 0 vanishes identically");
  Eigenfunction u;
  u.surface = SurfaceKind::RoundSphere;
  u.level = l;
  u.lambda = sphere_lambda(l);
  u.parity = sine ? Parity::Odd : Parity::Even;
  const double amp = (m == 0) ? 1.0 : std::sqrt(2.0);
  u.sphere_terms.push_back({m, sine, amp});
  u.id = "sphere-y-" + std::to_string(l) + "-" + std::to_string(m) + (sine ? "-sin" : "-cos");
  return u;
}

struct EnsembleSpec {
  SurfaceKind surface = SurfaceKind::FlatTorus;
  int level = 25;  // torus: n = |k|^2; sphere: degree l
  Parity parity = Parity::Even;
  std::uint64_t seed = 0;

  std::string canonical() const {
    std::ostringstream os;
    os << (surface == SurfaceKind::FlatTorus ? "torus-shell-" : "sphere-level-") << level << "-"
       << parity_name(parity);
    return os.str();
  }
};

// Orthonormal basis of the parity eigenspace, in a fixed deterministic order.
inline std::vector<Eigenfunction> parity_basis(SurfaceKind surface, int level, Parity parity) {
  std::vector<Eigenfunction> basis;
  if (surface == SurfaceKind::FlatTorus) {
    const auto pts = lattice_points(level);
    if (pts.empty() || level == 0)
      throw mode_error("no eigenspace at torus level " + std::to_string(level));
    for (const auto& [a, b] : pts) {
      if (a < 0 || b < 0) continue;  // one representative per sign class
      if (parity == Parity::Even) {
        basis.push_back(torus_mode(a, b, TorusTrig::CosCos));
        if (a > 0) basis.push_back(torus_mode(a, b, TorusTrig::SinCos));
      } else {
        if (b > 0) {
          basis.push_back(torus_mode(a, b, TorusTrig::CosSin));
          if (a > 0) basis.push_back(torus_mode(a, b, TorusTrig::SinSin));
        }
      }
    }
  } else {
    if (level < 1) throw mode_error("sphere ensembles need degree >= 1");
    for (int m = 0; m <= level; ++m) {
      if (parity == Parity::Even)
        basis.push_back(sphere_mode(level, m, false));
      else if (m > 0)
        basis.push_back(sphere_mode(level, m, true));
    }
  }
  if (basis.empty())
    throw mode_error("empty parity eigenspace at level " + std::to_string(level));
  return basis;
}

// Random-sign combination u = B^{-1/2} sum_j eps_j b_j over the parity basis.
// Signs come from a counter RNG keyed by (canonical spec, seed), so any
// (surface, level, parity, seed) quadruple reproduces bit-identical output.
inline Eigenfunction ensemble_eigenfunction(const EnsembleSpec& spec) {
  const auto basis = parity_basis(spec.surface, spec.level, spec.parity);
  counter_rng rng(hash_combine(hash_string(spec.canonical()), spec.seed));
  Eigenfunction u;
  u.surface = spec.surface;
  u.level = spec.level;
  u.lambda = basis.front().lambda;
  u.parity = spec.parity;
  u.ensemble = true;
  u.id = spec.canonical() + "-seed" + std::to_string(spec.seed);
  const double scale = 1.0 / std::sqrt(double(basis.size()));
  for (const auto& b : basis) {
    const double eps = rng.sign() * scale;
    if (spec.surface == SurfaceKind::FlatTorus) {
      auto m = b.torus_modes.front();
      m.amp *= eps;
      u.torus_modes.push_back(m);
    } else {
      auto t = b.sphere_terms.front();
      t.amp *= eps;
      u.sphere_terms.push_back(t);
    }
  }
  return u;
}

// Restriction of u to a curve. Closed curves sample at s_i = i h, open
// segments at midpoints s_i = (i + 1/2) h; h = length / count.
struct CurveSamples {
  std::vector<double> values;
  double spacing = 0.0;
  double length = 0.0;
  bool closed = true;
};

inline void require_curve_resolution(double lambda, double length, int samples) {
  const double needed = 16.0 * lambda * length / kTwoPi;
  if (samples < needed)
    throw resolution_error("need at least " + std::to_string(static_cast<int>(std::ceil(needed))) +
                           " samples along this curve");
}

inline CurveSamples restrict_to_curve(const Eigenfunction& u, const CurveSegment& seg,
                                      int samples) {
  if (u.surface != seg.surface) throw mode_error("curve does not lie on this surface");
  if (samples < 2) throw resolution_error("need at least 2 samples");
  require_curve_resolution(u.lambda, seg.length, samples);
  CurveSamples out;
  out.length = seg.length;
  out.closed = seg.closed;
  out.spacing = seg.length / samples;
  out.values.resize(samples);
  const double off = seg.closed ? 0.0 : 0.5;
  for (int i = 0; i < samples; ++i) out.values[i] = u.value(seg.point((i + off) * out.spacing));
  return out;
}

// Samples of lambda^{-1} d_n u along the curve, with n the chart normal:
// +y on torus circles, +phi on meridians, the y > 0 side on the closed
// sphere circle.
inline CurveSamples normal_derivative_on_curve(const Eigenfunction& u, const CurveSegment& seg,
                                               int samples) {
  if (u.surface != seg.surface) throw mode_error("curve does not lie on this surface");
  if (samples < 2) throw resolution_error("need at least 2 samples");
  require_curve_resolution(u.lambda, seg.length, samples);
  CurveSamples out;
  out.length = seg.length;
  out.closed = seg.closed;
  out.spacing = seg.length / samples;
  out.values.resize(samples);
  const double off = seg.closed ? 0.0 : 0.5;
  for (int i = 0; i < samples; ++i) {
    const double s = (i + off) * out.spacing;
    const Vec2 p = seg.point(s);
    double dn = 0.0;
    switch (seg.kind) {
      case CurveKind::TorusCircle: dn = u.gradient(p).b; break;
      case CurveKind::SphereMeridian: dn = u.gradient(p).b / std::sin(p.a); break;
      case CurveKind::SphereGreatCircle: {
        if (p.a < 1e-9 || p.a > kPi - 1e-9) {
          // pole sample: d_n u along +y; only m = 1 sine terms survive,
          // with Pbar_l^1(cos t)/sin t -> nbar l(l+1)/2 (times (-1)^{l+1}
          // at the south pole)
          const bool north = p.a < kPi / 2;
          const int l = u.level;
          const double nbar = std::sqrt((2.0 * l + 1.0) / (4.0 * kPi * l * (l + 1.0)));
          double ratio = nbar * l * (l + 1.0) / 2.0;
          if (!north && l % 2 == 0) ratio = -ratio;
          double acc = 0.0;
          for (const auto& t : u.sphere_terms)
            if (t.m == 1 && t.sine) acc += t.amp * ratio;
          dn = acc;
        } else {
          const double sign = (wrap_two_pi(s) <= kPi) ? 1.0 : -1.0;
          dn = sign * u.gradient(p).b / std::sin(p.a);
        }
        break;
      }
    }
    out.values[i] = dn / u.lambda;
  }
  return out;
}

// ---- text manifest ----------------------------------------------------

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string render_manifest(const Eigenfunction& u) {
  std::ostringstream os;
  os << "lab-eigenfunction v1\n";
  os << "surface " << (u.surface == SurfaceKind::FlatTorus ? "torus" : "sphere") << "\n";
  os << "id " << u.id << "\n";
  os << "level " << u.level << "\n";
  os << "lambda " << format_g17(u.lambda) << "\n";
  os << "parity " << parity_name(u.parity) << "\n";
  os << "class " << (u.ensemble ? "ensemble" : "explicit") << "\n";
  if (u.surface == SurfaceKind::FlatTorus) {
    os << "terms " << u.torus_modes.size() << "\n";
    for (const auto& m : u.torus_modes)
      os << "term " << torus_trig_name(m.trig) << " " << m.k << " " << m.l << " "
         << format_g17(m.amp) << "\n";
  } else {
    os << "terms " << u.sphere_terms.size() << "\n";
    for (const auto& t : u.sphere_terms)
      os << "term " << (t.sine ? "sin" : "cos") << " " << t.m << " " << format_g17(t.amp) << "\n";
  }
  return os.str();
}

inline Eigenfunction parse_manifest(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "lab-eigenfunction v1")
    throw io_error("manifest header missing or unsupported");
  Eigenfunction u;
  std::size_t expected_terms = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "surface") {
      std::string s;
      ls >> s;
      u.surface = surface_by_name(s).kind;
    } else if (key == "id") {
      ls >> u.id;
    } else if (key == "level") {
      ls >> u.level;
    } else if (key == "lambda") {
      ls >> u.lambda;
    } else if (key == "parity") {
      std::string s;
      ls >> s;
      if (s != "even" && s != "odd") throw io_error("bad parity '" + s + "'");
      u.parity = (s == "even") ? Parity::Even : Parity::Odd;
    } else if (key == "class") {
      std::string s;
      ls >> s;
      if (s != "ensemble" && s != "explicit") throw io_error("bad class '" + s + "'");
      u.ensemble = s == "ensemble";
    } else if (key == "terms") {
      ls >> expected_terms;
    } else if (key == "term") {
      if (u.surface == SurfaceKind::FlatTorus) {
        std::string trig;
        TorusMode m;
        ls >> trig >> m.k >> m.l >> m.amp;
        m.trig = torus_trig_from_name(trig);
        u.torus_modes.push_back(m);
      } else {
        std::string lon;
        SphereTerm t;
        ls >> lon >> t.m >> t.amp;
        if (lon != "sin" && lon != "cos") throw io_error("bad longitude tag '" + lon + "'");
        t.sine = lon == "sin";
        u.sphere_terms.push_back(t);
      }
      if (ls.fail()) throw io_error("malformed term line: " + line);
    } else {
      throw io_error("unknown manifest key '" + key + "'");
    }
  }
  const std::size_t have =
      (u.surface == SurfaceKind::FlatTorus) ? u.torus_modes.size() : u.sphere_terms.size();
  if (have != expected_terms) throw io_error("manifest term count mismatch");
  if (have == 0) throw io_error("manifest has no terms");
  return u;
}

// Max relative residual of the five-point (torus) or spherical (sphere)
// discrete Laplacian against lambda^2 u, over an offset grid. Second order
// in the grid spacing; used as a cross-check that mode sums really are
// eigenfunctions.
inline double laplacian_residual(const Eigenfunction& u, int resolution) {
  if (resolution < 8) throw resolution_error("need at least an 8-node grid");
  const double lam2 = u.lambda * u.lambda;
  double worst = 0.0, umax = 0.0;
  if (u.surface == SurfaceKind::FlatTorus) {
    const int R = resolution;
    const double h = 1.0 / R;
    for (int i = 0; i < R; ++i)
      for (int j = 0; j < R; ++j) {
        const double x = (i + 0.5) * h, y = (j + 0.5) * h;
        const double c = u.value({x, y});
        const double lap = (u.value({x + h, y}) + u.value({x - h, y}) + u.value({x, y + h}) +
                            u.value({x, y - h}) - 4 * c) /
                           (h * h);
        worst = std::max(worst, std::abs(lap + lam2 * c));
        umax = std::max(umax, std::abs(c));
      }
  } else {
    // polar caps excluded: the cot(theta) drift amplifies difference error
    // there and would mask the O(h^2) interior behavior
    const int R = resolution;
    const double ht = kPi / R, hp = kTwoPi / (2 * R);
    const int cap = std::max(1, static_cast<int>(std::ceil(0.2 / ht)));
    for (int i = cap; i + cap < R; ++i)
      for (int j = 0; j < 2 * R; ++j) {
        const double th = (i + 0.5) * ht, ph = (j + 0.5) * hp;
        const double c = u.value({th, ph});
        const double utt =
            (u.value({th + ht, ph}) - 2 * c + u.value({th - ht, ph})) / (ht * ht);
        const double ut = (u.value({th + ht, ph}) - u.value({th - ht, ph})) / (2 * ht);
        const double upp =
            (u.value({th, ph + hp}) - 2 * c + u.value({th, ph - hp})) / (hp * hp);
        const double s = std::sin(th);
        const double lap = utt + ut * std::cos(th) / s + upp / (s * s);
        worst = std::max(worst, std::abs(lap + lam2 * c));
        umax = std::max(umax, std::abs(c));
      }
  }
  return worst / (lam2 * umax);
}

}  // namespace lab
