#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "lab/errors.hpp"
#include "lab/geometry.hpp"
#include "lab/spectra.hpp"

namespace lab {

// zero band is relative to max|u|: explicit modes are exact trig/Legendre
// sums, ensembles carry rounding noise from cancellation
inline double default_zero_band(const Eigenfunction& u) { return u.ensemble ? 1e-6 : 1e-9; }

// smallest admissible grid resolution: at least 16 nodes per wavelength
// across the widest coordinate extent, rounded up to even so the fixed
// locus falls on cell boundaries
inline int required_nodal_resolution(const SurfaceModel& m, double lambda) {
  int r = static_cast<int>(std::ceil(16.0 * lambda * m.diameter));
  r = std::max(r, 16);
  if (r % 2 != 0) ++r;
  return r;
}

// Offset-grid samples of u. Rows follow the first coordinate (x or theta),
// columns the second; nodes sit at cell centers so they avoid Fix(tau) and
// the poles.
struct GridValues {
  int rows = 0;
  int cols = 0;
  std::vector<double> vals;
  double vmax = 0.0;
  bool has_poles = false;
  double north = 0.0, south = 0.0;

  double at(int a, int b) const { return vals[static_cast<std::size_t>(a) * cols + b]; }
};

inline GridValues sample_grid(const SurfaceModel& m, const Eigenfunction& u, int resolution) {
  if (u.surface != m.kind) throw mode_error("eigenfunction does not live on this surface");
  if (resolution < 16 || resolution % 2 != 0)
    throw resolution_error("grid resolution must be even and at least 16");
  GridValues g;
  if (m.kind == SurfaceKind::FlatTorus) {
    const int R = resolution;
    g.rows = g.cols = R;
    g.vals.resize(static_cast<std::size_t>(R) * R);
    // factor cache: per-term row factor in x and column factor in y
    const std::size_t T = u.torus_modes.size();
    std::vector<double> fx(T * R), fy(T * R);
    for (std::size_t t = 0; t < T; ++t) {
      const auto& md = u.torus_modes[t];
      const bool sx = md.trig == TorusTrig::SinCos || md.trig == TorusTrig::SinSin;
      const bool sy = md.trig == TorusTrig::CosSin || md.trig == TorusTrig::SinSin;
      for (int i = 0; i < R; ++i) {
        const double ax = kTwoPi * md.k * (i + 0.5) / R;
        const double ay = kTwoPi * md.l * (i + 0.5) / R;
        fx[t * R + i] = md.amp * (sx ? std::sin(ax) : std::cos(ax));
        fy[t * R + i] = sy ? std::sin(ay) : std::cos(ay);
      }
    }
    for (int i = 0; i < R; ++i)
      for (int j = 0; j < R; ++j) {
        double s = 0.0;
        for (std::size_t t = 0; t < T; ++t) s += fx[t * R + i] * fy[t * R + j];
        g.vals[static_cast<std::size_t>(i) * R + j] = s;
        g.vmax = std::max(g.vmax, std::abs(s));
      }
  } else {
    const int R = resolution, C = 2 * resolution;
    g.rows = R;
    g.cols = C;
    g.vals.resize(static_cast<std::size_t>(R) * C);
    g.has_poles = true;
    g.north = u.pole_value(true);
    g.south = u.pole_value(false);
    g.vmax = std::max(std::abs(g.north), std::abs(g.south));
    const std::size_t T = u.sphere_terms.size();
    std::vector<double> lon(T * C), leg(T);
    for (std::size_t t = 0; t < T; ++t) {
      const auto& tm = u.sphere_terms[t];
      for (int j = 0; j < C; ++j) {
        const double ang = tm.m * (j + 0.5) * kTwoPi / C;
        lon[t * C + j] = tm.sine ? std::sin(ang) : std::cos(ang);
      }
    }
    for (int i = 0; i < R; ++i) {
      const double x = std::cos((i + 0.5) * kPi / R);
      for (std::size_t t = 0; t < T; ++t)
        leg[t] = u.sphere_terms[t].amp * legendre_pbar(u.level, u.sphere_terms[t].m, x);
      for (int j = 0; j < C; ++j) {
        double s = 0.0;
        for (std::size_t t = 0; t < T; ++t) s += leg[t] * lon[t * C + j];
        g.vals[static_cast<std::size_t>(i) * C + j] = s;
        g.vmax = std::max(g.vmax, std::abs(s));
      }
    }
  }
  return g;
}

// Per-node sign in {-1, 0, +1}; nodes inside the zero band are 0 and never
// join any domain.
struct SignGrid {
  int rows = 0;
  int cols = 0;
  std::vector<std::int8_t> sign;
  double vmax = 0.0;
  double band = 0.0;  // absolute threshold used
  bool has_poles = false;
  std::int8_t north = 0, south = 0;

  std::int8_t at(int a, int b) const { return sign[static_cast<std::size_t>(a) * cols + b]; }
};

inline SignGrid sign_grid_from(const GridValues& g, double rel_band) {
  SignGrid s;
  s.rows = g.rows;
  s.cols = g.cols;
  s.vmax = g.vmax;
  s.band = rel_band * g.vmax;
  s.has_poles = g.has_poles;
  s.sign.resize(g.vals.size());
  auto classify = [&](double v) -> std::int8_t {
    if (std::abs(v) <= s.band) return 0;
    return v > 0 ? 1 : -1;
  };
  for (std::size_t i = 0; i < g.vals.size(); ++i) s.sign[i] = classify(g.vals[i]);
  if (g.has_poles) {
    s.north = classify(g.north);
    s.south = classify(g.south);
  }
  return s;
}

inline SignGrid build_sign_grid(const SurfaceModel& m, const Eigenfunction& u, int resolution,
                                double rel_band = -1.0) {
  const GridValues g = sample_grid(m, u, resolution);
  return sign_grid_from(g, rel_band < 0 ? default_zero_band(u) : rel_band);
}

namespace detail {

// flood fill over same-nonzero-sign 4-neighbor nodes; fix_blocked cuts the
// column edges crossing Fix(tau) and detaches the poles
inline int fill_components(const SurfaceModel& m, const SignGrid& s, bool fix_blocked) {
  const int R = s.rows, C = s.cols;
  const bool torus = m.kind == SurfaceKind::FlatTorus;
  const bool use_poles = s.has_poles && !fix_blocked;
  const int north_id = R * C, south_id = R * C + 1;
  const int total = R * C + (use_poles ? 2 : 0);
  std::vector<int> label(total, -1);
  // stepping from column b to b+1 crosses Fix at the wrapped coordinate 0
  // (b == C-1) or at the half turn (b == C/2-1)
  auto blocked_col_step = [&](int b) { return b == C - 1 || b == C / 2 - 1; };
  auto sign_of = [&](int id) -> std::int8_t {
    if (use_poles && id == north_id) return s.north;
    if (use_poles && id == south_id) return s.south;
    return s.sign[id];
  };
  std::vector<int> stack;
  int comps = 0;
  for (int start = 0; start < total; ++start) {
    if (label[start] >= 0 || sign_of(start) == 0) continue;
    const std::int8_t sgn = sign_of(start);
    label[start] = comps;
    stack.push_back(start);
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      auto visit = [&](int id) {
        if (label[id] < 0 && sign_of(id) == sgn) {
          label[id] = comps;
          stack.push_back(id);
        }
      };
      if (cur == north_id && use_poles) {
        for (int j = 0; j < C; ++j) visit(j);
        continue;
      }
      if (cur == south_id && use_poles) {
        for (int j = 0; j < C; ++j) visit((R - 1) * C + j);
        continue;
      }
      const int a = cur / C, b = cur % C;
      if (torus) {
        visit(((a + 1) % R) * C + b);
        visit(((a + R - 1) % R) * C + b);
      } else {
        if (a + 1 < R)
          visit((a + 1) * C + b);
        else if (use_poles)
          visit(south_id);
        if (a > 0)
          visit((a - 1) * C + b);
        else if (use_poles)
          visit(north_id);
      }
      if (!(fix_blocked && blocked_col_step(b))) visit(a * C + (b + 1) % C);
      const int bm = (b + C - 1) % C;
      if (!(fix_blocked && blocked_col_step(bm))) visit(a * C + bm);
    }
    ++comps;
  }
  return comps;
}

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(int n) : parent(n) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[a] = b;
  }
};

}  // namespace detail

// nodal domain count at a fixed resolution
inline int count_nodal_domains(const SurfaceModel& m, const Eigenfunction& u, int resolution) {
  if (resolution < required_nodal_resolution(m, u.lambda))
    throw resolution_error("resolution below the wavelength-resolving bound " +
                           std::to_string(required_nodal_resolution(m, u.lambda)));
  const SignGrid s = build_sign_grid(m, u, resolution);
  return detail::fill_components(m, s, false);
}

// ---- sign changes along a curve -------------------------------------------

inline int count_sign_changes_on_segment(const CurveSamples& trace, double rel_band = 1e-9) {
  double vmax = 0.0;
  for (double v : trace.values) vmax = std::max(vmax, std::abs(v));
  const double band = rel_band * vmax;
  std::vector<std::int8_t> runs;  // signs of maximal out-of-band runs
  for (double v : trace.values) {
    if (std::abs(v) <= band) continue;
    const std::int8_t sg = v > 0 ? 1 : -1;
    if (runs.empty() || runs.back() != sg) runs.push_back(sg);
  }
  if (runs.empty()) throw degenerate_trace_error("trace lies inside the zero band");
  int changes = static_cast<int>(runs.size()) - 1;
  if (trace.closed && runs.size() > 1 && runs.front() != runs.back()) ++changes;
  return changes;
}

// arclength positions of the sign changes of u along seg, bisection refined
inline std::vector<double> crossing_positions(const Eigenfunction& u, const CurveSegment& seg,
                                              int samples, double band_abs) {
  const double off = seg.closed ? 0.0 : 0.5;
  const double h = seg.length / samples;
  const double L = seg.length;
  auto val = [&](double sp) {
    if (seg.closed && sp >= L) sp -= L;
    return u.value(seg.point(sp));
  };
  std::vector<double> sv(samples), vv(samples);
  for (int i = 0; i < samples; ++i) {
    sv[i] = (i + off) * h;
    vv[i] = val(sv[i]);
  }
  std::vector<int> live;  // indices of out-of-band samples
  for (int i = 0; i < samples; ++i)
    if (std::abs(vv[i]) > band_abs) live.push_back(i);
  std::vector<double> out;
  if (live.size() < 2) return out;
  const std::size_t pairs = seg.closed ? live.size() : live.size() - 1;
  for (std::size_t k = 0; k < pairs; ++k) {
    const int i = live[k];
    const int j = live[(k + 1) % live.size()];
    if (vv[i] * vv[j] > 0) continue;
    double lo = sv[i];
    double hi = k + 1 < live.size() ? sv[j] : sv[j] + L;
    double flo = vv[i];
    for (int it = 0; it < 100 && hi - lo > 1e-14 * L; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = val(mid);
      if ((flo > 0) == (fm > 0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    double root = 0.5 * (lo + hi);
    if (seg.closed && root >= L) root -= L;
    out.push_back(root);
  }
  return out;
}

// ---- marching squares ------------------------------------------------------

struct Polyline {
  std::vector<Vec2> points;
  bool closed = false;
};

struct PolylineSet {
  std::vector<Polyline> lines;
  int degenerate_cells = 0;
};

namespace detail {

struct EdgeKey {
  std::uint8_t dir;  // 0: edge along the row coordinate, 1: along the column
  int a, b;
  bool operator<(const EdgeKey& o) const {
    return std::tie(dir, a, b) < std::tie(o.dir, o.a, o.b);
  }
  bool operator==(const EdgeKey& o) const { return dir == o.dir && a == o.a && b == o.b; }
};

inline PolylineSet extract_from_grid(const SurfaceModel& m, const GridValues& g, double band) {
  const bool torus = m.kind == SurfaceKind::FlatTorus;
  const int R = g.rows, C = g.cols;
  const double ha = torus ? 1.0 / R : kPi / R;
  const double hb = torus ? 1.0 / C : kTwoPi / C;
  auto node_a = [&](int a) { return (a + 0.5) * ha; };
  auto node_b = [&](int b) { return (b + 0.5) * hb; };

  PolylineSet out;
  struct Seg {
    EdgeKey e0, e1;
  };
  std::vector<Seg> segs;
  std::map<EdgeKey, Vec2> points;
  std::map<EdgeKey, std::array<int, 2>> incident;
  auto attach = [&](const EdgeKey& k, int idx) {
    auto it = incident.find(k);
    if (it == incident.end())
      incident.emplace(k, std::array<int, 2>{idx, -1});
    else
      it->second[1] = idx;
  };

  const int arows = torus ? R : R - 1;
  for (int a = 0; a < arows; ++a) {
    const int a1 = (a + 1) % R;
    for (int b = 0; b < C; ++b) {
      const int b1 = (b + 1) % C;
      const double v00 = g.at(a, b), v10 = g.at(a1, b), v01 = g.at(a, b1), v11 = g.at(a1, b1);
      const bool z00 = std::abs(v00) <= band, z10 = std::abs(v10) <= band,
                 z01 = std::abs(v01) <= band, z11 = std::abs(v11) <= band;
      if (z00 && z10 && z01 && z11) {
        ++out.degenerate_cells;
        continue;
      }
      // zero corners count as positive so the contour passes next to them
      const int s00 = (z00 || v00 > 0) ? 1 : 0;
      const int s10 = (z10 || v10 > 0) ? 1 : 0;
      const int s11 = (z11 || v11 > 0) ? 1 : 0;
      const int s01 = (z01 || v01 > 0) ? 1 : 0;
      const int config = s00 | (s10 << 1) | (s11 << 2) | (s01 << 3);
      if (config == 0 || config == 15) continue;
      auto lerp = [](double va, double vb) {
        const double d = va - vb;
        return d == 0.0 ? 0.5 : va / d;
      };
      const EdgeKey ea0{0, a, b};   // (a,b)-(a1,b)
      const EdgeKey ea1{0, a, b1};  // (a,b1)-(a1,b1)
      const EdgeKey e0b{1, a, b};   // (a,b)-(a,b1)
      const EdgeKey e1b{1, a1, b};  // (a1,b)-(a1,b1)
      auto put = [&](const EdgeKey& k, const Vec2& p) {
        if (!points.count(k)) points[k] = p;
      };
      if (s00 != s10) put(ea0, {node_a(a) + lerp(v00, v10) * ha, node_b(b)});
      if (s01 != s11) put(ea1, {node_a(a) + lerp(v01, v11) * ha, node_b(b1)});
      if (s00 != s01) put(e0b, {node_a(a), node_b(b) + lerp(v00, v01) * hb});
      if (s10 != s11) put(e1b, {node_a(a1), node_b(b) + lerp(v10, v11) * hb});
      auto add = [&](const EdgeKey& k0, const EdgeKey& k1) {
        const int idx = static_cast<int>(segs.size());
        segs.push_back({k0, k1});
        attach(k0, idx);
        attach(k1, idx);
      };
      switch (config) {
        case 1: case 14: add(ea0, e0b); break;
        case 2: case 13: add(ea0, e1b); break;
        case 4: case 11: add(e1b, ea1); break;
        case 8: case 7: add(e0b, ea1); break;
        case 3: case 12: add(e0b, e1b); break;
        case 6: case 9: add(ea0, ea1); break;
        case 5: case 10: {
          // saddle: the cell average picks the pairing; an average inside
          // the zero band means two nodal lines cross here, so the contour
          // runs straight through in both directions
          const double vc = 0.25 * (v00 + v10 + v01 + v11);
          if (std::abs(vc) <= band) {
            add(ea0, ea1);
            add(e0b, e1b);
          } else if ((config == 5) == (vc > 0)) {
            add(ea0, e1b);
            add(e0b, ea1);
          } else {
            add(ea0, e0b);
            add(e1b, ea1);
          }
          break;
        }
        default: break;
      }
    }
  }

  // chain segments into polylines: every grid edge carries at most one
  // crossing shared by its two cells, so each edge joins at most two segments
  auto other_seg = [&](const EdgeKey& k, int seg) {
    const auto& pr = incident.at(k);
    if (pr[0] != seg && pr[0] >= 0) return pr[0];
    return pr[1] == seg ? -1 : pr[1];
  };
  std::vector<char> used(segs.size(), 0);
  for (std::size_t start = 0; start < segs.size(); ++start) {
    if (used[start]) continue;
    // walk backward from the start segment to an endpoint or around a loop
    int cur = static_cast<int>(start);
    EdgeKey tail = segs[start].e0;
    while (true) {
      const int prev = other_seg(tail, cur);
      if (prev < 0 || prev == static_cast<int>(start)) break;
      tail = segs[prev].e0 == tail ? segs[prev].e1 : segs[prev].e0;
      cur = prev;
    }
    const EdgeKey head = tail;
    Polyline line;
    line.points.push_back(points[tail]);
    int seg = cur;
    EdgeKey at = tail;
    while (seg >= 0 && !used[seg]) {
      used[seg] = 1;
      at = segs[seg].e0 == at ? segs[seg].e1 : segs[seg].e0;
      line.points.push_back(points[at]);
      seg = other_seg(at, seg);
    }
    line.closed = line.points.size() > 3 && at == head;
    if (line.closed) line.points.pop_back();
    if (line.points.size() >= 2) out.lines.push_back(std::move(line));
  }
  return out;
}

}  // namespace detail

inline PolylineSet extract_nodal_set(const SurfaceModel& m, const Eigenfunction& u,
                                     int resolution) {
  if (resolution < required_nodal_resolution(m, u.lambda))
    throw resolution_error("resolution below the wavelength-resolving bound " +
                           std::to_string(required_nodal_resolution(m, u.lambda)));
  const GridValues g = sample_grid(m, u, resolution);
  return detail::extract_from_grid(m, g, default_zero_band(u) * g.vmax);
}

inline std::string render_polylines(const PolylineSet& set) {
  std::ostringstream os;
  for (std::size_t i = 0; i < set.lines.size(); ++i) {
    const auto& line = set.lines[i];
    os << "# path " << i << " closed=" << (line.closed ? 1 : 0)
       << " points=" << line.points.size() << "\n";
    const std::size_t n = line.points.size();
    const std::size_t last = line.closed ? n : n - 1;
    for (std::size_t j = 0; j < last; ++j) {
      const auto& p = line.points[j];
      const auto& q = line.points[(j + 1) % n];
      os << format_g17(p.a) << " " << format_g17(p.b) << " " << format_g17(q.a) << " "
         << format_g17(q.b) << "\n";
    }
  }
  return os.str();
}

// ---- nodal graph ------------------------------------------------------------

enum class VertexKind : std::uint8_t { Marker, Singular, FixCrossing };

struct GraphVertex {
  Vec2 pos;
  VertexKind kind = VertexKind::FixCrossing;
  int degree = 0;
};

struct NodalGraph {
  int genus = 0;
  int vertices = 0;
  int edges = 0;
  int faces = 0;       // components of M minus (Z_u union Fix)
  int components = 0;  // components of Z_u union Fix
  int fix_crossings = 0;
  int singular_points = 0;
  int markers = 0;
  int domains = 0;  // N(u)
  std::vector<GraphVertex> vertex_list;

  int euler_stat() const { return vertices - edges + faces - components; }
  bool euler_ok() const { return euler_stat() >= 1 - 2 * genus; }
};

struct EulerBound {
  int bound = 0;
  bool pass = false;
};

// half the fixed-locus crossing count, rounded up, corrected by the genus;
// pass means the domain count clears it
inline EulerBound euler_lower_bound(const NodalGraph& g) {
  EulerBound b;
  b.bound = (g.fix_crossings + 1) / 2 + 1 - g.genus;
  b.pass = g.domains >= b.bound;
  return b;
}

namespace detail {

inline double distance_to_fix(const SurfaceModel& m, const Vec2& p) {
  if (m.kind == SurfaceKind::FlatTorus) {
    const double d0 = std::abs(wrapped_diff01(p.b, 0.0));
    const double d1 = std::abs(wrapped_diff01(p.b, 0.5));
    return std::min(d0, d1);
  }
  const double v = std::abs(std::sin(p.a) * std::sin(p.b));
  return std::asin(std::min(1.0, v));
}

// metric-normalized gradient of u divided by lambda
inline Vec2 scaled_gradient(const Eigenfunction& u, const Vec2& p) {
  const Vec2 g = u.gradient(p);
  if (u.surface == SurfaceKind::FlatTorus) return {g.a / u.lambda, g.b / u.lambda};
  return {g.a / u.lambda, g.b / (u.lambda * std::sin(p.a))};
}

// Gauss-Newton with Levenberg damping on r(p) = (u, grad u / lambda);
// returns the refined point when the residual certifies a singular zero
inline std::optional<Vec2> refine_singular(const Eigenfunction& u, Vec2 p, double vmax) {
  const double tol = 1e-7 * vmax;
  const double fd = 1e-6;
  auto res = [&](const Vec2& q) {
    const Vec2 g = scaled_gradient(u, q);
    return std::array<double, 3>{u.value(q), g.a, g.b};
  };
  for (int it = 0; it < 60; ++it) {
    const auto r = res(p);
    if (std::abs(r[0]) < tol && std::abs(r[1]) < tol && std::abs(r[2]) < tol) return p;
    const auto ra1 = res({p.a + fd, p.b}), ra0 = res({p.a - fd, p.b});
    const auto rb1 = res({p.a, p.b + fd}), rb0 = res({p.a, p.b - fd});
    double A00 = 0, A01 = 0, A11 = 0, g0 = 0, g1 = 0;
    for (int k = 0; k < 3; ++k) {
      const double Jk0 = (ra1[k] - ra0[k]) / (2 * fd);
      const double Jk1 = (rb1[k] - rb0[k]) / (2 * fd);
      A00 += Jk0 * Jk0;
      A01 += Jk0 * Jk1;
      A11 += Jk1 * Jk1;
      g0 += Jk0 * r[k];
      g1 += Jk1 * r[k];
    }
    const double mu = 1e-10 * (A00 + A11) + 1e-300;
    const double det = (A00 + mu) * (A11 + mu) - A01 * A01;
    if (det <= 0) return std::nullopt;
    p.a -= (g0 * (A11 + mu) - g1 * A01) / det;
    p.b -= (g1 * (A00 + mu) - g0 * A01) / det;
    if (u.surface == SurfaceKind::FlatTorus) {
      p.a = wrap01(p.a);
      p.b = wrap01(p.b);
    } else {
      p.b = wrap_two_pi(p.b);
      if (p.a < 0.05 || p.a > kPi - 0.05) return std::nullopt;  // poles handled separately
    }
  }
  return std::nullopt;
}

inline int circular_run_changes(const std::vector<std::int8_t>& runs) {
  if (runs.empty()) return 0;
  int changes = static_cast<int>(runs.size()) - 1;
  if (runs.size() > 1 && runs.front() != runs.back()) ++changes;
  return changes;
}

// sign changes of u around a circle of radius r about p
inline int ring_sign_changes(const SurfaceModel& m, const Eigenfunction& u, const Vec2& p,
                             double r, double band) {
  const int K = 256;
  std::vector<std::int8_t> runs;
  for (int k = 0; k < K; ++k) {
    const double al = kTwoPi * k / K;
    Vec2 q;
    if (m.kind == SurfaceKind::FlatTorus) {
      q = {wrap01(p.a + r * std::cos(al)), wrap01(p.b + r * std::sin(al))};
    } else {
      q = {p.a + r * std::cos(al), p.b + r * std::sin(al) / std::sin(p.a)};
      if (q.a < 1e-12 || q.a > kPi - 1e-12) continue;
      q.b = wrap_two_pi(q.b);
    }
    const double v = u.value(q);
    if (std::abs(v) <= band) continue;
    const std::int8_t sg = v > 0 ? 1 : -1;
    if (runs.empty() || runs.back() != sg) runs.push_back(sg);
  }
  return circular_run_changes(runs);
}

// sign changes of u around a pole along the latitude circle at distance r
inline int pole_ring_sign_changes(const Eigenfunction& u, bool north, double r, double band) {
  const int K = 256;
  const double theta = north ? r : kPi - r;
  std::vector<std::int8_t> runs;
  for (int k = 0; k < K; ++k) {
    const double v = u.value({theta, kTwoPi * k / K});
    if (std::abs(v) <= band) continue;
    const std::int8_t sg = v > 0 ? 1 : -1;
    if (runs.empty() || runs.back() != sg) runs.push_back(sg);
  }
  return circular_run_changes(runs);
}

// component count of Z_u union Fix(tau): 8-adjacent components of the cells
// carrying either set; the sphere pole caps act as virtual cells so bands
// meeting at a pole are not undercounted
inline int skeleton_components(const SurfaceModel& m, const SignGrid& s) {
  const bool torus = m.kind == SurfaceKind::FlatTorus;
  const int R = s.rows, C = s.cols;
  const int arows = torus ? R : R - 1;
  const int ncells = arows * C;
  const int vnorth = ncells, vsouth = ncells + 1;
  std::vector<char> marked(ncells + (torus ? 0 : 2), 0);
  auto fix_band = [&](int b) { return b == C - 1 || b == C / 2 - 1; };
  for (int a = 0; a < arows; ++a) {
    const int a1 = (a + 1) % R;
    for (int b = 0; b < C; ++b) {
      const int b1 = (b + 1) % C;
      const std::int8_t s00 = s.at(a, b), s10 = s.at(a1, b), s01 = s.at(a, b1),
                        s11 = s.at(a1, b1);
      const bool pure = s00 != 0 && s00 == s10 && s00 == s01 && s00 == s11;
      if (!pure || fix_band(b)) marked[a * C + b] = 1;
    }
  }
  if (!torus) {
    marked[vnorth] = 1;  // Fix passes through both poles
    marked[vsouth] = 1;
  }
  DisjointSet ds(static_cast<int>(marked.size()));
  for (int a = 0; a < arows; ++a)
    for (int b = 0; b < C; ++b) {
      if (!marked[a * C + b]) continue;
      for (int da = 0; da <= 1; ++da)
        for (int db = -1; db <= 1; ++db) {
          if (da == 0 && db <= 0) continue;
          int na = a + da;
          const int nb = (b + db + C) % C;
          if (torus)
            na %= R;
          else if (na >= arows)
            continue;
          if (marked[na * C + nb]) ds.unite(a * C + b, na * C + nb);
        }
    }
  if (!torus) {
    // fix bands always reach the caps; other marked boundary cells join
    // only when the pole itself lies in the zero band
    for (int b = 0; b < C; ++b) {
      if (marked[b] && (fix_band(b) || s.north == 0)) ds.unite(vnorth, b);
      const int last = (arows - 1) * C + b;
      if (marked[last] && (fix_band(b) || s.south == 0)) ds.unite(vsouth, last);
    }
  }
  std::vector<char> seen(marked.size(), 0);
  int comps = 0;
  for (std::size_t i = 0; i < marked.size(); ++i) {
    if (!marked[i]) continue;
    const int root = ds.find(static_cast<int>(i));
    if (!seen[root]) {
      seen[root] = 1;
      ++comps;
    }
  }
  return comps;
}

}  // namespace detail

inline NodalGraph build_nodal_graph(const SurfaceModel& m, const Eigenfunction& u,
                                    int resolution) {
  if (u.surface != m.kind) throw mode_error("eigenfunction does not live on this surface");
  if (resolution < required_nodal_resolution(m, u.lambda))
    throw resolution_error("resolution below the wavelength-resolving bound " +
                           std::to_string(required_nodal_resolution(m, u.lambda)));
  const GridValues gv = sample_grid(m, u, resolution);
  const SignGrid sg = sign_grid_from(gv, default_zero_band(u));
  const double band = sg.band;
  const double vmax = sg.vmax;
  const bool torus = m.kind == SurfaceKind::FlatTorus;
  const double h = torus ? 1.0 / resolution : kPi / resolution;
  const double ring = 0.75 * kPi / u.lambda;

  NodalGraph graph;
  graph.genus = m.genus;
  graph.domains = detail::fill_components(m, sg, false);
  graph.faces = detail::fill_components(m, sg, true);
  graph.components = detail::skeleton_components(m, sg);

  // crossings of the nodal set with each fixed-locus component
  std::vector<Vec2> cross_pts;
  for (const auto& seg : m.fix_components()) {
    const int S =
        std::max(1024, 32 * static_cast<int>(std::ceil(u.lambda * seg.length / kTwoPi)));
    const auto tr = restrict_to_curve(u, seg, S);
    int in_band = 0;
    for (double v : tr.values)
      if (std::abs(v) <= band) ++in_band;
    if (2 * in_band > S)
      throw degenerate_trace_error("zero band covers most of a fixed-locus component");
    for (double sp : crossing_positions(u, seg, S, band)) cross_pts.push_back(seg.point(sp));
  }

  // singular points: a candidate cell has a tiny center value and a tiny
  // scaled gradient, then the certified zero of (u, grad u) is kept
  std::vector<Vec2> singulars;
  const double thr_u = 0.5 * vmax * (u.lambda * h) * (u.lambda * h) + band;
  const double thr_g = vmax * (u.lambda * h);
  const int R = sg.rows, C = sg.cols;
  const int arows = torus ? R : R - 1;
  const double hb = torus ? 1.0 / C : kTwoPi / C;
  for (int a = 0; a < arows; ++a) {
    const int a1 = (a + 1) % R;
    for (int b = 0; b < C; ++b) {
      const int b1 = (b + 1) % C;
      const std::int8_t s00 = sg.at(a, b), s10 = sg.at(a1, b), s01 = sg.at(a, b1),
                        s11 = sg.at(a1, b1);
      if (s00 != 0 && s00 == s10 && s00 == s01 && s00 == s11) continue;
      const Vec2 center{(a + 1.0) * h, (b + 1.0) * hb};
      if (!torus && (center.a < 2 * ring || center.a > kPi - 2 * ring)) continue;
      if (std::abs(u.value(center)) > thr_u) continue;
      const Vec2 grd = detail::scaled_gradient(u, center);
      if (std::hypot(grd.a, grd.b) > thr_g) continue;
      if (auto p = detail::refine_singular(u, center, vmax)) {
        bool dup = false;
        for (const auto& q : singulars)
          if (m.distance(*p, q) < 0.3 * ring) dup = true;
        if (!dup) singulars.push_back(*p);
      }
    }
  }

  // pole vertices where u vanishes; the +2 counts the two fix arcs meeting
  // there, matching the fix-crossing convention
  bool north_vertex = false, south_vertex = false;
  std::vector<GraphVertex> pole_vertices;
  if (!torus) {
    for (bool north : {true, false}) {
      const double pv = north ? gv.north : gv.south;
      if (std::abs(pv) <= band) {
        const int rc = detail::pole_ring_sign_changes(u, north, ring, band);
        pole_vertices.push_back({{north ? 0.0 : kPi, 0.0}, VertexKind::Singular, rc + 2});
        (north ? north_vertex : south_vertex) = true;
      }
    }
  }

  // drop trace crossings that belong to a singular or pole vertex
  std::vector<Vec2> kept;
  for (const auto& cp : cross_pts) {
    bool absorbed = false;
    if (!torus &&
        ((north_vertex && cp.a < 0.5 * ring) || (south_vertex && cp.a > kPi - 0.5 * ring)))
      absorbed = true;
    for (const auto& q : singulars)
      if (m.distance(cp, q) < 0.3 * ring) absorbed = true;
    if (!absorbed) kept.push_back(cp);
  }

  int degree_sum = 0;
  for (const auto& cp : kept) {
    graph.vertex_list.push_back({cp, VertexKind::FixCrossing, 4});
    degree_sum += 4;
  }
  graph.fix_crossings = static_cast<int>(kept.size());
  for (const auto& q : singulars) {
    // the probe ring must isolate the branches through q: shrink it below
    // the distance to every other vertex so their arcs stay outside
    double rq = ring;
    for (const auto& p : singulars)
      if (&p != &q) rq = std::min(rq, 0.45 * m.distance(q, p));
    for (const auto& cp : kept) rq = std::min(rq, 0.45 * m.distance(q, cp));
    int deg = detail::ring_sign_changes(m, u, q, rq, band);
    if (deg < 4) continue;  // a plain zero, not a branching point
    if (detail::distance_to_fix(m, q) < 1e-6) {
      deg += 2;                  // the two fix arcs through the point
      graph.fix_crossings += 1;  // it also lies in Z cap Fix
    }
    graph.vertex_list.push_back({q, VertexKind::Singular, deg});
    degree_sum += deg;
    graph.singular_points += 1;
  }
  for (const auto& pv : pole_vertices) {
    graph.vertex_list.push_back(pv);
    degree_sum += pv.degree;
    graph.singular_points += 1;
    graph.fix_crossings += 1;  // poles lie on Fix
  }

  // markers: closed nodal components disjoint from Fix that carry no other
  // vertex get one degree-2 vertex so they enter the count
  const PolylineSet poly = detail::extract_from_grid(m, gv, band);
  for (const auto& line : poly.lines) {
    if (!line.closed) continue;
    bool disjoint = true;
    for (const auto& p : line.points)
      if (detail::distance_to_fix(m, p) < 2 * h) {
        disjoint = false;
        break;
      }
    if (!disjoint) continue;
    bool has_vertex = false;
    for (const auto& v : graph.vertex_list) {
      for (const auto& p : line.points)
        if (m.distance(p, v.pos) < 2 * h) {
          has_vertex = true;
          break;
        }
      if (has_vertex) break;
    }
    if (has_vertex) continue;
    graph.vertex_list.push_back({line.points.front(), VertexKind::Marker, 2});
    degree_sum += 2;
    graph.markers += 1;
  }

  graph.vertices = static_cast<int>(graph.vertex_list.size());
  graph.edges = degree_sum / 2;
  return graph;
}

// ---- report -----------------------------------------------------------------

struct NodalReport {
  std::string id;
  double lambda = 0.0;
  Parity parity = Parity::Even;
  int resolution = 0;
  int domains = 0;
  int fix_crossings = 0;
  int euler_bound = 0;
  bool euler_pass = false;
  bool stable = false;
  NodalGraph graph;
};

inline NodalReport nodal_report(const SurfaceModel& m, const Eigenfunction& u, int resolution) {
  NodalReport rep;
  rep.id = u.id;
  rep.lambda = u.lambda;
  rep.parity = u.parity;
  rep.resolution = resolution;
  rep.graph = build_nodal_graph(m, u, resolution);
  rep.domains = rep.graph.domains;
  rep.fix_crossings = rep.graph.fix_crossings;
  const EulerBound eb = euler_lower_bound(rep.graph);
  rep.euler_bound = eb.bound;
  rep.euler_pass = eb.pass && rep.graph.euler_ok();
  rep.stable = count_nodal_domains(m, u, 2 * resolution) == rep.domains;
  return rep;
}

inline std::string nodal_csv_header() {
  return "id,lambda,parity,resolution,N,fix_crossings,euler_bound,stable";
}

inline std::string nodal_csv_row(const NodalReport& r) {
  std::ostringstream os;
  os << r.id << "," << format_g17(r.lambda) << "," << parity_name(r.parity) << ","
     << r.resolution << "," << r.domains << "," << r.fix_crossings << "," << r.euler_bound
     << "," << (r.stable ? 1 : 0);
  return os.str();
}

}  // namespace lab
