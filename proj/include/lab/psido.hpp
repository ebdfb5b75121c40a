#pragma once

// Standard quantization on the flat torus. Everything here is a finite
// Fourier sum, so Op(a) is computed exactly at the lattice frequencies
// 2 pi k / lambda; no xi-grid ever appears.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "lab/errors.hpp"
#include "lab/geometry.hpp"
#include "lab/spectra.hpp"

namespace lab {

struct FourierTerm {
  int kx = 0;
  int ky = 0;
  std::complex<double> c;
};

// Finite Fourier sum u(x) = sum c_k e^{2 pi i k.x}.
struct FourierSum {
  std::vector<FourierTerm> terms;

  int max_abs_freq() const {
    int m = 0;
    for (const auto& t : terms) m = std::max({m, std::abs(t.kx), std::abs(t.ky)});
    return m;
  }

  // L2 norm over the unit torus; the exponentials are orthonormal
  double norm() const {
    double s = 0.0;
    for (const auto& t : terms) s += std::norm(t.c);
    return std::sqrt(s);
  }

  std::complex<double> evaluate(const Vec2& p) const {
    std::complex<double> s = 0.0;
    for (const auto& t : terms)
      s += t.c * std::polar(1.0, kTwoPi * (t.kx * p.a + t.ky * p.b));
    return s;
  }
};

namespace detail {

inline void accumulate_term(std::map<std::pair<int, int>, std::complex<double>>& acc,
                            int kx, int ky, std::complex<double> c) {
  if (std::abs(c.real()) + std::abs(c.imag()) == 0.0) return;
  acc[{kx, ky}] += c;
}

}  // namespace detail

// Expand a torus eigenfunction into complex exponentials. Each product
// term amp * trig(2 pi k x) trig(2 pi l y) spreads over the four signed
// frequencies (+-k, +-l).
inline FourierSum to_fourier(const Eigenfunction& u) {
  if (u.surface != SurfaceKind::FlatTorus)
    throw mode_error("fourier expansion is torus-only");
  const std::complex<double> ihalf(0.0, -0.5);  // sin t = -i/2 (e^{it} - e^{-it})
  std::map<std::pair<int, int>, std::complex<double>> acc;
  for (const auto& m : u.torus_modes) {
    const bool sx = m.trig == TorusTrig::SinCos || m.trig == TorusTrig::SinSin;
    const bool sy = m.trig == TorusTrig::CosSin || m.trig == TorusTrig::SinSin;
    for (int sa = 0; sa < (m.k == 0 ? 1 : 2); ++sa) {
      for (int sb = 0; sb < (m.l == 0 ? 1 : 2); ++sb) {
        const double sig_a = sa ? -1.0 : 1.0;
        const double sig_b = sb ? -1.0 : 1.0;
        std::complex<double> w = m.amp;
        w *= (m.k == 0) ? 1.0 : (sx ? sig_a * ihalf : std::complex<double>(0.5));
        w *= (m.l == 0) ? 1.0 : (sy ? sig_b * ihalf : std::complex<double>(0.5));
        detail::accumulate_term(acc, static_cast<int>(sig_a) * m.k,
                                static_cast<int>(sig_b) * m.l, w);
      }
    }
  }
  FourierSum f;
  for (const auto& [key, c] : acc) f.terms.push_back({key.first, key.second, c});
  return f;
}

// Symbol a(x, xi) on the torus cotangent bundle. x_bandwidth declares the
// largest x-frequency the evaluator carries; quadratures size their grids
// from it. The radial window marks symbols supported in r_minus <= |xi| <=
// r_plus.
struct TorusSymbol {
  std::function<double(const Vec2&, const Vec2&)> eval;
  int order = 0;
  bool homogeneous = false;
  int x_bandwidth = 0;
  bool has_radial_window = false;
  double r_minus = 0.0;
  double r_plus = 0.0;

  double operator()(const Vec2& x, const Vec2& xi) const { return eval(x, xi); }
};

inline TorusSymbol multiplier_symbol(std::function<double(const Vec2&)> fn, int order) {
  TorusSymbol a;
  a.eval = [fn = std::move(fn)](const Vec2&, const Vec2& xi) { return fn(xi); };
  a.order = order;
  return a;
}

inline TorusSymbol potential_symbol(std::function<double(const Vec2&)> fn, int x_bandwidth) {
  TorusSymbol a;
  a.eval = [fn = std::move(fn)](const Vec2& x, const Vec2&) { return fn(x); };
  a.order = 0;
  a.x_bandwidth = x_bandwidth;
  return a;
}

inline TorusSymbol xi1_squared_symbol() {
  TorusSymbol a = multiplier_symbol([](const Vec2& xi) { return xi.a * xi.a; }, 2);
  return a;
}

// Smooth radial bump supported on r_minus <= |xi| <= r_plus.
inline TorusSymbol radial_bump_symbol(double r_minus, double r_plus) {
  if (!(0.0 <= r_minus && r_minus < r_plus))
    throw config_error("radial window must satisfy 0 <= r- < r+");
  TorusSymbol a;
  const double c = 0.5 * (r_minus + r_plus);
  const double w = r_plus - r_minus;
  a.eval = [c, w](const Vec2&, const Vec2& xi) {
    const double r = std::sqrt(xi.a * xi.a + xi.b * xi.b);
    const double z = 2.0 * (r - c) / w;
    if (std::abs(z) >= 1.0 - 1e-12) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - z * z));
  };
  a.order = 0;
  a.has_radial_window = true;
  a.r_minus = r_minus;
  a.r_plus = r_plus;
  return a;
}

// a~(x, xi) = a(x, xi/|xi|): the degree-0 homogenization.
inline TorusSymbol homogenized(const TorusSymbol& a) {
  TorusSymbol h;
  h.eval = [inner = a.eval](const Vec2& x, const Vec2& xi) {
    const double r = std::sqrt(xi.a * xi.a + xi.b * xi.b);
    if (!(r > 0.0)) throw config_error("homogenization undefined at xi = 0");
    return inner(x, {xi.a / r, xi.b / r});
  };
  h.order = 0;
  h.homogeneous = true;
  h.x_bandwidth = a.x_bandwidth;
  return h;
}

// Largest violation of degree-0 homogeneity over a fixed sample set; zero
// for genuinely homogeneous symbols.
inline double homogeneity_defect(const TorusSymbol& a) {
  double worst = 0.0;
  for (int ix = 0; ix < 5; ++ix) {
    const Vec2 x{0.17 * ix, 0.09 * ix * ix};
    for (int id = 0; id < 8; ++id) {
      const double th = kTwoPi * id / 8.0 + 0.1;
      const Vec2 xi{std::cos(th), std::sin(th)};
      const double base = a(x, xi);
      for (double t : {2.0, 5.0}) {
        const Vec2 sxi{t * xi.a, t * xi.b};
        worst = std::max(worst, std::abs(a(x, sxi) - base));
      }
    }
  }
  return worst;
}

// Op(a)u on an R x R grid: sum_k a(x, 2 pi k / lambda) c_k e^{2 pi i k.x},
// row-major with x = (i/R, j/R).
inline std::vector<std::complex<double>> quantize_apply(const TorusSymbol& a,
                                                        const FourierSum& u,
                                                        double lambda, int resolution) {
  if (!(lambda > 0.0)) throw config_error("lambda must be positive");
  const int need = 2 * (u.max_abs_freq() + a.x_bandwidth) + 1;
  if (resolution < need)
    throw aliasing_error("grid cannot resolve the mode and symbol frequencies");
  const std::size_t r = static_cast<std::size_t>(resolution);
  std::vector<std::complex<double>> out(r * r, 0.0);
  std::vector<std::complex<double>> col(r), row(r);
  for (const auto& t : u.terms) {
    const Vec2 xi{kTwoPi * t.kx / lambda, kTwoPi * t.ky / lambda};
    for (std::size_t i = 0; i < r; ++i) {
      const double s = static_cast<double>(i) / resolution;
      col[i] = std::polar(1.0, kTwoPi * t.kx * s);
      row[i] = std::polar(1.0, kTwoPi * t.ky * s);
    }
    for (std::size_t i = 0; i < r; ++i) {
      const double x1 = static_cast<double>(i) / resolution;
      for (std::size_t j = 0; j < r; ++j) {
        const Vec2 x{x1, static_cast<double>(j) / resolution};
        out[i * r + j] += a(x, xi) * t.c * col[i] * row[j];
      }
    }
  }
  return out;
}

struct MatrixElementReport {
  double lambda = 0.0;
  double value = 0.0;
  double liouville = 0.0;
  double deviation = 0.0;
};

// Normalized Liouville average of a over S*M: x-average times the uniform
// angular average on |xi| = 1.
inline double liouville_average(const TorusSymbol& a, const SurfaceModel& m) {
  if (m.kind != SurfaceKind::FlatTorus) throw mode_error("quantization is torus-only");
  const int rx = std::max(2 * a.x_bandwidth + 2, 4);
  const int na = 256;
  double acc = 0.0;
  for (int i = 0; i < rx; ++i) {
    for (int j = 0; j < rx; ++j) {
      const Vec2 x{static_cast<double>(i) / rx, static_cast<double>(j) / rx};
      for (int q = 0; q < na; ++q) {
        const double th = kTwoPi * q / na;
        acc += a(x, {std::cos(th), std::sin(th)});
      }
    }
  }
  // grid cells carry measure area/rx^2 * 2pi/na; divide by vol(S*M)
  return acc * (m.area / (rx * rx)) * (kTwoPi / na) / m.liouville_normalizer;
}

// <Op(a) u, u> for a Fourier sum with frequency scale lambda, by exact
// grid quadrature, against the Liouville average.
inline MatrixElementReport matrix_element_fourier(const TorusSymbol& a, const FourierSum& u,
                                                  double lambda) {
  const int res = 2 * (2 * u.max_abs_freq() + a.x_bandwidth) + 2;
  const std::vector<std::complex<double>> op = quantize_apply(a, u, lambda, res);
  const std::size_t r = static_cast<std::size_t>(res);

  std::complex<double> val = 0.0;
  std::vector<std::complex<double>> col(r), row(r);
  for (const auto& t : u.terms) {
    for (std::size_t i = 0; i < r; ++i) {
      const double s = static_cast<double>(i) / res;
      col[i] = std::polar(1.0, kTwoPi * t.kx * s);
      row[i] = std::polar(1.0, kTwoPi * t.ky * s);
    }
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < r; ++j)
        val += op[i * r + j] * std::conj(t.c * col[i] * row[j]);
  }
  val /= static_cast<double>(r * r);

  MatrixElementReport rep;
  rep.lambda = lambda;
  rep.value = val.real();
  rep.liouville = liouville_average(a, make_surface(SurfaceKind::FlatTorus, {}));
  rep.deviation = std::abs(rep.value - rep.liouville);
  return rep;
}

inline MatrixElementReport matrix_element(const TorusSymbol& a, const Eigenfunction& u) {
  if (u.surface != SurfaceKind::FlatTorus) throw mode_error("quantization is torus-only");
  return matrix_element_fourier(a, to_fourier(u), u.lambda);
}

// (1 + eps V) u as Fourier sums: convolution of the coefficient sets.
inline FourierSum modulate(const FourierSum& u, const FourierSum& v, double eps) {
  std::map<std::pair<int, int>, std::complex<double>> acc;
  for (const auto& t : u.terms) detail::accumulate_term(acc, t.kx, t.ky, t.c);
  for (const auto& t : u.terms)
    for (const auto& w : v.terms)
      detail::accumulate_term(acc, t.kx + w.kx, t.ky + w.ky, eps * t.c * w.c);
  FourierSum f;
  for (const auto& [key, c] : acc) f.terms.push_back({key.first, key.second, c});
  return f;
}

struct CutoffReport {
  double norm_ratio = 0.0;  // ||Op(a)u|| / ||u||
  double lambda = 0.0;
};

// Frequency-cutoff check: a supported away from the unit shell kills exact
// eigenfunctions identically; quasimode corrections survive in proportion
// to their shifted frequency content.
inline CutoffReport cutoff_decay_check(const TorusSymbol& a, const FourierSum& u,
                                       double lambda, double delta) {
  if (!a.has_radial_window) throw config_error("cutoff check needs a radial window");
  if (a.r_plus > 1.0 - delta && a.r_minus < 1.0 + delta)
    throw config_error("radial window overlaps the unit shell");
  const double un = u.norm();
  if (!(un > 0.0)) throw degenerate_trace_error("empty fourier sum");
  // x-independent window: Op(a)u stays a Fourier sum with scaled
  // coefficients, so the norm is a coefficient sum
  double s = 0.0;
  for (const auto& t : u.terms) {
    const Vec2 xi{kTwoPi * t.kx / lambda, kTwoPi * t.ky / lambda};
    s += std::norm(t.c) * std::pow(a({0.0, 0.0}, xi), 2.0);
  }
  CutoffReport rep;
  rep.norm_ratio = std::sqrt(s) / un;
  rep.lambda = lambda;
  return rep;
}

inline CutoffReport cutoff_decay_check(const TorusSymbol& a, const Eigenfunction& u,
                                       double delta) {
  return cutoff_decay_check(a, to_fourier(u), u.lambda, delta);
}

// Two eigenfunction clusters at nearby shells. The nominal frequency is the
// base shell's, so the partner cluster sits off the unit shell by the
// relative spread.
struct Quasimode {
  FourierSum f;
  double lambda = 0.0;
  double spread = 0.0;
};

inline Quasimode make_quasimode(const Eigenfunction& base, const Eigenfunction& partner) {
  if (base.surface != SurfaceKind::FlatTorus || partner.surface != SurfaceKind::FlatTorus)
    throw mode_error("quasimodes are torus-only");
  const FourierSum fb = to_fourier(base);
  const FourierSum fp = to_fourier(partner);
  Quasimode q;
  const double inv = 1.0 / std::sqrt(2.0);
  for (const auto& t : fb.terms) q.f.terms.push_back({t.kx, t.ky, inv * t.c});
  for (const auto& t : fp.terms) q.f.terms.push_back({t.kx, t.ky, inv * t.c});
  q.lambda = base.lambda;
  q.spread = partner.lambda / base.lambda - 1.0;
  return q;
}

struct ReductionReport {
  std::vector<double> lambdas;
  std::vector<double> d;  // |<Op(a)u,u> - <Op(a~)u,u>| per member
  double fitted_exponent = 0.0;
  bool exact = false;  // all deviations at rounding level, no fit attempted
};

// Finite order -> homogeneous degree 0 reduction: d(lambda) vanishes on
// exact eigenfunctions and decays like 1/lambda along quasimode sequences.
inline ReductionReport homogeneous_reduction_check(const TorusSymbol& a,
                                                   const std::vector<Quasimode>& seq) {
  if (seq.size() < 4) throw fit_error("reduction fit needs at least 4 members");
  const TorusSymbol ha = homogenized(a);
  ReductionReport rep;
  for (const auto& q : seq) {
    for (const auto& t : q.f.terms)
      if (t.kx == 0 && t.ky == 0 && std::norm(t.c) > 0.0)
        throw config_error("zero frequency blocks the homogenization");
    const double va = matrix_element_fourier(a, q.f, q.lambda).value;
    const double vh = matrix_element_fourier(ha, q.f, q.lambda).value;
    rep.lambdas.push_back(q.lambda);
    rep.d.push_back(std::abs(va - vh));
  }
  double dmin = rep.d[0];
  for (double v : rep.d) dmin = std::min(dmin, v);
  if (dmin < 1e-250) {
    rep.exact = true;
    return rep;
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(rep.d.size());
  for (std::size_t i = 0; i < rep.d.size(); ++i) {
    const double lx = std::log(rep.lambdas[i]);
    const double ly = std::log(rep.d[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-12) throw fit_error("reduction fit needs distinct lambdas");
  rep.fitted_exponent = (n * sxy - sx * sy) / denom;
  return rep;
}

inline std::string psido_csv_header() {
  return "lambda,value,liouville,deviation,d,fitted_exponent";
}

inline std::string psido_csv_row(const MatrixElementReport& me, double d,
                                 double fitted_exponent) {
  std::ostringstream os;
  os << format_g17(me.lambda) << "," << format_g17(me.value) << ","
     << format_g17(me.liouville) << "," << format_g17(me.deviation) << ","
     << format_g17(d) << "," << format_g17(fitted_exponent);
  return os.str();
}

}  // namespace lab
