#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <set>
#include <vector>

#include "lab/errors.hpp"
#include "lab/fft.hpp"
#include "lab/geometry.hpp"
#include "lab/spectra.hpp"

namespace lab {

inline constexpr int kMaxDerivativeOrder = 12;

namespace detail {

// derivatives of the bump exponent g(z) = 1 - 1/(1-z^2) by partial fractions
inline double bump_exponent_derivative(double z, int j) {
  if (j == 0) return 1.0 - 1.0 / (1.0 - z * z);
  double fact = 1.0;
  for (int i = 2; i <= j; ++i) fact *= i;
  const double left = std::pow(1.0 - z, -(j + 1));
  const double right = std::pow(1.0 + z, -(j + 1));
  return -0.5 * fact * (left + (j % 2 == 0 ? right : -right));
}

// jets of E(z) = exp(g(z)) up to order m via the Leibniz recurrence on
// E' = g' E; everything vanishes outside |z| < 1
inline std::array<double, kMaxDerivativeOrder + 1> bump_jet(double z, int m) {
  std::array<double, kMaxDerivativeOrder + 1> E{};
  if (std::abs(z) >= 1.0 - 1e-9) return E;
  static const auto binom = [] {
    std::array<std::array<double, kMaxDerivativeOrder + 1>, kMaxDerivativeOrder + 1> c{};
    for (int n = 0; n <= kMaxDerivativeOrder; ++n) {
      c[n][0] = 1.0;
      for (int k = 1; k <= n; ++k) c[n][k] = c[n - 1][k - 1] + (k <= n - 1 ? c[n - 1][k] : 0.0);
    }
    return c;
  }();
  E[0] = std::exp(bump_exponent_derivative(z, 0));
  for (int n = 1; n <= m; ++n) {
    double acc = 0.0;
    for (int k = 0; k < n; ++k)
      acc += binom[n - 1][k] * bump_exponent_derivative(z, n - k) * E[k];
    E[n] = acc;
  }
  return E;
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Smooth compactly supported window on a curve segment: the standard bump
// exp(1 - 1/(1-z^2)) rescaled to [center - width/2, center + width/2].
struct WindowFunction {
  CurveSegment segment;
  double center = 0.0;
  double width = 0.0;
  double l2 = 0.0;  // integral of f^2 over the segment

  double z_of(double s) const { return 2.0 * (s - center) / width; }

  double value(double s) const {
    const double z = z_of(s);
    if (std::abs(z) >= 1.0 - 1e-9) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - z * z));
  }

  // m-th arclength derivative of the profile
  double derivative(double s, int m) const {
    if (m < 0 || m > kMaxDerivativeOrder)
      throw order_error("window jets are available up to order 12");
    const double z = z_of(s);
    const auto jet = detail::bump_jet(z, m);
    return jet[m] * std::pow(2.0 / width, m);
  }
};

inline WindowFunction make_window(const CurveSegment& beta, double center, double width) {
  if (!(width > 0.0)) throw window_error("window width must be positive");
  const double lo = center - 0.5 * width, hi = center + 0.5 * width;
  if (!(lo > 0.0) || !(hi < beta.length))
    throw window_error("window support must stay strictly inside the segment");
  WindowFunction w;
  w.segment = beta;
  w.center = center;
  w.width = width;
  auto f2 = [&](double s) {
    const double v = w.value(s);
    return v * v;
  };
  w.l2 = detail::adaptive_simpson(f2, lo, hi, f2(lo), f2(0.5 * (lo + hi)), f2(hi), 1e-13, 40);
  return w;
}

// ---- windowed boundary traces ----------------------------------------------

enum class TraceKind { EvenTrace, OddTrace };

// Windowed boundary data psi on the segment: f u for the even pairing,
// f lambda^{-1} d_n u for the odd one. Mixed pairings vanish identically
// and are rejected.
struct RestrictedTrace {
  std::vector<double> values;
  TraceKind kind = TraceKind::EvenTrace;
  double lambda = 0.0;
  double spacing = 0.0;
  double length = 0.0;
  bool closed = true;
  double norm_sq = 0.0;  // trapezoid value of the squared trace
};

inline int default_trace_samples(double lambda, double length) {
  const double need = std::max(1024.0, 32.0 * lambda * length / kTwoPi);
  return static_cast<int>(next_pow2(static_cast<std::size_t>(std::ceil(need))));
}

inline RestrictedTrace make_restricted_trace(const Eigenfunction& u, const WindowFunction& w,
                                             TraceKind kind, int samples = 0) {
  if (kind == TraceKind::EvenTrace && u.parity != Parity::Even)
    throw parity_error("even trace of an odd eigenfunction vanishes identically");
  if (kind == TraceKind::OddTrace && u.parity != Parity::Odd)
    throw parity_error("odd trace of an even eigenfunction vanishes identically");
  if (samples <= 0) samples = default_trace_samples(u.lambda, w.segment.length);
  const CurveSamples base = kind == TraceKind::EvenTrace
                                ? restrict_to_curve(u, w.segment, samples)
                                : normal_derivative_on_curve(u, w.segment, samples);
  RestrictedTrace tr;
  tr.kind = kind;
  tr.lambda = u.lambda;
  tr.spacing = base.spacing;
  tr.length = base.length;
  tr.closed = base.closed;
  tr.values.resize(base.values.size());
  const double off = base.closed ? 0.0 : 0.5;
  double acc = 0.0;
  for (std::size_t i = 0; i < base.values.size(); ++i) {
    const double s = (static_cast<double>(i) + off) * base.spacing;
    tr.values[i] = w.value(s) * base.values[i];
    acc += tr.values[i] * tr.values[i];
  }
  // the trace is compactly supported, so the periodic trapezoid rule is the
  // plain sum on both closed and open segments
  tr.norm_sq = acc * tr.spacing;
  return tr;
}

// ---- derivative moments ------------------------------------------------------

enum class DiffMethod { Auto, Spectral, FiniteDifference };

namespace detail {

// 8th order central first derivative on the periodic extension
inline std::vector<double> fd_derivative_periodic(const std::vector<double>& v, double h) {
  static constexpr double c1 = 4.0 / 5.0, c2 = -1.0 / 5.0, c3 = 4.0 / 105.0, c4 = -1.0 / 280.0;
  const int n = static_cast<int>(v.size());
  std::vector<double> d(n);
  for (int i = 0; i < n; ++i) {
    auto at = [&](int k) { return v[((i + k) % n + n) % n]; };
    d[i] = (c1 * (at(1) - at(-1)) + c2 * (at(2) - at(-2)) + c3 * (at(3) - at(-3)) +
            c4 * (at(4) - at(-4))) /
           h;
  }
  return d;
}

inline double moment_fd(const RestrictedTrace& psi, int m) {
  std::vector<double> v = psi.values;
  for (int j = 0; j < m; ++j) v = fd_derivative_periodic(v, psi.spacing);
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc * psi.spacing * std::pow(psi.lambda, -2.0 * m);
}

// Parseval route on the zero-padded periodic extension. The trace has
// compact support, so padding to a power of two only lengthens the period.
// Coefficients below 1e-13 of the peak are rounding noise and are cut
// before the 2m-th power amplifies them.
inline double moment_spectral(const RestrictedTrace& psi, int m) {
  const std::size_t n = psi.values.size();
  const std::size_t n2 = next_pow2(n);
  std::vector<std::complex<double>> a(n2, {0.0, 0.0});
  for (std::size_t i = 0; i < n; ++i) a[i] = psi.values[i];
  fft_radix2(a, false);
  const double period = psi.spacing * static_cast<double>(n2);
  double cmax = 0.0;
  for (const auto& z : a) cmax = std::max(cmax, std::abs(z));
  const double floor_cut = 1e-13 * cmax;
  double acc = 0.0;
  for (std::size_t k = 0; k < n2; ++k) {
    const double mag = std::abs(a[k]) / static_cast<double>(n2);
    if (mag * static_cast<double>(n2) < floor_cut) continue;
    const std::size_t kk = std::min(k, n2 - k);
    const double omega = kTwoPi * static_cast<double>(kk) / period;
    acc += std::pow(omega, 2.0 * m) * mag * mag;
  }
  return acc * period * std::pow(psi.lambda, -2.0 * m);
}

}  // namespace detail

// lambda^{-2m} integral of |d^m psi|^2 over the segment
inline double derivative_moment(const RestrictedTrace& psi, int m,
                                DiffMethod method = DiffMethod::Auto) {
  if (m < 0 || m > kMaxDerivativeOrder)
    throw order_error("derivative moments are available up to order 12");
  if (psi.values.size() < 16) throw resolution_error("trace is undersampled");
  if (m == 0) return psi.norm_sq;
  if (method == DiffMethod::FiniteDifference ||
      (method == DiffMethod::Auto && psi.values.size() < 256))
    return detail::moment_fd(psi, m);
  return detail::moment_spectral(psi, m);
}

// ---- gap and moment reports ---------------------------------------------------

// even boundary gap: the windowed mass minus the m-th normalized moment
inline double rellich_gap(const Eigenfunction& u, const WindowFunction& w, int m,
                          int samples = 0) {
  if (u.parity != Parity::Even) throw parity_error("the boundary gap needs an even eigenfunction");
  if (m < 1) throw order_error("the boundary gap needs m >= 1");
  const RestrictedTrace psi = make_restricted_trace(u, w, TraceKind::EvenTrace, samples);
  return psi.norm_sq - derivative_moment(psi, m);
}

inline double odd_normal_moment(const Eigenfunction& u, const WindowFunction& w, int m,
                                int samples = 0) {
  if (u.parity != Parity::Odd)
    throw parity_error("the normal-derivative moment needs an odd eigenfunction");
  const RestrictedTrace psi = make_restricted_trace(u, w, TraceKind::OddTrace, samples);
  return derivative_moment(psi, m);
}

// ratio of the windowed boundary mass to twice the window mass; an
// equidistributing even sequence concentrates at 1
inline double l2_mass_check(const Eigenfunction& u, const WindowFunction& w, int samples = 0) {
  if (u.parity != Parity::Even) throw parity_error("the mass check needs an even eigenfunction");
  const RestrictedTrace psi = make_restricted_trace(u, w, TraceKind::EvenTrace, samples);
  return psi.norm_sq / (2.0 * w.l2);
}

// ---- tangential operators and the pairing growth diagnostic -------------------

// L = sum_j coeff[j](s) d^j along the segment; coeff has degree+1 entries
struct OperatorSpec {
  int degree = 0;
  std::vector<std::function<double(double)>> coeff;
};

inline OperatorSpec identity_operator() {
  OperatorSpec op;
  op.degree = 0;
  op.coeff = {[](double) { return 1.0; }};
  return op;
}

inline OperatorSpec second_derivative_operator() {
  OperatorSpec op;
  op.degree = 2;
  op.coeff = {[](double) { return 0.0; }, [](double) { return 0.0; },
              [](double) { return 1.0; }};
  return op;
}

// f [f, d^2] expanded: degree one with coefficients -f f'' and -2 f f'
inline OperatorSpec window_commutator_operator(const WindowFunction& w) {
  OperatorSpec op;
  op.degree = 1;
  op.coeff = {[w](double s) { return -w.value(s) * w.derivative(s, 2); },
              [w](double s) { return -2.0 * w.value(s) * w.derivative(s, 1); }};
  return op;
}

namespace detail {

// spectral j-th derivative of a smooth periodic sample vector
inline std::vector<double> spectral_derivative_closed(const std::vector<double>& v,
                                                      double period, int order) {
  const std::size_t n = v.size();
  if ((n & (n - 1)) != 0)
    throw resolution_error("closed-curve differentiation needs a power-of-two sample count");
  std::vector<std::complex<double>> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = v[i];
  fft_radix2(a, false);
  for (std::size_t k = 0; k < n; ++k) {
    // the Nyquist bin has no signed frequency; a smooth trace leaves it empty
    const double kk = k < n / 2 ? static_cast<double>(k)
                                : (k == n / 2 ? 0.0 : static_cast<double>(k) - static_cast<double>(n));
    const std::complex<double> iw(0.0, kTwoPi * kk / period);
    std::complex<double> mult(1.0, 0.0);
    for (int j = 0; j < order; ++j) mult *= iw;
    a[k] *= mult;
  }
  fft_radix2(a, true);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i].real();
  return out;
}

}  // namespace detail

// trapezoid value of <L u, u> along the closed segment
inline double boundary_pairing(const Eigenfunction& u, const OperatorSpec& op,
                               const CurveSegment& beta, int samples = 0) {
  if (!beta.closed) throw config_error("the boundary pairing is defined on closed curves");
  if (samples <= 0) samples = default_trace_samples(u.lambda, beta.length);
  const CurveSamples tr = restrict_to_curve(u, beta, samples);
  const std::size_t n = tr.values.size();
  std::vector<double> applied(n, 0.0);
  for (int j = 0; j <= op.degree; ++j) {
    const std::vector<double> dj =
        j == 0 ? tr.values : detail::spectral_derivative_closed(tr.values, tr.length, j);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = static_cast<double>(i) * tr.spacing;
      applied[i] += op.coeff[j](s) * dj[i];
    }
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += applied[i] * tr.values[i];
  return acc * tr.spacing;
}

struct PairingGrowth {
  std::vector<double> lambdas;
  std::vector<double> values;  // |<L u, u>| per mode
  double slope = 0.0;          // least-squares exponent of the log-log fit
};

inline PairingGrowth pairing_growth_diagnostic(const std::vector<Eigenfunction>& modes,
                                               const OperatorSpec& op, const CurveSegment& beta,
                                               int samples = 0) {
  std::set<double> distinct;
  for (const auto& u : modes) distinct.insert(u.lambda);
  if (distinct.size() < 5)
    throw fit_error("the growth fit needs at least 5 modes with distinct eigenvalues");
  PairingGrowth out;
  for (const auto& u : modes) {
    const double v = std::abs(boundary_pairing(u, op, beta, samples));
    if (v < 1e-250) throw fit_error("a boundary pairing vanished; no growth exponent");
    out.lambdas.push_back(u.lambda);
    out.values.push_back(v);
  }
  const std::size_t n = out.lambdas.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(out.lambdas[i]);
    const double y = std::log(out.values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  out.slope = (n * sxy - sx * sy) / den;
  return out;
}

}  // namespace lab
