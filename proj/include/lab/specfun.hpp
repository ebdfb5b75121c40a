#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lab/errors.hpp"

namespace lab {

inline constexpr double kPi = 3.141592653589793238462643383279503;
inline constexpr double kTwoPi = 2.0 * kPi;

namespace detail {

// Ascending power series around 0; 30 terms hold |err| < 1e-12 for |t| < 12.
inline double bessel_series(int nu, double t) {
  const double x = 0.5 * t;
  double term = (nu == 0) ? 1.0 : x;
  double sum = 0.0;
  for (int k = 0; k < 30; ++k) {
    sum += (k % 2 == 0) ? term : -term;
    term *= x * x / (static_cast<double>(k + 1) * static_cast<double>(k + 1 + nu));
  }
  return sum;
}

// Hankel large-argument expansion. Seven P/Q terms keep the absolute error
// below 2e-11 down to t = 12.
inline double bessel_asymptotic(int nu, double t) {
  const double mu = 4.0 * nu * nu;
  double a[15];
  a[0] = 1.0;
  for (int k = 1; k < 15; ++k) {
    const double odd = 2.0 * k - 1.0;
    a[k] = a[k - 1] * (mu - odd * odd) / (8.0 * k);
  }
  double p = 0.0, q = 0.0;
  double tp = 1.0;  // t^{-2k}
  for (int k = 0; k < 7; ++k) {
    const double s = (k % 2 == 0) ? 1.0 : -1.0;
    p += s * a[2 * k] * tp;
    q += s * a[2 * k + 1] * tp / t;
    tp /= t * t;
  }
  const double chi = t - (2.0 * nu + 1.0) * kPi / 4.0;
  return std::sqrt(2.0 / (kPi * t)) * (p * std::cos(chi) - q * std::sin(chi));
}

inline double bessel_j(int nu, double t) {
  if (!(std::abs(t) <= 1e6)) throw range_error("bessel argument out of range [-1e6, 1e6]");
  const double at = std::abs(t);
  const double v = (at < 12.0) ? bessel_series(nu, at) : bessel_asymptotic(nu, at);
  if (nu == 1 && t < 0.0) return -v;  // J1 odd, J0 even
  return v;
}

}  // namespace detail

inline double bessel_j0(double t) { return detail::bessel_j(0, t); }
inline double bessel_j1(double t) { return detail::bessel_j(1, t); }

inline double binomial_central(int m) {
  // C(2m, m) as a double via the multiplicative recurrence.
  double v = 1.0;
  for (int i = 1; i <= m; ++i) v *= static_cast<double>(2 * (2 * i - 1)) / static_cast<double>(i);
  return v;
}

// ---------------------------------------------------------------------------
// Reference direction-distribution laws.

enum class LawKind : std::uint8_t { PointPair, Arcsine, Semicircle, Mixture };

struct ReferenceLaw {
  LawKind kind = LawKind::Arcsine;
  double a = 1.0;  // mixture weight on the arcsine part
};

inline ReferenceLaw point_pair_law() { return {LawKind::PointPair, 0.0}; }
inline ReferenceLaw arcsine_law() { return {LawKind::Arcsine, 1.0}; }
inline ReferenceLaw semicircle_law() { return {LawKind::Semicircle, 0.0}; }
inline ReferenceLaw mixture_law(double a) {
  if (!(a >= 0.0 && a <= 1.0)) throw range_error("mixture weight outside [0, 1]");
  return {LawKind::Mixture, a};
}

// Even moment of order 2m. Arcsine: C(2m,m)/4^m; semicircle: Catalan(m)/4^m;
// point pair: 1. Odd moments vanish for all laws.
inline double reference_moment(const ReferenceLaw& law, int m) {
  if (m < 0 || m > 64) throw range_error("reference moment order outside [0, 64]");
  double arc = 1.0;
  for (int i = 0; i < m; ++i) arc *= (2.0 * i + 1.0) / (2.0 * i + 2.0);
  switch (law.kind) {
    case LawKind::PointPair:
      return 1.0;
    case LawKind::Arcsine:
      return arc;
    case LawKind::Semicircle:
      return arc / static_cast<double>(m + 1);
    case LawKind::Mixture:
      return (1.0 - law.a) + law.a * arc;
  }
  throw range_error("unknown law");
}

// Characteristic function of the law: point pair -> cos t, arcsine -> J0(t),
// mixture -> (1-a) cos t + a J0(t), semicircle -> 2 J1(t)/t.
inline double reference_char(const ReferenceLaw& law, double t) {
  switch (law.kind) {
    case LawKind::PointPair:
      return std::cos(t);
    case LawKind::Arcsine:
      return bessel_j0(t);
    case LawKind::Mixture:
      return (1.0 - law.a) * std::cos(t) + law.a * bessel_j0(t);
    case LawKind::Semicircle: {
      const double at = std::abs(t);
      if (at < 1e-4) {
        const double t2 = t * t;
        return 1.0 - t2 / 8.0 + t2 * t2 / 192.0;
      }
      return 2.0 * bessel_j1(t) / t;
    }
  }
  throw range_error("unknown law");
}

// ---------------------------------------------------------------------------
// Quadrature.

enum class QuadKind : std::uint8_t { Trapezoid, GaussChebyshev1, GaussChebyshev2 };

struct QuadratureRule {
  QuadKind kind = QuadKind::Trapezoid;
  int nodes = 0;
};

// Nodes/weights. Chebyshev rules live on [-1, 1] and absorb their weight
// function; the trapezoid rule is the closed composite rule on [a, b].
inline void quadrature_nodes(const QuadratureRule& rule, double a, double b,
                             std::vector<double>& x, std::vector<double>& w) {
  if (rule.nodes < 2) throw config_error("quadrature rule needs at least 2 nodes");
  const int n = rule.nodes;
  x.resize(n);
  w.resize(n);
  switch (rule.kind) {
    case QuadKind::Trapezoid: {
      if (!(b > a)) throw config_error("trapezoid interval is empty");
      const double h = (b - a) / (n - 1);
      for (int i = 0; i < n; ++i) {
        x[i] = a + h * i;
        w[i] = (i == 0 || i == n - 1) ? 0.5 * h : h;
      }
      break;
    }
    case QuadKind::GaussChebyshev1: {
      // weight (1-x^2)^{-1/2}
      for (int i = 0; i < n; ++i) {
        x[i] = std::cos(kPi * (2.0 * i + 1.0) / (2.0 * n));
        w[i] = kPi / n;
      }
      break;
    }
    case QuadKind::GaussChebyshev2: {
      // weight (1-x^2)^{+1/2}
      for (int i = 0; i < n; ++i) {
        const double th = kPi * (i + 1.0) / (n + 1.0);
        const double s = std::sin(th);
        x[i] = std::cos(th);
        w[i] = kPi / (n + 1.0) * s * s;
      }
      break;
    }
  }
}

template <class F>
double integrate(const QuadratureRule& rule, F&& f, double a = -1.0, double b = 1.0) {
  std::vector<double> x, w;
  quadrature_nodes(rule, a, b, x, w);
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = f(x[i]);
    if (!std::isfinite(v))
      throw range_error("integrand not finite at node " + std::to_string(i) +
                        " (x = " + std::to_string(x[i]) + ")");
    sum += w[i] * v;
  }
  return sum;
}

namespace detail {
template <class F>
double simpson_step(F& f, double a, double b, double fa, double fm, double fb, double whole,
                    double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol = 1e-13) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, 48);
}

// ---------------------------------------------------------------------------
// Legendre functions.

inline double legendre_p(int l, double x) {
  if (l < 0) throw range_error("legendre degree must be nonnegative");
  if (l == 0) return 1.0;
  double pm1 = 1.0, p = x;
  for (int k = 2; k <= l; ++k) {
    const double pn = ((2.0 * k - 1.0) * x * p - (k - 1.0) * pm1) / k;
    pm1 = p;
    p = pn;
  }
  return p;
}

// Fully normalized associated Legendre P̄_l^m(x), Condon-Shortley phase
// omitted: int_0^pi P̄_l^m(cos t)^2 sin t dt = 1/(2pi). Stable for l <= 128.
inline double legendre_pbar(int l, int m, double x) {
  if (l < 0 || m < 0 || m > l) throw range_error("legendre_pbar indices out of range");
  const double s = std::sqrt(std::max((1.0 - x) * (1.0 + x), 0.0));
  double pmm = std::sqrt(1.0 / (4.0 * kPi));  // P̄_0^0
  for (int i = 1; i <= m; ++i) pmm *= s * std::sqrt((2.0 * i + 1.0) / (2.0 * i));
  if (l == m) return pmm;
  double pl1 = pmm;                                   // P̄_m^m
  double pl = std::sqrt(2.0 * m + 3.0) * x * pmm;     // P̄_{m+1}^m
  for (int k = m + 2; k <= l; ++k) {
    const double a = std::sqrt((4.0 * k * k - 1.0) / (static_cast<double>(k) * k - m * m));
    const double km1 = k - 1.0;
    const double b = std::sqrt((km1 * km1 - m * m) / (4.0 * km1 * km1 - 1.0));
    const double pn = a * (x * pl - b * pl1);
    pl1 = pl;
    pl = pn;
  }
  return pl;
}

// d/dtheta P̄_l^m(cos theta). Uses the same-order recurrence
// (1-x^2) d/dx P̄_l^m = -l x P̄_l^m + sqrt((l^2-m^2)(2l+1)/(2l-1)) P̄_{l-1}^m.
inline double legendre_pbar_dtheta(int l, int m, double theta) {
  const double x = std::cos(theta);
  const double s = std::sin(theta);
  if (std::abs(s) < 1e-12) throw range_error("pbar derivative evaluated at a pole");
  const double pl = legendre_pbar(l, m, x);
  if (l == 0) return 0.0;
  const double plm1 = (l - 1 >= m) ? legendre_pbar(l - 1, m, x) : 0.0;
  const double c = std::sqrt((static_cast<double>(l) * l - static_cast<double>(m) * m) *
                             (2.0 * l + 1.0) / (2.0 * l - 1.0));
  return (l * x * pl - c * plm1) / s;
}

}  // namespace lab
