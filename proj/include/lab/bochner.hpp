#pragma once

// Probability side of the sign-change detector: spectral profiles of
// restricted traces, their moment sequences, Carleman diagnostics,
// characteristic functions via autocorrelation, and positive-definiteness
// tests against the reference laws.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "lab/errors.hpp"
#include "lab/fft.hpp"
#include "lab/restriction.hpp"
#include "lab/specfun.hpp"

namespace lab {

inline constexpr int kMaxMomentOrder = 12;

// Direction density h(xi) on a xi-grid. The grid need not be uniform;
// moments integrate by trapezoid over the stored nodes.
struct SpectralProfile {
  std::vector<double> xi;
  std::vector<double> density;
};

// values[k] = mu_k for k = 0..2*mmax; odd entries are identically zero.
// normalized means the sequence was divided by mu_0.
struct MomentSequence {
  std::vector<double> values;
  bool normalized = false;

  int max_even_order() const { return static_cast<int>(values.size()) - 1; }
  double mu(int k) const {
    if (k < 0 || k >= static_cast<int>(values.size()))
      throw order_error("moment order outside the stored range");
    return values[static_cast<std::size_t>(k)];
  }
};

namespace detail {

inline void check_trace_alive(const RestrictedTrace& psi) {
  double vmax = 0.0;
  for (double v : psi.values) vmax = std::max(vmax, std::abs(v));
  if (!(psi.norm_sq > 0.0) || vmax == 0.0)
    throw degenerate_trace_error("trace vanishes identically");
}

// Power spectrum of the zero-padded trace. Compact support makes the
// padding exact: the padded sequence is the trace itself.
inline std::vector<double> trace_power(const RestrictedTrace& psi) {
  const std::size_t n2 = next_pow2(2 * psi.values.size());
  return padded_power_spectrum(psi.values, n2);
}

}  // namespace detail

// h(xi) = lambda |g(lambda xi)|^2 / ||psi||^2 with g the unitary Fourier
// transform of the zero-extended trace, sampled on the signed FFT bins.
// Plancherel makes the trapezoid mass of h equal to one up to rounding.
inline SpectralProfile fourier_profile(const RestrictedTrace& psi) {
  detail::check_trace_alive(psi);
  const std::vector<double> power = detail::trace_power(psi);
  const std::size_t n2 = power.size();
  const double period = psi.spacing * static_cast<double>(n2);
  const double dxi = kTwoPi / (period * psi.lambda);
  const double xi_max = kPi / (psi.spacing * psi.lambda);
  if (xi_max < 3.0) throw resolution_error("trace too coarse to cover the direction window");

  SpectralProfile h;
  h.xi.resize(n2);
  h.density.resize(n2);
  const double scale =
      psi.lambda * psi.spacing * psi.spacing / (kTwoPi * psi.norm_sq);
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(n2 / 2);
  for (std::ptrdiff_t k = -half; k < half; ++k) {
    const std::size_t bin = static_cast<std::size_t>(k < 0 ? k + static_cast<std::ptrdiff_t>(n2) : k);
    const std::size_t out = static_cast<std::size_t>(k + half);
    h.xi[out] = static_cast<double>(k) * dxi;
    h.density[out] = scale * power[bin];
  }
  return h;
}

// Trapezoid moments of the profile, normalized so mu_0 = 1. Odd moments
// are zero by evenness of h and are stored as exact zeros.
inline MomentSequence moments_of_profile(const SpectralProfile& h, int mmax) {
  if (mmax < 0 || mmax > kMaxMomentOrder) throw order_error("moment depth outside [0, 12]");
  if (h.xi.size() < 2 || h.xi.size() != h.density.size())
    throw grid_error("profile grid malformed");
  MomentSequence mu;
  mu.values.assign(static_cast<std::size_t>(2 * mmax) + 1, 0.0);
  const std::size_t n = h.xi.size();
  for (std::size_t i = 0; i < n; ++i) {
    // composite trapezoid weight of node i on a possibly non-uniform grid
    const double left = (i == 0) ? h.xi[0] : h.xi[i - 1];
    const double right = (i + 1 == n) ? h.xi[n - 1] : h.xi[i + 1];
    double term = 0.5 * (right - left) * h.density[i];
    const double xi2 = h.xi[i] * h.xi[i];
    mu.values[0] += term;
    for (int m = 1; m <= mmax; ++m) {
      term *= xi2;
      mu.values[static_cast<std::size_t>(2 * m)] += term;
    }
  }
  const double mass = mu.values[0];
  if (!(mass > 0.0)) throw degenerate_trace_error("profile carries no mass");
  for (double& v : mu.values) v /= mass;
  mu.normalized = true;
  return mu;
}

// Moment sequence of a reference law, already normalized.
inline MomentSequence reference_moments(const ReferenceLaw& law, int mmax) {
  if (mmax < 0 || mmax > kMaxMomentOrder) throw order_error("moment depth outside [0, 12]");
  MomentSequence mu;
  mu.values.assign(static_cast<std::size_t>(2 * mmax) + 1, 0.0);
  for (int m = 0; m <= mmax; ++m)
    mu.values[static_cast<std::size_t>(2 * m)] = reference_moment(law, m);
  mu.normalized = true;
  return mu;
}

struct CarlemanReport {
  std::vector<double> r;  // r_k = mu_{2k}^{1/2k} / (2k), k = 1..depth
  double max_r = 0.0;
};

// Finite-depth Carleman sequence. Boundedness of r_k is the determinacy
// criterion's shadow at finite depth; the report never asserts determinacy.
inline CarlemanReport carleman_report(const MomentSequence& mu) {
  if (mu.values.empty() || std::abs(mu.values[0] - 1.0) > 1e-12)
    throw config_error("carleman report needs a normalized sequence");
  CarlemanReport rep;
  const int depth = mu.max_even_order() / 2;
  for (int k = 1; k <= depth; ++k) {
    const double m2k = mu.values[static_cast<std::size_t>(2 * k)];
    if (!(m2k >= 0.0)) throw config_error("negative even moment");
    const double rk = std::pow(m2k, 1.0 / (2.0 * k)) / (2.0 * k);
    rep.r.push_back(rk);
    rep.max_r = std::max(rep.max_r, rk);
  }
  return rep;
}

namespace detail {

// Householder reduction of a symmetric matrix (row-major, n x n) to
// tridiagonal form; only d and e are kept.
inline void tridiagonalize(std::vector<double>& a, std::size_t n,
                           std::vector<double>& d, std::vector<double>& e) {
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    double scale = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) scale += std::abs(a[i * n + k]);
    if (scale == 0.0) {
      e[k] = a[(k + 1) * n + k];
      continue;
    }
    double h = 0.0;
    std::vector<double> v(n, 0.0);
    for (std::size_t i = k + 1; i < n; ++i) {
      v[i] = a[i * n + k] / scale;
      h += v[i] * v[i];
    }
    double f = v[k + 1];
    double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
    e[k] = scale * g;
    h -= f * g;
    v[k + 1] = f - g;
    // p = A v / h, then rank-2 update A -= v p^T + p v^T with the
    // K-correction keeping symmetry
    std::vector<double> p(n, 0.0);
    for (std::size_t i = k + 1; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) s += a[i * n + j] * v[j];
      p[i] = s / h;
    }
    double kk = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) kk += v[i] * p[i];
    kk /= 2.0 * h;
    for (std::size_t i = k + 1; i < n; ++i) p[i] -= kk * v[i];
    for (std::size_t i = k + 1; i < n; ++i)
      for (std::size_t j = k + 1; j < n; ++j)
        a[i * n + j] -= v[i] * p[j] + p[i] * v[j];
  }
  if (n >= 2) e[n - 2] = a[(n - 1) * n + (n - 2)];
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i * n + i];
}

// Sturm count: number of eigenvalues of the tridiagonal (d, e) below x.
inline int sturm_count(const std::vector<double>& d, const std::vector<double>& e, double x) {
  const std::size_t n = d.size();
  int count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double off = (i == 0) ? 0.0 : e[i - 1];
    q = d[i] - x - (i == 0 ? 0.0 : off * off / q);
    if (q == 0.0) q = -1e-300;
    if (q < 0.0) ++count;
  }
  return count;
}

// Smallest eigenvalue of a symmetric matrix by tridiagonalization and
// Sturm bisection. Exact to the bisection tolerance, no iteration risk.
inline double symmetric_min_eig(std::vector<double> a, std::size_t n) {
  if (n == 0) throw config_error("empty matrix");
  if (n == 1) return a[0];
  std::vector<double> d, e;
  tridiagonalize(a, n, d, e);
  double lo = d[0], hi = d[0];
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(e[i - 1]) : 0.0) + (i + 1 < n ? std::abs(e[i]) : 0.0);
    lo = std::min(lo, d[i] - r);
    hi = std::max(hi, d[i] + r);
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sturm_count(d, e, mid) >= 1)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Minimum eigenvalue of the Hankel matrix [mu_{i+j}], 0 <= i,j <= r.
// Nonnegativity is necessary for mu to be a moment sequence.
inline double hankel_min_eig(const MomentSequence& mu, int r) {
  if (r < 0 || 2 * r > mu.max_even_order()) throw order_error("hankel depth outside the sequence");
  const std::size_t n = static_cast<std::size_t>(r) + 1;
  std::vector<double> a(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] = mu.values[i + j];
  return detail::symmetric_min_eig(std::move(a), n);
}

// phi(t) = autocorrelation of psi at lag t/lambda over ||psi||^2, evaluated
// through the padded power spectrum. Wiener-Khinchin makes this the exact
// characteristic function of the profile; compact support makes the zero
// extension exact.
inline std::vector<double> char_function(const RestrictedTrace& psi,
                                         const std::vector<double>& t_grid) {
  detail::check_trace_alive(psi);
  const std::vector<double> power = detail::trace_power(psi);
  const std::size_t n2 = power.size();
  const double period = psi.spacing * static_cast<double>(n2);
  const double domega = kTwoPi / period;

  double total = power[0] + power[n2 / 2];
  for (std::size_t k = 1; k < n2 / 2; ++k) total += 2.0 * power[k];
  if (!(total > 0.0)) throw degenerate_trace_error("trace has empty spectrum");

  std::vector<double> phi(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const double lag = t_grid[i] / psi.lambda;
    double acc = power[0] + power[n2 / 2] * std::cos(static_cast<double>(n2 / 2) * domega * lag);
    for (std::size_t k = 1; k < n2 / 2; ++k)
      acc += 2.0 * power[k] * std::cos(static_cast<double>(k) * domega * lag);
    phi[i] = acc / total;
  }
  return phi;
}

// 257 uniform points on [0, 4pi]: covers the negativity certificates at
// t = pi and t = 5 with margin.
inline std::vector<double> default_t_grid() {
  std::vector<double> t(257);
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = 4.0 * kPi * static_cast<double>(i) / 256.0;
  return t;
}

enum class PsdVerdict : std::uint8_t { PSD, NegativeAt };

struct PsdReport {
  PsdVerdict verdict = PsdVerdict::PSD;
  double phi_min = 0.0;
  double t_star = 0.0;          // argmin of the pointwise test
  double toeplitz_min_eig = 0.0;
};

// Two necessary conditions for phi to be a characteristic function:
// pointwise dominance by phi(0) rules nothing out, so the test reports the
// pointwise minimum (negativity is the sign-change certificate) together
// with the minimum eigenvalue of the Toeplitz matrix [phi(t_i - t_j)].
inline PsdReport psd_test(const std::vector<double>& t_grid,
                          const std::vector<double>& phi, double tol = 1e-3) {
  const std::size_t n = t_grid.size();
  if (n < 2 || phi.size() != n) throw grid_error("psd test needs matching grids");
  if (t_grid[0] != 0.0) throw grid_error("t grid must start at zero");
  const double dt = t_grid[1] - t_grid[0];
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (std::abs(t_grid[i + 1] - t_grid[i] - dt) > 1e-9 * std::max(dt, 1.0))
      throw grid_error("t grid must be uniform");

  PsdReport rep;
  rep.phi_min = phi[0];
  rep.t_star = t_grid[0];
  for (std::size_t i = 0; i < n; ++i) {
    if (phi[i] < rep.phi_min) {
      rep.phi_min = phi[i];
      rep.t_star = t_grid[i];
    }
  }
  // t_i - t_j lands back on the grid, so the Toeplitz matrix needs no
  // extra evaluations
  std::vector<double> a(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] = phi[i > j ? i - j : j - i];
  rep.toeplitz_min_eig = detail::symmetric_min_eig(std::move(a), n);

  rep.verdict = (rep.phi_min < -tol || rep.toeplitz_min_eig < -tol)
                    ? PsdVerdict::NegativeAt
                    : PsdVerdict::PSD;
  return rep;
}

enum class DetectorVerdict : std::uint8_t { SignChange, NoEvidence };

struct DetectorReport {
  DetectorVerdict verdict = DetectorVerdict::NoEvidence;
  double phi_min = 0.0;
  double t_star = 0.0;
  double toeplitz_min_eig = 0.0;
  double fitted_a = 0.0;
  MomentSequence moments;
  CarlemanReport carleman;
};

// Direct scan used to cross-validate the detector: a sign change is two
// out-of-band samples of opposite sign.
inline bool has_sign_change_scan(const RestrictedTrace& psi, double rel_band = 1e-9) {
  double vmax = 0.0;
  for (double v : psi.values) vmax = std::max(vmax, std::abs(v));
  const double band = rel_band * vmax;
  bool pos = false, neg = false;
  for (double v : psi.values) {
    if (v > band) pos = true;
    if (v < -band) neg = true;
  }
  return pos && neg;
}

// Bochner pipeline: characteristic function, positivity test, moment and
// Carleman diagnostics, nearest mixture weight from mu_2 alone
// (mu_2 = 1 - a/2 along the family). Soundness rests on the
// autocorrelation being pointwise nonnegative for sign-definite traces.
inline DetectorReport detect_sign_change(const RestrictedTrace& psi, double tol = 1e-3) {
  detail::check_trace_alive(psi);
  DetectorReport rep;
  rep.moments = moments_of_profile(fourier_profile(psi), 6);
  rep.carleman = carleman_report(rep.moments);
  rep.fitted_a = std::clamp(2.0 * (1.0 - rep.moments.mu(2)), 0.0, 1.0);

  const std::vector<double> t = default_t_grid();
  const PsdReport psd = psd_test(t, char_function(psi, t), tol);
  rep.phi_min = psd.phi_min;
  rep.t_star = psd.t_star;
  rep.toeplitz_min_eig = psd.toeplitz_min_eig;
  rep.verdict = (psd.verdict == PsdVerdict::NegativeAt) ? DetectorVerdict::SignChange
                                                        : DetectorVerdict::NoEvidence;
  return rep;
}

inline std::string detector_json(const DetectorReport& rep) {
  std::ostringstream out;
  out << "{\"verdict\":\""
      << (rep.verdict == DetectorVerdict::SignChange ? "SignChange" : "NoEvidence")
      << "\",\"phi_min\":" << format_g17(rep.phi_min)
      << ",\"t_star\":" << format_g17(rep.t_star)
      << ",\"toeplitz_min_eig\":" << format_g17(rep.toeplitz_min_eig)
      << ",\"fitted_a\":" << format_g17(rep.fitted_a) << ",\"moments\":[";
  for (std::size_t i = 0; i < rep.moments.values.size(); ++i) {
    if (i) out << ",";
    out << format_g17(rep.moments.values[i]);
  }
  out << "],\"carleman\":[";
  for (std::size_t i = 0; i < rep.carleman.r.size(); ++i) {
    if (i) out << ",";
    out << format_g17(rep.carleman.r[i]);
  }
  out << "]}";
  return out.str();
}

}  // namespace lab
