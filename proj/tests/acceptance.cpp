// Acceptance gate. Runs every criterion the library ships against, prints
// one pass/fail line each, and exits with the number of failures. Each
// criterion also carries a wall-clock budget; overruns fail the line.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "lab/experiments.hpp"
#include "lab/rng.hpp"

using namespace lab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

// ---- 1: Bessel certificates -------------------------------------------------

Outcome bessel_certificates() {
  const double j0 = bessel_j0(kPi);
  const double j15 = bessel_j1(5.0) / 5.0;
  char p0[32], p1[32];
  std::snprintf(p0, sizeof p0, "%.4f", j0);
  std::snprintf(p1, sizeof p1, "%.4f", j15);
  Outcome o;
  o.pass = std::strcmp(p0, "-0.3042") == 0 && std::strcmp(p1, "-0.0655") == 0;
  o.detail = std::string("J0(pi)=") + p0 + " J1(5)/5=" + p1;
  return o;
}

// ---- 2: reference moments by quadrature ---------------------------------------

Outcome reference_moments() {
  const QuadratureRule gc1{QuadKind::GaussChebyshev1, 64};
  const QuadratureRule gc2{QuadKind::GaussChebyshev2, 64};
  double worst = 0.0;
  for (int m = 0; m <= 12; ++m) {
    auto even_power = [m](double x) {
      double p = 1.0;
      for (int i = 0; i < m; ++i) p *= x * x;
      return p;
    };
    const double q1 = integrate(gc1, even_power) / kPi;
    const double q2 = 2.0 / kPi * integrate(gc2, even_power);
    worst = std::max(worst, std::abs(q1 - reference_moment(arcsine_law(), m)));
    worst = std::max(worst, std::abs(q2 - reference_moment(semicircle_law(), m)));
  }
  return {worst <= 1e-12, "max |quadrature - closed form| = " + num(worst, 3) + " for m <= 12"};
}

// ---- 3: mixture negativity -----------------------------------------------------

Outcome mixture_negativity() {
  const double j0pi = bessel_j0(kPi);
  double worst = -1.0;
  for (int i = 0; i <= 100; ++i) {
    const double a = i / 100.0;
    worst = std::max(worst, reference_char(mixture_law(a), kPi) - j0pi);
  }
  return {worst <= 1e-12, "max over 101 weights of char(pi) - J0(pi) = " + num(worst, 3)};
}

// ---- 4: nodal oracle ------------------------------------------------------------

Outcome nodal_oracle() {
  const SurfaceModel torus = make_surface(SurfaceKind::FlatTorus);
  const SurfaceModel sphere = make_surface(SurfaceKind::RoundSphere);
  int bad = 0, checked = 0;
  for (TorusTrig trig :
       {TorusTrig::CosCos, TorusTrig::CosSin, TorusTrig::SinCos, TorusTrig::SinSin}) {
    for (int k = 1; k <= 5; ++k)
      for (int l = 1; l <= 5; ++l) {
        const Eigenfunction u = torus_mode(k, l, trig);
        const int n1 = count_nodal_domains(torus, u, 1024);
        const int n2 = count_nodal_domains(torus, u, 2048);
        bad += (n1 == 4 * k * l && n2 == n1) ? 0 : 1;
        ++checked;
      }
  }
  for (int l = 1; l <= 10; ++l) {
    const Eigenfunction u = sphere_mode(l, 0, false);
    const int n1 = count_nodal_domains(sphere, u, 1024);
    const int n2 = count_nodal_domains(sphere, u, 2048);
    bad += (n1 == l + 1 && n2 == n1) ? 0 : 1;
    ++checked;
  }
  return {bad == 0, std::to_string(checked - bad) + "/" + std::to_string(checked) +
                        " exact counts, stable under doubling"};
}

// ---- 5: Euler inequality ---------------------------------------------------------

Outcome euler_inequality() {
  const SurfaceModel torus = make_surface(SurfaceKind::FlatTorus);
  const SurfaceModel sphere = make_surface(SurfaceKind::RoundSphere);
  std::vector<Eigenfunction> pool;
  for (int k = 1; k <= 5; ++k)
    for (int l = 1; l <= 5; ++l) {
      pool.push_back(torus_mode(k, l, TorusTrig::CosCos));
      pool.push_back(torus_mode(k, l, TorusTrig::SinCos));
    }
  for (int k = 1; k <= 10; ++k) pool.push_back(torus_mode(k, 0, TorusTrig::CosCos));
  for (int l = 1; l <= 10; ++l) pool.push_back(sphere_mode(l, 0, false));
  for (int l = 3; l <= 7; ++l)
    for (int m = 1; m <= 3; ++m) pool.push_back(sphere_mode(l, m, false));
  for (int n : {25, 85, 125, 130, 170})
    for (std::uint64_t s = 1; s <= 4; ++s)
      pool.push_back(ensemble_eigenfunction({SurfaceKind::FlatTorus, n, Parity::Even, s}));
  for (int l : {8, 12, 16, 20})
    for (std::uint64_t s = 1; s <= 3; ++s)
      pool.push_back(ensemble_eigenfunction({SurfaceKind::RoundSphere, l, Parity::Even, s}));

  const auto flags = parallel_map<int>(pool.size(), [&](std::size_t i) {
    const Eigenfunction& u = pool[i];
    const SurfaceModel& m = u.surface == SurfaceKind::FlatTorus ? torus : sphere;
    const NodalGraph g = build_nodal_graph(m, u, required_nodal_resolution(m, u.lambda));
    return (g.euler_ok() && euler_lower_bound(g).pass) ? 1 : 0;
  });
  int ok = 0;
  for (int f : flags) ok += f;
  const int n = static_cast<int>(pool.size());
  return {ok == n && n >= 100,
          std::to_string(ok) + "/" + std::to_string(n) + " graphs satisfy both inequalities"};
}

// ---- 6: boundary gap against the arcsine limit --------------------------------------

Outcome boundary_gap() {
  const SurfaceModel torus = make_surface(SurfaceKind::FlatTorus);
  const CurveSegment seg = torus.fix_components().front();
  const WindowFunction w = make_window(seg, 0.5, 0.45);

  double worst = 0.0;
  for (int m = 1; m <= 3; ++m) {
    const auto gaps = parallel_map<double>(20, [&](std::size_t s) {
      const Eigenfunction u =
          ensemble_eigenfunction({SurfaceKind::FlatTorus, 325, Parity::Even, s + 1});
      return rellich_gap(u, w, m);
    });
    double avg = 0.0;
    for (double g : gaps) avg += g;
    avg /= 20.0;
    const double pred = 2.0 * w.l2 * (1.0 - reference_moment(arcsine_law(), m));
    worst = std::max(worst, std::abs(avg - pred) / pred);
  }

  // single-direction control: one mode at cos^2(theta) = 1/325
  const Eigenfunction ctrl = torus_mode(1, 18, TorusTrig::CosCos);
  double ctrl_dev = 1e300;
  for (int m = 1; m <= 3; ++m) {
    const double pred = 2.0 * w.l2 * (1.0 - reference_moment(arcsine_law(), m));
    ctrl_dev = std::min(ctrl_dev, std::abs(rellich_gap(ctrl, w, m) - pred) / pred);
  }
  const bool pass = worst <= 0.15 && ctrl_dev > 0.30;
  return {pass, "worst seed-averaged deviation " + num(worst) + " (tol 0.15), control deviates " +
                    num(ctrl_dev)};
}

// ---- 7: windowed mass lower bound -----------------------------------------------------

Outcome mass_lower_bound() {
  const SurfaceModel torus = make_surface(SurfaceKind::FlatTorus);
  const WindowFunction w = make_window(torus.fix_components().front(), 0.5, 0.45);
  const auto masses = parallel_map<double>(20, [&](std::size_t s) {
    const Eigenfunction u =
        ensemble_eigenfunction({SurfaceKind::FlatTorus, 325, Parity::Even, s + 1});
    return l2_mass_check(u, w);
  });
  double avg = 0.0;
  for (double v : masses) avg += v;
  avg /= 20.0;
  return {avg >= 0.85, "seed-averaged boundary mass ratio " + num(avg) + " (floor 0.85)"};
}

// ---- 8: odd normal-derivative moments ---------------------------------------------------

Outcome odd_moments() {
  const SurfaceModel torus = make_surface(SurfaceKind::FlatTorus);
  const WindowFunction w = make_window(torus.fix_components().front(), 0.5, 0.45);
  double worst = 0.0;
  for (int m = 0; m <= 2; ++m) {
    const auto vals = parallel_map<double>(20, [&](std::size_t s) {
      const Eigenfunction u =
          ensemble_eigenfunction({SurfaceKind::FlatTorus, 1105, Parity::Odd, s + 1});
      return odd_normal_moment(u, w, m) / w.l2;
    });
    double avg = 0.0;
    for (double v : vals) avg += v;
    avg /= 20.0;
    const double pred = reference_moment(semicircle_law(), m);
    worst = std::max(worst, std::abs(avg - pred) / pred);
  }
  return {worst <= 0.15, "worst deviation from the semicircle moments " + num(worst) +
                             " (tol 0.15) for m <= 2"};
}

// ---- 9: detector soundness and power ------------------------------------------------------

RestrictedTrace nonnegative_trace(std::uint64_t key) {
  counter_rng rng(hash_string("acceptance-soundness") ^ key);
  const int samples = 2048;
  RestrictedTrace psi;
  psi.kind = TraceKind::EvenTrace;
  psi.lambda = torus_lambda(325);
  psi.length = 1.0;
  psi.spacing = 1.0 / samples;
  psi.closed = true;
  std::vector<double> amp(6), phase(6);
  for (int k = 0; k < 6; ++k) {
    amp[k] = rng.gaussian();
    phase[k] = kTwoPi * rng.uniform();
  }
  psi.values.resize(samples);
  double acc = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double t = i * psi.spacing;
    double q = 0.0;
    for (int k = 0; k < 6; ++k) q += amp[k] * std::cos(kTwoPi * (k + 1) * t + phase[k]);
    psi.values[i] = q * q;  // pointwise nonnegative by construction
    acc += psi.values[i] * psi.values[i];
  }
  psi.norm_sq = acc * psi.spacing;
  return psi;
}

Outcome detector() {
  int false_pos = 0, disagreements = 0;
  for (std::uint64_t j = 1; j <= 50; ++j) {
    const RestrictedTrace psi = nonnegative_trace(j);
    const DetectorReport rep = detect_sign_change(psi);
    const bool hit = rep.verdict == DetectorVerdict::SignChange;
    false_pos += hit ? 1 : 0;
    disagreements += hit == has_sign_change_scan(psi) ? 0 : 1;
  }

  const SurfaceModel torus = make_surface(SurfaceKind::FlatTorus);
  const WindowFunction w = make_window(torus.fix_components().front(), 0.5, 0.45);
  const auto hits = parallel_map<int>(20, [&](std::size_t s) {
    const Eigenfunction u =
        ensemble_eigenfunction({SurfaceKind::FlatTorus, 325, Parity::Even, s + 1});
    const RestrictedTrace psi = make_restricted_trace(u, w, TraceKind::EvenTrace);
    const DetectorReport rep = detect_sign_change(psi);
    const bool hit = rep.verdict == DetectorVerdict::SignChange;
    return (hit ? 1 : 0) | ((hit == has_sign_change_scan(psi)) ? 0 : 2);
  });
  int detected = 0;
  for (int h : hits) {
    detected += h & 1;
    disagreements += (h & 2) ? 1 : 0;
  }
  const bool pass = false_pos == 0 && detected >= 19 && disagreements == 0;
  return {pass, std::to_string(false_pos) + "/50 false positives, " + std::to_string(detected) +
                    "/20 detections, " + std::to_string(disagreements) + " scan disagreements"};
}

// ---- 10: growth trend across eigenvalue levels ----------------------------------------------

Outcome growth_trend() {
  const SurfaceModel torus = make_surface(SurfaceKind::FlatTorus);
  const auto components = torus.fixed_locus();
  const std::vector<int> levels = {25, 85, 325, 1105, 5525};
  std::vector<int> medians;
  for (int n : levels) {
    const auto counts = parallel_map<int>(11, [&](std::size_t s) {
      const Eigenfunction u =
          ensemble_eigenfunction({SurfaceKind::FlatTorus, n, Parity::Even, s + 1});
      int total = 0;
      for (const auto& seg : components) {
        const double need = 16.0 * u.lambda * seg.length / kTwoPi;
        const int samples =
            static_cast<int>(next_pow2(static_cast<std::size_t>(std::max(1024.0, 2.0 * need))));
        total += count_sign_changes_on_segment(restrict_to_curve(u, seg, samples));
      }
      return total;
    });
    std::vector<int> sorted = counts;
    std::sort(sorted.begin(), sorted.end());
    medians.push_back(sorted[sorted.size() / 2]);
  }
  bool increasing = true;
  std::ostringstream os;
  for (std::size_t i = 0; i < medians.size(); ++i) {
    if (i) {
      increasing = increasing && medians[i] > medians[i - 1];
      os << " -> ";
    }
    os << medians[i];
  }
  return {increasing, "median crossing counts " + os.str()};
}

// ---- 11: quantization ---------------------------------------------------------------------

Outcome quantization() {
  ExperimentConfig c;
  c.experiment = ExperimentKind::Psido;
  c.levels = {85, 325, 1105, 5525};
  const ExperimentResult r = run_psido(c);
  std::ostringstream os;
  bool pass = true;
  for (const auto& cr : r.criteria) {
    pass = pass && cr.pass;
    os << cr.name << "=" << cr.value << " ";
  }
  return {pass, os.str()};
}

// ---- 12: pairing growth --------------------------------------------------------------------

Outcome pairing_growth() {
  const SurfaceModel torus = make_surface(SurfaceKind::FlatTorus);
  const SurfaceModel sphere = make_surface(SurfaceKind::RoundSphere);

  std::vector<Eigenfunction> zonal;
  for (int l : {4, 6, 9, 13, 19, 28, 42, 64}) zonal.push_back(sphere_mode(l, 0, false));
  const CurveSegment great = sphere.fix_components().front();
  const double s2 = pairing_growth_diagnostic(zonal, second_derivative_operator(), great).slope;

  std::vector<Eigenfunction> ens;
  for (int n : {25, 85, 125, 130, 170, 325, 1105, 5525})
    ens.push_back(ensemble_eigenfunction({SurfaceKind::FlatTorus, n, Parity::Even, 1}));
  const CurveSegment circle = torus.fix_components().front();
  const double s0 = pairing_growth_diagnostic(ens, identity_operator(), circle).slope;
  const WindowFunction w = make_window(circle, 0.5, 0.45);
  const double s1 = pairing_growth_diagnostic(ens, window_commutator_operator(w), circle).slope;

  const bool pass = s2 <= 3.1 && s0 <= 1.1 && s1 <= 2.1;
  return {pass, "slopes " + num(s2) + "/" + num(s0) + "/" + num(s1) +
                    " vs m+1.1 = 3.1/1.1/2.1 (sharper m+3/4: 2.75/0.75/1.75)"};
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    double budget;  // seconds
    Outcome (*fn)();
  };
  const Entry entries[] = {
      {1, "bessel-certificates", 1.0, bessel_certificates},
      {2, "reference-moments", 1.0, reference_moments},
      {3, "mixture-negativity", 1.0, mixture_negativity},
      {4, "nodal-oracle", 120.0, nodal_oracle},
      {5, "euler-inequality", 300.0, euler_inequality},
      {6, "boundary-gap", 120.0, boundary_gap},
      {7, "mass-lower-bound", 60.0, mass_lower_bound},
      {8, "odd-moments", 120.0, odd_moments},
      {9, "detector", 120.0, detector},
      {10, "growth-trend", 300.0, growth_trend},
      {11, "quantization", 120.0, quantization},
      {12, "pairing-growth", 120.0, pairing_growth},
  };

  int failures = 0;
  for (const auto& e : entries) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = e.fn();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = o.pass && dt < e.budget;
    std::printf("criterion %2d  %-20s  %s  %8.2fs  %s\n", e.id, e.name, ok ? "pass" : "FAIL", dt,
                o.detail.c_str());
    std::fflush(stdout);
    failures += ok ? 0 : 1;
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures;
}
