#include <cmath>
#include <complex>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "lab/psido.hpp"
#include "lab/rng.hpp"

using namespace lab;

namespace {

Eigenfunction torus_ensemble(int n, std::uint64_t seed) {
  EnsembleSpec spec;
  spec.surface = SurfaceKind::FlatTorus;
  spec.level = n;
  spec.parity = Parity::Even;
  spec.seed = seed;
  return ensemble_eigenfunction(spec);
}

FourierSum single_mode(int kx, int ky) {
  FourierSum f;
  f.terms.push_back({kx, ky, {1.0, 0.0}});
  return f;
}

// V = 2 cos(2 pi p.x): the +-p exponential pair
FourierSum cosine_potential(int px, int py) {
  FourierSum f;
  f.terms.push_back({px, py, {1.0, 0.0}});
  f.terms.push_back({-px, -py, {1.0, 0.0}});
  return f;
}

}  // namespace

TEST_CASE("fourier expansion reproduces the eigenfunction pointwise") {
  std::vector<Eigenfunction> us = {
      torus_mode(2, 3, TorusTrig::CosCos), torus_mode(1, 4, TorusTrig::SinSin),
      torus_mode(3, 2, TorusTrig::CosSin), torus_mode(2, 0, TorusTrig::SinCos),
      torus_ensemble(25, 7)};
  counter_rng rng(hash_string("psido-expansion"));
  for (const auto& u : us) {
    const FourierSum f = to_fourier(u);
    REQUIRE(f.norm() == Catch::Approx(1.0).margin(1e-12));
    for (int trial = 0; trial < 20; ++trial) {
      const Vec2 p{rng.uniform(), rng.uniform()};
      const std::complex<double> v = f.evaluate(p);
      REQUIRE(v.real() == Catch::Approx(u.value(p)).margin(1e-12));
      REQUIRE(std::abs(v.imag()) < 1e-12);
    }
  }
  REQUIRE_THROWS_AS(to_fourier(sphere_mode(3, 2, false)), mode_error);
}

TEST_CASE("quantization acts as a multiplier on a single mode") {
  const FourierSum u = single_mode(3, 4);
  const double lambda = kTwoPi * 5.0;
  const TorusSymbol a = xi1_squared_symbol();
  const int r = 16;
  const std::vector<std::complex<double>> out = quantize_apply(a, u, lambda, r);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) {
      const Vec2 x{static_cast<double>(i) / r, static_cast<double>(j) / r};
      const std::complex<double> expect =
          (9.0 / 25.0) * std::polar(1.0, kTwoPi * (3.0 * x.a + 4.0 * x.b));
      REQUIRE(std::abs(out[static_cast<std::size_t>(i * r + j)] - expect) < 1e-13);
    }
  }
}

TEST_CASE("potential symbols multiply pointwise") {
  const Eigenfunction u = torus_mode(2, 3, TorusTrig::CosCos);
  const FourierSum f = to_fourier(u);
  const TorusSymbol v =
      potential_symbol([](const Vec2& x) { return std::cos(kTwoPi * x.a); }, 1);
  const int r = 2 * (f.max_abs_freq() + 1) + 2;
  const std::vector<std::complex<double>> out = quantize_apply(v, f, u.lambda, r);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) {
      const Vec2 x{static_cast<double>(i) / r, static_cast<double>(j) / r};
      const double expect = std::cos(kTwoPi * x.a) * u.value(x);
      REQUIRE(out[static_cast<std::size_t>(i * r + j)].real() ==
              Catch::Approx(expect).margin(1e-13));
      REQUIRE(std::abs(out[static_cast<std::size_t>(i * r + j)].imag()) < 1e-13);
    }
  }
}

TEST_CASE("polynomial symbols match spectral differentiation") {
  // a(x, xi) = g(x) xi_1^2 + xi_2 applied to u must equal
  // g(x) (d_x / (i lambda))^2 u + (d_y / (i lambda)) u
  const Eigenfunction u = torus_mode(2, 3, TorusTrig::CosCos);
  const FourierSum f = to_fourier(u);
  TorusSymbol a;
  a.eval = [](const Vec2& x, const Vec2& xi) {
    return (1.0 + 0.5 * std::cos(kTwoPi * x.b)) * xi.a * xi.a + xi.b;
  };
  a.order = 2;
  a.x_bandwidth = 1;

  FourierSum dxx = f, dy = f;
  for (auto& t : dxx.terms) t.c *= std::pow(kTwoPi * t.kx / u.lambda, 2.0);
  for (auto& t : dy.terms) t.c *= kTwoPi * t.ky / u.lambda;

  const int r = 2 * (f.max_abs_freq() + 1) + 3;
  const std::vector<std::complex<double>> out = quantize_apply(a, f, u.lambda, r);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) {
      const Vec2 x{static_cast<double>(i) / r, static_cast<double>(j) / r};
      const std::complex<double> expect =
          (1.0 + 0.5 * std::cos(kTwoPi * x.b)) * dxx.evaluate(x) + dy.evaluate(x);
      REQUIRE(std::abs(out[static_cast<std::size_t>(i * r + j)] - expect) < 1e-12);
    }
  }
}

TEST_CASE("quantization is linear and symmetric on real even symbols") {
  const Eigenfunction u = torus_mode(2, 3, TorusTrig::CosCos);
  const FourierSum f = to_fourier(u);
  TorusSymbol a;
  a.eval = [](const Vec2& x, const Vec2& xi) {
    return xi.a * xi.a * (1.0 + 0.5 * std::cos(kTwoPi * x.a));
  };
  a.x_bandwidth = 1;
  TorusSymbol b;
  b.eval = [](const Vec2& x, const Vec2& xi) {
    return xi.b * xi.b + 0.3 * std::sin(kTwoPi * x.b) * xi.a;
  };
  b.x_bandwidth = 1;
  TorusSymbol sum;
  sum.eval = [&](const Vec2& x, const Vec2& xi) { return a(x, xi) + b(x, xi); };
  sum.x_bandwidth = 1;

  const int r = 2 * (f.max_abs_freq() + 1) + 2;
  const auto oa = quantize_apply(a, f, u.lambda, r);
  const auto ob = quantize_apply(b, f, u.lambda, r);
  const auto os = quantize_apply(sum, f, u.lambda, r);
  for (std::size_t i = 0; i < os.size(); ++i)
    REQUIRE(std::abs(os[i] - oa[i] - ob[i]) < 1e-13);

  // real part only survives the pairing for an even real symbol
  std::complex<double> val = 0.0;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) {
      const Vec2 x{static_cast<double>(i) / r, static_cast<double>(j) / r};
      val += oa[static_cast<std::size_t>(i * r + j)] * std::conj(f.evaluate(x));
    }
  val /= static_cast<double>(r) * static_cast<double>(r);
  REQUIRE(std::abs(val.imag()) < 1e-10);
}

TEST_CASE("multiplier consistency for x-independent symbols") {
  const Eigenfunction u = torus_ensemble(25, 3);
  const FourierSum f = to_fourier(u);
  const TorusSymbol a = multiplier_symbol(
      [](const Vec2& xi) { return xi.a * xi.a - 0.25 * xi.b; }, 2);
  FourierSum scaled = f;
  for (auto& t : scaled.terms) {
    const Vec2 xi{kTwoPi * t.kx / u.lambda, kTwoPi * t.ky / u.lambda};
    t.c *= xi.a * xi.a - 0.25 * xi.b;
  }
  const int r = 2 * f.max_abs_freq() + 3;
  const auto out = quantize_apply(a, f, u.lambda, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) {
      const Vec2 x{static_cast<double>(i) / r, static_cast<double>(j) / r};
      REQUIRE(std::abs(out[static_cast<std::size_t>(i * r + j)] - scaled.evaluate(x)) <
              1e-13);
    }
}

TEST_CASE("matrix elements sit against the liouville average") {
  const TorusSymbol a = xi1_squared_symbol();

  // single mode: value is the squared direction cosine, average is 1/2
  const MatrixElementReport one = matrix_element(a, torus_mode(3, 4, TorusTrig::CosCos));
  REQUIRE(one.value == Catch::Approx(9.0 / 25.0).margin(1e-12));
  REQUIRE(one.liouville == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(one.deviation == Catch::Approx(0.5 - 9.0 / 25.0).margin(1e-12));

  // ensemble with 24 directions: equidistribution brings the value close
  const MatrixElementReport ens = matrix_element(a, torus_ensemble(325, 1));
  REQUIRE(ens.deviation <= 0.1);

  // mean-zero potential: liouville average vanishes, value stays small
  const TorusSymbol v = potential_symbol(
      [](const Vec2& x) { return 2.0 * std::cos(kTwoPi * (5.0 * x.a - x.b)); }, 5);
  REQUIRE(liouville_average(v, make_surface(SurfaceKind::FlatTorus, {})) ==
          Catch::Approx(0.0).margin(1e-12));
  // individual seeds can align the two connected lattice pairs, so the
  // contract is on the seed average
  double mean = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const MatrixElementReport r = matrix_element(v, torus_ensemble(325, seed));
    REQUIRE(std::abs(r.value) <= 0.34);
    mean += r.value / 10.0;
  }
  REQUIRE(std::abs(mean) <= 0.1);

  // unit symbol: normalized liouville measure integrates to one
  TorusSymbol unit;
  unit.eval = [](const Vec2&, const Vec2&) { return 1.0; };
  REQUIRE(liouville_average(unit, make_surface(SurfaceKind::FlatTorus, {})) ==
          Catch::Approx(1.0).margin(1e-14));
  const MatrixElementReport u1 = matrix_element(unit, torus_mode(2, 3, TorusTrig::CosCos));
  REQUIRE(u1.value == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(u1.deviation <= 1e-12);
}

TEST_CASE("aliasing guard rejects under-resolved grids") {
  const FourierSum f = single_mode(3, 1);
  const TorusSymbol v =
      potential_symbol([](const Vec2& x) { return std::cos(kTwoPi * x.a); }, 1);
  REQUIRE_THROWS_AS(quantize_apply(v, f, kTwoPi, 8), aliasing_error);
  REQUIRE_NOTHROW(quantize_apply(v, f, kTwoPi, 9));
}

TEST_CASE("homogeneity flag is checkable and the defect is visible") {
  const TorusSymbol h = homogenized(xi1_squared_symbol());
  REQUIRE(h.homogeneous);
  REQUIRE(homogeneity_defect(h) < 1e-12);
  REQUIRE(homogeneity_defect(xi1_squared_symbol()) > 1.0);
}

TEST_CASE("cutoff symbol annihilates exact shells and sees quasimode leakage") {
  const TorusSymbol a = radial_bump_symbol(1.5, 2.0);
  const Eigenfunction u = torus_ensemble(325, 1);
  const CutoffReport exact = cutoff_decay_check(a, u, 0.05);
  REQUIRE(exact.norm_ratio <= 1e-12);

  // (1 + eps V) u with V shifting frequencies into the window
  const FourierSum f = to_fourier(u);
  const FourierSum pert = modulate(f, cosine_potential(27, 0), 0.01);
  const CutoffReport leak = cutoff_decay_check(a, pert, u.lambda, 0.05);
  REQUIRE(leak.norm_ratio <= 0.02);
  REQUIRE(leak.norm_ratio > 1e-5);

  REQUIRE_THROWS_AS(cutoff_decay_check(radial_bump_symbol(0.99, 1.01), u, 0.05),
                    config_error);
  REQUIRE_THROWS_AS(cutoff_decay_check(xi1_squared_symbol(), u, 0.05), config_error);
}

TEST_CASE("homogeneous reduction is exact on shell") {
  TorusSymbol a;
  a.eval = [](const Vec2&, const Vec2& xi) { return xi.a * xi.a + xi.b * xi.b; };
  a.order = 2;

  std::vector<Quasimode> seq;
  for (int n : {25, 85, 325, 1105}) {
    const Eigenfunction u = torus_ensemble(n, 2);
    seq.push_back({to_fourier(u), u.lambda, 0.0});
  }
  const ReductionReport rep = homogeneous_reduction_check(a, seq);
  REQUIRE(rep.exact);
  for (double d : rep.d) REQUIRE(d <= 1e-12);

  // an already homogeneous symbol deviates from itself nowhere
  std::vector<Quasimode> one = seq;
  const ReductionReport same = homogeneous_reduction_check(homogenized(a), one);
  REQUIRE(same.exact);

  std::vector<Quasimode> three(seq.begin(), seq.begin() + 3);
  REQUIRE_THROWS_AS(homogeneous_reduction_check(a, three), fit_error);
}

TEST_CASE("quasimode sequences expose the reduction decay rate") {
  TorusSymbol a;
  a.eval = [](const Vec2&, const Vec2& xi) { return xi.a * xi.a + xi.b * xi.b; };
  a.order = 2;

  const std::vector<std::pair<int, int>> pairs = {
      {85, 89}, {325, 333}, {1105, 1117}, {5525, 5545}};
  std::vector<Quasimode> seq;
  for (const auto& [n, np] : pairs)
    seq.push_back(make_quasimode(torus_ensemble(n, 1), torus_ensemble(np, 1)));

  for (const auto& q : seq) {
    REQUIRE(q.spread > 0.0);
    REQUIRE(q.spread < 0.05);
  }
  const ReductionReport rep = homogeneous_reduction_check(a, seq);
  REQUIRE_FALSE(rep.exact);
  REQUIRE(rep.fitted_exponent <= -0.7);
  for (std::size_t i = 1; i < rep.d.size(); ++i) REQUIRE(rep.d[i] < rep.d[i - 1]);
}

TEST_CASE("csv rows carry the report fields") {
  REQUIRE(psido_csv_header() == "lambda,value,liouville,deviation,d,fitted_exponent");
  MatrixElementReport me;
  me.lambda = 2.0;
  me.value = 0.25;
  me.liouville = 0.5;
  me.deviation = 0.25;
  const std::string row = psido_csv_row(me, 0.001, -1.2);
  int commas = 0;
  for (char c : row) commas += (c == ',');
  REQUIRE(commas == 5);
  REQUIRE(row.find("2,0.25,0.5,0.25,0.001,-1.2") != std::string::npos);
}
