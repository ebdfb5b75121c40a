#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "lab/nodal.hpp"

using namespace lab;

namespace {

const SurfaceModel& torus() {
  static SurfaceModel m = make_surface(SurfaceKind::FlatTorus, {});
  return m;
}

const SurfaceModel& sphere() {
  static SurfaceModel m = make_surface(SurfaceKind::RoundSphere, {});
  return m;
}

int even_up(int n) { return n % 2 == 0 ? n : n + 1; }

// smallest admissible even resolution that is also a multiple of q
int admissible_multiple(const SurfaceModel& m, double lambda, int q) {
  int r = required_nodal_resolution(m, lambda);
  r += (q - r % q) % q;
  return even_up(r);
}

}  // namespace

TEST_CASE("product modes split the torus into 4kl rectangles") {
  for (int k = 1; k <= 3; ++k)
    for (int l = 1; l <= 3; ++l) {
      Eigenfunction u = torus_mode(k, l, TorusTrig::SinSin);
      const int res = required_nodal_resolution(torus(), u.lambda);
      REQUIRE(count_nodal_domains(torus(), u, res) == 4 * k * l);
    }
  Eigenfunction u = torus_mode(2, 3, TorusTrig::CosCos);
  REQUIRE(count_nodal_domains(torus(), u, required_nodal_resolution(torus(), u.lambda)) == 24);
}

TEST_CASE("domain counts are stable under grid doubling") {
  Eigenfunction u = torus_mode(3, 2, TorusTrig::CosSin);
  const int res = required_nodal_resolution(torus(), u.lambda);
  REQUIRE(count_nodal_domains(torus(), u, res) == count_nodal_domains(torus(), u, 2 * res));
}

TEST_CASE("resolution below the wavelength bound is rejected") {
  Eigenfunction u = torus_mode(4, 4, TorusTrig::CosCos);
  const int res = required_nodal_resolution(torus(), u.lambda);
  REQUIRE_THROWS_AS(count_nodal_domains(torus(), u, res - 2), resolution_error);
  REQUIRE_THROWS_AS(build_nodal_graph(torus(), u, res - 2), resolution_error);
  REQUIRE_THROWS_AS(extract_nodal_set(torus(), u, res - 2), resolution_error);
  REQUIRE_THROWS_AS(sample_grid(torus(), u, res - 1), resolution_error);
}

TEST_CASE("sphere low-degree counts match the classical pictures") {
  // one zero circle for l=1, zonal l splits into l+1 bands
  Eigenfunction u1 = sphere_mode(1, 0, false);
  REQUIRE(count_nodal_domains(sphere(), u1,
                              required_nodal_resolution(sphere(), u1.lambda)) == 2);
  for (int l = 2; l <= 4; ++l) {
    Eigenfunction u = sphere_mode(l, 0, false);
    REQUIRE(count_nodal_domains(sphere(), u,
                                required_nodal_resolution(sphere(), u.lambda)) == l + 1);
  }
  // tesseral grid: 2m(l-m+1) domains
  Eigenfunction u32 = sphere_mode(3, 2, false);
  REQUIRE(count_nodal_domains(sphere(), u32,
                              required_nodal_resolution(sphere(), u32.lambda)) == 8);
  Eigenfunction u53 = sphere_mode(5, 3, true);
  REQUIRE(count_nodal_domains(sphere(), u53,
                              required_nodal_resolution(sphere(), u53.lambda)) == 18);
}

TEST_CASE("sign changes along traces collapse zero runs") {
  Eigenfunction u = torus_mode(3, 4, TorusTrig::CosCos);
  const auto fix = torus().fix_components();
  const auto tr = restrict_to_curve(u, fix[0], 4096);
  REQUIRE(count_sign_changes_on_segment(tr) == 6);

  // odd trace vanishes identically
  Eigenfunction v = torus_mode(3, 4, TorusTrig::CosSin);
  const auto tv = restrict_to_curve(v, fix[0], 4096);
  REQUIRE_THROWS_AS(count_sign_changes_on_segment(tv), degenerate_trace_error);
}

TEST_CASE("crossing positions are bisection sharp") {
  Eigenfunction u = torus_mode(2, 3, TorusTrig::CosCos);
  const auto fix = torus().fix_components();
  const auto pos = crossing_positions(u, fix[0], 2048, 1e-9 * 2.0);
  REQUIRE(pos.size() == 4);
  std::vector<double> sorted = pos;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 4; ++i)
    REQUIRE(sorted[i] == Catch::Approx(0.125 + 0.25 * i).margin(1e-12));
}

TEST_CASE("marching squares recovers exact circles for a pure product mode") {
  Eigenfunction u = torus_mode(2, 3, TorusTrig::SinSin);
  // zeros of the factors fall midway between nodes when 12 divides the
  // resolution, so every saddle cell averages to zero and the contour runs
  // straight through the crossings
  const int res = admissible_multiple(torus(), u.lambda, 12);
  const auto set = extract_nodal_set(torus(), u, res);
  REQUIRE(set.degenerate_cells == 0);
  REQUIRE(set.lines.size() == 10);
  int vertical = 0, horizontal = 0;
  for (const auto& line : set.lines) {
    REQUIRE(line.closed);
    double da = 0.0, db = 0.0;
    for (const auto& p : line.points) {
      da = std::max(da, std::abs(wrapped_diff01(p.a, line.points[0].a)));
      db = std::max(db, std::abs(wrapped_diff01(p.b, line.points[0].b)));
    }
    if (da < 1e-9) ++vertical;    // constant x: a circle x = k/4
    if (db < 1e-9) ++horizontal;  // constant y: a circle y = k/6
  }
  REQUIRE(vertical == 4);
  REQUIRE(horizontal == 6);
}

TEST_CASE("polyline export writes one segment per line") {
  Eigenfunction u = sphere_mode(2, 0, false);
  const auto set = extract_nodal_set(sphere(), u, required_nodal_resolution(sphere(), u.lambda));
  REQUIRE(set.lines.size() == 2);
  const std::string text = render_polylines(set);
  std::istringstream is(text);
  std::string line;
  int headers = 0, segments = 0;
  while (std::getline(is, line)) {
    if (line.rfind("# path", 0) == 0) {
      ++headers;
      continue;
    }
    std::istringstream ls(line);
    double x0, y0, x1, y1;
    REQUIRE((ls >> x0 >> y0 >> x1 >> y1));
    ++segments;
  }
  REQUIRE(headers == 2);
  REQUIRE(segments > 0);
}

TEST_CASE("nodal graph of a generic torus product mode closes the count") {
  Eigenfunction u = torus_mode(2, 3, TorusTrig::CosCos);
  const int res = required_nodal_resolution(torus(), u.lambda);
  const NodalGraph g = build_nodal_graph(torus(), u, res);
  REQUIRE(g.domains == 24);
  REQUIRE(g.fix_crossings == 8);
  REQUIRE(g.singular_points == 24);
  REQUIRE(g.markers == 0);
  REQUIRE(g.vertices == 32);
  REQUIRE(g.edges == 64);
  REQUIRE(g.faces == 32);
  REQUIRE(g.components == 1);
  // equality case of the Euler inequality on the torus
  REQUIRE(g.euler_stat() == -1);
  REQUIRE(g.euler_ok());
  for (const auto& v : g.vertex_list) REQUIRE(v.degree >= 2);
  const EulerBound eb = euler_lower_bound(g);
  REQUIRE(eb.bound == 4);
  REQUIRE(eb.pass);
}

TEST_CASE("axis mode carries marker vertices only") {
  Eigenfunction u = torus_mode(0, 5, TorusTrig::CosCos);
  const int res = required_nodal_resolution(torus(), u.lambda);
  const NodalGraph g = build_nodal_graph(torus(), u, res);
  REQUIRE(g.domains == 10);
  REQUIRE(g.fix_crossings == 0);
  REQUIRE(g.singular_points == 0);
  REQUIRE(g.markers == 10);
  REQUIRE(g.vertices == 10);
  REQUIRE(g.edges == 10);  // each marker closes its own loop
  REQUIRE(g.faces == 12);
  REQUIRE(g.components == 12);
  REQUIRE(g.euler_stat() == 0);
  REQUIRE(g.euler_ok());
  const EulerBound eb = euler_lower_bound(g);
  REQUIRE(eb.bound == 0);
  REQUIRE(eb.pass);
}

TEST_CASE("graph construction rejects a mode vanishing on a fix circle") {
  Eigenfunction u = torus_mode(2, 3, TorusTrig::SinSin);
  const int res = required_nodal_resolution(torus(), u.lambda);
  REQUIRE_THROWS_AS(build_nodal_graph(torus(), u, res), degenerate_trace_error);
}

TEST_CASE("tesseral sphere graph resolves crossings, saddles and poles") {
  Eigenfunction u = sphere_mode(3, 2, false);
  const int res = required_nodal_resolution(sphere(), u.lambda);
  const NodalGraph g = build_nodal_graph(sphere(), u, res);
  REQUIRE(g.domains == 8);
  // two equator hits of the fix circle plus the two poles
  REQUIRE(g.fix_crossings == 4);
  REQUIRE(g.singular_points == 6);  // 4 equator saddles + 2 poles
  REQUIRE(g.markers == 0);
  REQUIRE(g.vertices == 8);
  REQUIRE(g.edges == 18);
  REQUIRE(g.faces == 12);
  REQUIRE(g.components == 1);
  // equality case on the sphere
  REQUIRE(g.euler_stat() == 1);
  REQUIRE(g.euler_ok());
  const EulerBound eb = euler_lower_bound(g);
  REQUIRE(eb.bound == 3);
  REQUIRE(eb.pass);
}

TEST_CASE("zonal graph meets the crossing bound sharply") {
  Eigenfunction u = sphere_mode(3, 0, false);
  const int res = required_nodal_resolution(sphere(), u.lambda);
  const NodalGraph g = build_nodal_graph(sphere(), u, res);
  REQUIRE(g.domains == 4);
  REQUIRE(g.fix_crossings == 6);
  REQUIRE(g.singular_points == 0);
  REQUIRE(g.vertices == 6);
  REQUIRE(g.edges == 12);
  REQUIRE(g.faces == 8);
  REQUIRE(g.components == 1);
  REQUIRE(g.euler_stat() == 1);
  const EulerBound eb = euler_lower_bound(g);
  REQUIRE(eb.bound == 4);
  REQUIRE(eb.pass);
  REQUIRE(g.domains == eb.bound);
}

TEST_CASE("ensembles satisfy the Euler inequality and the Courant bound") {
  // Weyl: N <= (lambda/2)^2-ish on the torus; Courant gives N <= index + 1,
  // and the index of the shell is bounded by the lattice count below it.
  // Keep the cheap structural checks only.
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    EnsembleSpec spec;
    spec.surface = SurfaceKind::FlatTorus;
    spec.level = 25;
    spec.parity = Parity::Even;
    spec.seed = seed;
    Eigenfunction u = ensemble_eigenfunction(spec);
    const int res = required_nodal_resolution(torus(), u.lambda);
    const NodalGraph g = build_nodal_graph(torus(), u, res);
    REQUIRE(g.euler_ok());
    REQUIRE(euler_lower_bound(g).pass);
    for (const auto& v : g.vertex_list) REQUIRE(v.degree >= 2);
    REQUIRE(g.domains <= 200);
    REQUIRE(g.domains >= 2);
  }
  for (std::uint64_t seed : {1ull, 2ull}) {
    EnsembleSpec spec;
    spec.surface = SurfaceKind::RoundSphere;
    spec.level = 8;
    spec.parity = Parity::Even;
    spec.seed = seed;
    Eigenfunction u = ensemble_eigenfunction(spec);
    const int res = required_nodal_resolution(sphere(), u.lambda);
    const NodalGraph g = build_nodal_graph(sphere(), u, res);
    REQUIRE(g.euler_ok());
    REQUIRE(euler_lower_bound(g).pass);
    REQUIRE(g.domains >= 2);
    REQUIRE(g.domains <= 100);
  }
}

TEST_CASE("nodal report rows expose the counts") {
  Eigenfunction u = torus_mode(2, 3, TorusTrig::CosCos);
  const int res = required_nodal_resolution(torus(), u.lambda);
  const NodalReport rep = nodal_report(torus(), u, res);
  REQUIRE(rep.domains == 24);
  REQUIRE(rep.fix_crossings == 8);
  REQUIRE(rep.euler_bound == 4);
  REQUIRE(rep.euler_pass);
  REQUIRE(rep.stable);
  REQUIRE(nodal_csv_header() ==
          "id,lambda,parity,resolution,N,fix_crossings,euler_bound,stable");
  const std::string row = nodal_csv_row(rep);
  REQUIRE(row.find("torus-cc-2-3") == 0);
  REQUIRE(row.find(",24,8,4,1") != std::string::npos);
  REQUIRE(std::count(row.begin(), row.end(), ',') == 7);
}

TEST_CASE("grid sampling agrees with direct evaluation") {
  Eigenfunction u = torus_mode(1, 2, TorusTrig::CosSin);
  const GridValues g = sample_grid(torus(), u, 64);
  for (int i = 0; i < 64; i += 7)
    for (int j = 0; j < 64; j += 7) {
      const Vec2 p{(i + 0.5) / 64.0, (j + 0.5) / 64.0};
      REQUIRE(g.at(i, j) == Catch::Approx(u.value(p)).margin(1e-12));
    }
  Eigenfunction w = sphere_mode(4, 3, true);
  const GridValues gs = sample_grid(sphere(), w, 64);
  REQUIRE(gs.cols == 128);
  for (int i = 0; i < 64; i += 5)
    for (int j = 0; j < 128; j += 11) {
      const Vec2 p{(i + 0.5) * kPi / 64.0, (j + 0.5) * kTwoPi / 128.0};
      REQUIRE(gs.at(i, j) == Catch::Approx(w.value(p)).margin(1e-12));
    }
  REQUIRE(gs.north == 0.0);
  REQUIRE(gs.south == 0.0);
}
