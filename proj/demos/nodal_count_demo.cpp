// Counts nodal domains for a few explicit torus modes and one random shell
// eigenfunction, and prints the graph statistics behind the Euler bound.

#include <cstdio>

#include "lab/nodal.hpp"
#include "lab/spectra.hpp"

using namespace lab;

static void show(const SurfaceModel& m, const Eigenfunction& u) {
  const int res = required_nodal_resolution(m, u.lambda);
  const NodalReport r = nodal_report(m, u, res);
  std::printf("%-24s lambda=%8.3f res=%5d N=%4d crossings=%3d bound=%3d %s %s\n",
              r.id.c_str(), r.lambda, r.resolution, r.domains, r.fix_crossings,
              r.euler_bound, r.euler_pass ? "euler-ok" : "EULER-FAIL",
              r.stable ? "stable" : "UNSTABLE");
}

int main() {
  const SurfaceModel torus = make_surface(SurfaceKind::FlatTorus);
  const SurfaceModel sphere = make_surface(SurfaceKind::RoundSphere);

  std::printf("product modes: N = 4kl on the torus, l+1 for zonal harmonics\n");
  show(torus, torus_mode(2, 3, TorusTrig::CosCos));
  show(torus, torus_mode(5, 5, TorusTrig::CosCos));
  show(sphere, sphere_mode(6, 0, false));

  std::printf("\nrandom even eigenfunctions on the shell n = 325\n");
  for (std::uint64_t seed = 1; seed <= 3; ++seed)
    show(torus, ensemble_eigenfunction({SurfaceKind::FlatTorus, 325, Parity::Even, seed}));

  std::printf("\nnodal set of sin(4*pi*x) sin(6*pi*y): the grid lines x=j/4, y=j/6\n");
  const Eigenfunction u = torus_mode(2, 3, TorusTrig::SinSin);
  std::printf("  N = %d domains\n", count_nodal_domains(torus, u, 480));
  const PolylineSet set = extract_nodal_set(torus, u, 480);
  for (std::size_t i = 0; i < set.lines.size(); ++i)
    std::printf("  path %zu: %zu points, %s\n", i, set.lines[i].points.size(),
                set.lines[i].closed ? "closed" : "open");
  return 0;
}
