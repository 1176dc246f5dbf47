#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "folcoh/blocks.hpp"
#include "folcoh/foliation.hpp"
#include "folcoh/grid.hpp"
#include "folcoh/su2.hpp"

using namespace folcoh;
using namespace folcoh::grid;
using namespace folcoh::fol;

namespace {

const double kPhi = 1.6180339887498949;
const double kLambda = 2.6180339887498949;

GridSpec carriere_like(int nf, int nt) {
  GridSpec s;
  s.name = "carriere-small";
  s.leaf_dim = 1;
  s.axes = {{"x", nf, 1.0}, {"y", nf, 1.0}, {"t", nt, 1.0}};
  s.monodromy_axis = 2;
  s.fiber_axes = {0, 1};
  s.deck << 1, -1, -1, 2;
  s.metric = {"(phi^2*lambda^(-2*t) + lambda^(2*t))/(phi+2)",
              "phi*(lambda^(-2*t) - lambda^(2*t))/(phi+2)",
              "0",
              "(lambda^(-2*t) + phi^2*lambda^(2*t))/(phi+2)",
              "0",
              "1"};
  s.frame = {{"lambda^t*phi/sqrt(phi+2)", "lambda^t/sqrt(phi+2)", "0"}};
  s.constants = {{"phi", kPhi}, {"lambda", kLambda}};
  return s;
}

// euclidean 3-torus with a flow that bends inside a strip; two axes invariant
GridSpec bump3(int nx, int nz) {
  GridSpec s;
  s.name = "bump3-small";
  s.leaf_dim = 1;
  s.axes = {{"x", nx, 1.0}, {"y", nx, 1.0}, {"z", nz, 1.0}};
  s.metric = {"1", "0", "0", "1", "0", "1"};
  s.frame = {{"0.9*sin(pi*x)^2", "sqrt(1 - (0.9*sin(pi*x)^2)^2)", "0"}};
  return s;
}

// 2-torus flow whose drift 0.9 sin(pi x)^2 acts on (0,1) and is switched off
// on [1,2]; the switch is the exact step ((u + |u|) / (2|u| + tiny)) at
// u = |x - 1.5| - 1/2, which is 1 on the open strip and 0 elsewhere.
GridSpec half_pinned(int nx, int ns) {
  GridSpec s;
  s.name = "half-pinned";
  s.leaf_dim = 1;
  s.axes = {{"x", nx, 2.0}, {"s", ns, 1.0}};
  s.metric = {"1", "0", "1"};
  std::string ind =
      "((abs(x-1.5)-0.5+abs(abs(x-1.5)-0.5))/(2*abs(abs(x-1.5)-0.5)+tiny))";
  std::string drift = "0.9*sin(pi*x)^2*" + ind;
  s.frame = {{drift, "sqrt(1 - (" + drift + ")^2)"}};
  s.constants = {{"tiny", 1e-300}};
  return s;
}

GridSpec linear3(int N) {
  GridSpec s;
  s.name = "linear3-small";
  s.leaf_dim = 1;
  s.axes = {{"x", N, 1.0}, {"y", N, 1.0}, {"z", N, 1.0}};
  s.metric = {"1", "0", "0", "1", "0", "1"};
  s.frame = {{"1", "sqrt(2)", "sqrt(3)"}};
  return s;
}

// flow of the z axis against a product metric with a curl-bearing shift: the
// flow acts by isometries (bundle-like, mean curvature basic), phi0 != 0, and
// the basic forms are resolved smooth fields, so the continuum identities
// carry genuinely nonzero content on both sides
GridSpec kshift(int N) {
  GridSpec s;
  s.name = "kshift";
  s.leaf_dim = 1;
  s.axes = {{"x", N, 1.0}, {"y", N, 1.0}, {"z", N, 1.0}};
  s.metric = {"1",
              "0",
              "-(0.4*sin(2*pi*y))",
              "1",
              "-(0.4*cos(2*pi*x))",
              "(0.4*sin(2*pi*y))^2 + (0.4*cos(2*pi*x))^2 + 1"};
  s.frame = {{"0", "0", "1"}};
  return s;
}

// flat metric, direction field spinning with z; chi, kappa, phi0 have
// elementary closed forms that pin the assembly's discretization error
GridSpec twist3(int N) {
  GridSpec s;
  s.name = "twist3";
  s.leaf_dim = 1;
  s.axes = {{"x", N, 1.0}, {"y", N, 1.0}, {"z", N, 1.0}};
  s.metric = {"1", "0", "0", "1", "0", "1"};
  s.frame = {{"cos(2*pi*z)", "sin(2*pi*z)", "0.5"}};
  return s;
}

std::map<std::string, double> by_name(const std::vector<IdentityResult>& rs) {
  std::map<std::string, double> m;
  for (const auto& r : rs) m[r.name] = r.residual;
  return m;
}

}  // namespace

TEST_CASE("flow forms on the hyperbolic mapping torus: kappa is exact and basic") {
  auto G = GridComplex::build(carriere_like(6, 4));
  FlowForms F = flow_forms(G);
  const double h = G.h[2];
  const double c = (1.0 - std::pow(kLambda, -h)) / h;

  // kappa = c dt at every point, with c the discrete log of the dilation
  for (long pt = 0; pt < G.npts; ++pt) {
    CHECK(std::abs(F.kappa.a[pt * 3 + 0]) < 1e-12);
    CHECK(std::abs(F.kappa.a[pt * 3 + 1]) < 1e-12);
    CHECK(F.kappa.a[pt * 3 + 2] == doctest::Approx(c).epsilon(1e-12));
  }
  CHECK(c == doctest::Approx(std::log(kLambda)).epsilon(2.0 * h));

  // i_X phi0 vanishes identically, not just in the limit
  VectorXd ixphi = G.apply(G.interior_op(F.X, 2), F.phi0.a);
  CHECK(ixphi.cwiseAbs().maxCoeff() < 1e-13);

  // the gluing map is an isometry of the fiber metric family, so the engine
  // must fall back to the dense path
  FlowEngine eng = FlowEngine::build(G);
  CHECK(eng.kind() == EngineKind::Dense);
  CHECK(eng.kappa_a_norm() < 1e-10);
}

TEST_CASE("engine selection and projector sanity on separable grids") {
  auto G = GridComplex::build(bump3(8, 4));
  FlowEngine eng = FlowEngine::build(G);
  CHECK(eng.kind() == EngineKind::Fourier);
  CHECK(eng.invariant_axes() == std::vector<int>{1, 2});

  // Pb is an M-orthogonal idempotent on every degree
  for (int k = 0; k <= 3; ++k) {
    VectorXd v = G.smooth_test_form(k, 5).a;
    VectorXd pv = eng.Pb(k, v);
    CHECK((eng.Pb(k, pv) - pv).norm() < 1e-10 * std::max(1.0, pv.norm()));
    VectorXd w = G.smooth_test_form(k, 9).a;
    CHECK(eng.inner(k, pv, w) == doctest::Approx(eng.inner(k, v, eng.Pb(k, w))).epsilon(1e-10));
  }

  CHECK_THROWS_AS(FlowEngine::build(GridComplex::build(carriere_like(6, 4)), 1e-8, 1e3,
                                    EngineKind::Fourier),
                  ValidationError);
}

TEST_CASE("homogeneous backend satisfies the full identity catalogue exactly") {
  // round transverse metric: the flow's holonomy is an isometry of the
  // normal plane, so the projector commutator formulas hold on the nose
  su2::BergerComplex bc(1.0, 1.0, 0.7, 3);
  Ops<Cplx> ops = make_ops(bc);
  CHECK(ops.kappa_basic);
  auto results = identity_suite(ops, /*all_exact=*/true, 1);
  CHECK(results.size() > 60);
  std::set<std::string> seen;
  for (const auto& r : results) {
    CAPTURE(r.name);
    CHECK(r.cls == "exact");
    CHECK(r.residual < 1e-10);
    CHECK(seen.insert(r.name).second);  // names are unique
  }

  // squashing the normal plane destroys holonomy invariance of the
  // transverse metric, and with it the commutator formulas; the purely
  // algebraic identities survive
  su2::BergerComplex squashed(1.0, 1.3, 0.7, 2);
  double worst_continuum = 0.0;
  for (const auto& r : identity_suite(make_ops(squashed), /*all_exact=*/false, 1)) {
    if (r.cls == "exact")
      CHECK(r.residual < 1e-10);
    else
      worst_continuum = std::max(worst_continuum, r.residual);
  }
  CHECK(worst_continuum > 1e-3);
}

TEST_CASE("grid identity suite: exact class at machine precision") {
  // bump3 bends the flow inside a strip, which shears nearby orbits apart:
  // its metric is not bundle-like, the commutator formulas genuinely fail
  // there, and only the algebraic class is owed anything
  for (const GridSpec& s : {carriere_like(6, 4), bump3(8, 4)}) {
    auto G = GridComplex::build(s);
    FlowEngine eng = FlowEngine::build(G);
    Ops<double> ops = make_ops(eng);
    auto results = identity_suite(ops, /*all_exact=*/false, 1);
    for (const auto& r : results) {
      CAPTURE(s.name);
      CAPTURE(r.name);
      if (r.cls == "exact") CHECK(r.residual < 1e-10);
    }
  }
}

TEST_CASE("grid identity suite: continuum class converges under refinement") {
  auto Gc = GridComplex::build(kshift(6));
  auto Gf = GridComplex::build(kshift(12));
  FlowEngine ec = FlowEngine::build(Gc);
  FlowEngine ef = FlowEngine::build(Gf);
  Ops<double> oc = make_ops(ec);
  Ops<double> of = make_ops(ef);
  CHECK(oc.kappa_basic);  // the discrete mean curvature lands in the basic space
  CHECK(ec.forms().phi0_max > 1.0);

  // the comparison is only meaningful if the test vectors meet the basic
  // subspace; an orthogonal draw would compare zero against zero
  for (int k = 0; k <= 2; ++k) {
    VectorXd v = oc.test_form(k, 1);
    VectorXd pb = oc.Pb(k, v);
    CHECK(std::sqrt(ec.inner(k, pb, pb) / ec.inner(k, v, v)) > 0.3);
  }

  auto coarse = by_name(identity_suite(oc, false, 1));
  int decayed = 0;
  for (const auto& r : identity_suite(of, false, 1)) {
    if (r.cls != "continuum") continue;
    const double rc = coarse.at(r.name);
    CAPTURE(r.name);
    if (rc > 1e-8) {
      CHECK(r.residual <= 0.6 * rc);
      ++decayed;
    } else {
      CHECK(r.residual < 1e-8);
    }
  }
  // both Laplacian comparisons at k = 1, 2 plus the degree-2 commutator
  CHECK(decayed >= 5);

  // The mapping torus splits into fiber momentum orbits tensored with the
  // stable/unstable eigenlines, and its basic subspace is a union of whole
  // blocks, so the continuum class is exact at any resolution; refinement
  // cannot improve on that, so assert exactness at both sizes instead.
  for (const GridSpec& s : {carriere_like(6, 4), carriere_like(10, 6)}) {
    auto G = GridComplex::build(s);
    FlowEngine eng = FlowEngine::build(G);
    Ops<double> ops = make_ops(eng);
    VectorXd v = ops.test_form(1, 1);
    VectorXd pb = ops.Pb(1, v);
    CHECK(std::sqrt(eng.inner(1, pb, pb) / eng.inner(1, v, v)) > 0.3);
    for (const auto& r : identity_suite(ops, false, 1)) {
      CAPTURE(s.axes[0].size);
      CAPTURE(r.name);
      CHECK(r.residual < 1e-10);
    }
  }
}

TEST_CASE("assembled flow forms converge first order to their closed forms") {
  // X = (cos th, sin th, 1/2), th = 2 pi z, on the flat torus; with
  // u = 1/sqrt(1 + 1/4):
  //   chi   = u (cos th dx + sin th dy + dz/2)
  //   kappa = pi u^2 (-sin th dx + cos th dy)
  //   phi0  = 2 pi u^3 (-dx^dy/2 + sin th dx^dz - cos th dy^dz)
  const double c = 0.5;
  const double u = 1.0 / std::sqrt(1.0 + c * c);
  double err_kappa[2], err_phi0[2];
  int i = 0;
  for (int N : {6, 12}) {
    auto G = GridComplex::build(twist3(N));
    FlowForms F = flow_forms(G);
    VectorXd xc(G.npts * 3), xk(G.npts * 3), xp(G.npts * 3);
    for (long pt = 0; pt < G.npts; ++pt) {
      const double th = 2.0 * M_PI * G.coords(pt)[2];
      const double s = std::sin(th), co = std::cos(th);
      xc.segment<3>(pt * 3) << u * co, u * s, u * c;
      xk.segment<3>(pt * 3) << -2.0 * M_PI * u * u * c * s, 2.0 * M_PI * u * u * c * co, 0.0;
      xp.segment<3>(pt * 3) << -2.0 * M_PI * u * u * u * c, 2.0 * M_PI * u * u * u * s,
          -2.0 * M_PI * u * u * u * co;
    }
    auto l2 = [&](int k, const VectorXd& a) { return std::sqrt(G.inner(k, a, a)); };
    CHECK(l2(1, VectorXd(F.chi.a - xc)) < 1e-12);  // pointwise algebra, no differencing
    err_kappa[i] = l2(1, VectorXd(F.kappa.a - xk));
    err_phi0[i] = l2(2, VectorXd(F.phi0.a - xp));
    ++i;
  }
  CHECK(err_kappa[0] > 0.1);
  CHECK(err_kappa[1] <= 0.65 * err_kappa[0]);
  CHECK(err_phi0[0] > 0.1);
  CHECK(err_phi0[1] <= 0.65 * err_phi0[0]);
}

TEST_CASE("basic projection of a half-pinned torus flow matches the leaf closure picture") {
  const int nx = 64, ns = 32;
  auto G = GridComplex::build(half_pinned(nx, ns));
  FlowEngine eng = FlowEngine::build(G);
  CHECK(eng.kind() == EngineKind::Fourier);
  CHECK(eng.invariant_axes() == std::vector<int>{1});

  // columns x in [1,2) plus x = 0 carry no drift; orbits sweep (0,1) whole
  CHECK(eng.basic_dim(0) == 33);

  VectorXd v(G.npts);
  for (long pt = 0; pt < G.npts; ++pt) v[pt] = std::sin(M_PI * G.coords(pt)[0]);
  VectorXd pv = eng.Pb(0, v);

  double tied = 0;  // weighted average of sin over the swept strip
  for (int j = 1; j <= 32; ++j) tied += std::sin(M_PI * (2.0 * j / nx));
  tied /= 32.0;

  for (long pt = 0; pt < G.npts; ++pt) {
    double x = G.coords(pt)[0];
    long j = std::lround(x * nx / 2.0);
    CAPTURE(x);
    if (j >= 1 && j <= 32)
      CHECK(pv[pt] == doctest::Approx(tied).epsilon(1e-9));
    else
      CHECK(pv[pt] == doctest::Approx(std::sin(M_PI * x)).epsilon(1e-9));
  }
  CHECK(tied == doctest::Approx(2.0 / M_PI).epsilon(0.005));
}

TEST_CASE("wave-split and dense reductions agree on all counts") {
  auto G = GridComplex::build(linear3(6));
  FlowEngine fe = FlowEngine::build(G);
  FlowEngine de = FlowEngine::build(G, 1e-8, 1e3, EngineKind::Dense);
  CHECK(fe.kind() == EngineKind::Fourier);
  CHECK(de.kind() == EngineKind::Dense);

  for (int k = 0; k <= 3; ++k) CHECK(fe.basic_dim(k) == de.basic_dim(k));

  // the two projectors are the same operator
  for (int k = 0; k <= 3; ++k) {
    VectorXd v = G.smooth_test_form(k, 3).a;
    CHECK((fe.Pb(k, v) - de.Pb(k, v)).norm() < 1e-9 * std::max(1.0, v.norm()));
  }

  auto fblocks = fe.fourier_blocks();
  std::vector<blk::BlockWork<Cplx>> fworks(fblocks.size());
  for (size_t i = 0; i < fblocks.size(); ++i) fworks[i].blk = std::move(fblocks[i]);
  auto fsum = blk::summarize(fworks, 1e-8, 1e3, "linear3 wave");

  auto dblocks = de.real_blocks();
  std::vector<blk::BlockWork<double>> dworks(dblocks.size());
  for (size_t i = 0; i < dblocks.size(); ++i) dworks[i].blk = std::move(dblocks[i]);
  auto dsum = blk::summarize(dworks, 1e-8, 1e3, "linear3 dense");

  CHECK(fsum.h == dsum.h);
  CHECK(fsum.hb == dsum.hb);
  CHECK(fsum.ha_rank == dsum.ha_rank);
  CHECK(fsum.ha_harm == dsum.ha_harm);
  CHECK(fsum.m == dsum.m);

  CHECK(fsum.h == std::vector<long>{1, 3, 3, 1});
  CHECK(fsum.hb == std::vector<long>{1, 2, 1, 0});
  CHECK(fsum.ha_rank == std::vector<long>{0, 1, 2, 1});
  CHECK(fsum.ha_harm == std::vector<long>{0, 1, 2, 1});

  // spectra agree too: same multiset of antibasic eigenvalues per degree
  for (int k = 0; k <= 3; ++k) {
    REQUIRE(fsum.spectra[k].size() == dsum.spectra[k].size());
    for (size_t i = 0; i < fsum.spectra[k].size(); ++i)
      CHECK(fsum.spectra[k][i] == doctest::Approx(dsum.spectra[k][i]).epsilon(1e-8));
  }
}
