#include <doctest.h>

#include <complex>

#include "folcoh/su2.hpp"

using namespace folcoh;
using namespace folcoh::su2;

TEST_CASE("generators: skew-adjoint and frame bracket relations") {
  for (int j2 = 0; j2 <= 4; ++j2) {
    Mat rho[3] = {rep_generator(j2, 0), rep_generator(j2, 1), rep_generator(j2, 2)};
    for (int a = 0; a < 3; ++a) CHECK((rho[a] + rho[a].adjoint()).norm() < 1e-13);
    for (int a = 0; a < 3; ++a) {
      const int b = (a + 1) % 3, c = (a + 2) % 3;
      Mat comm = rho[a] * rho[b] - rho[b] * rho[a] - 2.0 * rho[c];
      CHECK(comm.norm() < 1e-12 * (1.0 + j2));
    }
  }
}

TEST_CASE("differential: nilpotent and exactly mass-adjoint to the codifferential") {
  BergerComplex M(1.0, 1.3, 0.7, 3);
  for (int k = 0; k + 2 <= 3; ++k) {
    Mat dd = M.d(k + 1) * M.d(k);
    CHECK(dd.norm() < 1e-12 * (1.0 + M.d(k).norm() * M.d(k + 1).norm()));
  }
  for (int k = 1; k <= 3; ++k) {
    Mat adj = M.mass_diag(k - 1).cwiseInverse().asDiagonal() * M.d(k - 1).adjoint() *
              Mat(M.mass_diag(k).asDiagonal());
    CHECK((M.delta(k) - adj).norm() < 1e-12 * (1.0 + adj.norm()));
  }
}

TEST_CASE("flow one-form and leafwise two-form") {
  BergerComplex M(1.0, 1.0, 0.5, 2);
  // chi is unit and invariant: d chi = phi0, i_X chi = 1 on functions
  CHECK((M.d(1) * M.chi_vec() - M.phi0_vec()).norm() < 1e-14);
  Vec ones = M.ix(1) * M.chi_vec();
  CHECK((ones - Vec::Unit(M.dim(0), 0)).norm() < 1e-14);  // the constant function 1

  // the mean curvature of the flow vanishes: i_X d chi = 0, and phi0 is closed
  CHECK((M.ix(2) * M.phi0_vec()).norm() < 1e-14);
  CHECK((M.d(2) * M.phi0_vec()).norm() < 1e-14);

  // contraction with chi is the interior product (chi is unit)
  for (int k = 0; k <= 3; ++k) CHECK((M.ix(k) - M.contract_chi(k)).norm() < 1e-13);
}

TEST_CASE("basic projector calculus") {
  BergerComplex M(1.0, 1.0, 0.5, 2);
  for (int k = 0; k <= 3; ++k) {
    Mat Pb = M.basic_projector(k);
    CHECK((Pb * Pb - Pb).norm() < 1e-12);
    // mass self-adjoint
    Mat MP = M.mass_diag(k).asDiagonal() * Pb;
    CHECK((MP - MP.adjoint()).norm() < 1e-12);
    // image really is basic
    if (k >= 1) CHECK((M.ix(k) * Pb).norm() < 1e-12);
    if (k < 3) CHECK((M.ix(k + 1) * M.d(k) * Pb).norm() < 1e-11);
    // d preserves the basic subcomplex exactly
    if (k < 3) {
      Mat Pb1 = M.basic_projector(k + 1);
      Mat leak = (Mat::Identity(M.dim(k + 1), M.dim(k + 1)) - Pb1) * M.d(k) * Pb;
      CHECK(leak.norm() < 1e-11);
    }
  }
}

TEST_CASE("Betti tables of the flow, stable in the representation cutoff") {
  for (int two_jmax : {2, 4}) {
    BergerComplex M(1.0, 1.0, 0.5, two_jmax);
    auto bs = M.blocks();
    std::vector<blk::BlockWork<Cplx>> works(bs.size());
    for (size_t i = 0; i < bs.size(); ++i) works[i].blk = std::move(bs[i]);
    auto s = blk::summarize(works, 1e-9, 1e3, "hopf-type flow");

    CHECK(s.h == std::vector<long>({1, 0, 0, 1}));
    CHECK(s.hb == std::vector<long>({1, 0, 1, 0}));
    CHECK(s.ha_rank == std::vector<long>({0, 1, 0, 1}));
    CHECK(s.ha_harm == std::vector<long>({0, 1, 0, 1}));
    CHECK(s.dim[0] == M.scalar_modes());
  }
  CHECK(BergerComplex(1, 1, 1, 2).scalar_modes() == 14);

  // round metric gives the same tables
  BergerComplex R(1.0, 1.0, 1.0, 2);
  auto bs = R.blocks();
  std::vector<blk::BlockWork<Cplx>> works(bs.size());
  for (size_t i = 0; i < bs.size(); ++i) works[i].blk = std::move(bs[i]);
  auto s = blk::summarize(works, 1e-9, 1e3, "round flow");
  CHECK(s.h == std::vector<long>({1, 0, 0, 1}));
  CHECK(s.hb == std::vector<long>({1, 0, 1, 0}));
  CHECK(s.ha_rank == std::vector<long>({0, 1, 0, 1}));
}

TEST_CASE("constructor validation") {
  CHECK_THROWS_AS(BergerComplex(0.0, 1.0, 1.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(BergerComplex(1.0, 1.0, 1.0, -1), std::invalid_argument);
  CHECK_THROWS_AS(BergerComplex(1.0, 1.0, 1.0, 40), std::invalid_argument);
}
