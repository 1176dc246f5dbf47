#include <doctest.h>

#include <complex>
#include <functional>

#include "folcoh/blocks.hpp"
#include "folcoh/grid.hpp"

using namespace folcoh;
using namespace folcoh::grid;

namespace {

GridSpec flat2(int nx, int ny) {
  GridSpec s;
  s.name = "flat2";
  s.leaf_dim = 1;
  s.axes = {{"x", nx, 1.0}, {"y", ny, 1.0}};
  s.metric = {"1", "0", "1"};
  s.frame = {{"1", "0"}};
  return s;
}

la::MatrixXd dense_map(long rows, long cols,
                       const std::function<VectorXd(const VectorXd&)>& f) {
  la::MatrixXd A(rows, cols);
  VectorXd e = VectorXd::Zero(cols);
  for (long j = 0; j < cols; ++j) {
    e(j) = 1.0;
    A.col(j) = f(e);
    e(j) = 0.0;
  }
  return A;
}

// One whole-space block in hat coordinates, built column by column. This is
// what the dense backend feeds the reduction; here it doubles as a reference
// implementation for the test.
blk::Block<double> whole_space_block(const GridComplex& gc, const std::vector<VectorXd>& X) {
  const int n = gc.n;
  blk::Block<double> b;
  b.label = "whole";
  b.n = n;
  b.dims.resize(n + 1);
  b.dhat.resize(n + 1);
  b.Chat.resize(n + 1);
  for (int k = 0; k <= n; ++k) b.dims[k] = gc.dim(k);

  for (int k = 0; k <= n; ++k) {
    if (k < n) {
      const auto& D = gc.d(k);
      b.dhat[k] = dense_map(gc.dim(k + 1), gc.dim(k), [&](const VectorXd& x) {
        return gc.msqrt_apply(k + 1, VectorXd(D * gc.minvsqrt_apply(k, x)));
      });
    } else {
      b.dhat[k] = la::MatrixXd(0, gc.dim(n));
    }

    const long r1 = k > 0 ? gc.dim(k - 1) : 0;   // i_X rows
    const long r2 = k < n ? gc.dim(k) : 0;       // i_X d rows
    la::MatrixXd C(r1 + r2, gc.dim(k));
    if (r1 > 0) {
      PointwiseOp ix = gc.interior_op(X, k);
      C.topRows(r1) = dense_map(r1, gc.dim(k), [&](const VectorXd& x) {
        return gc.msqrt_apply(k - 1, gc.apply(ix, gc.minvsqrt_apply(k, x)));
      });
    }
    if (r2 > 0) {
      PointwiseOp ixd = gc.interior_op(X, k + 1);
      const auto& D = gc.d(k);
      C.bottomRows(r2) = dense_map(r2, gc.dim(k), [&](const VectorXd& x) {
        return gc.msqrt_apply(k, gc.apply(ixd, VectorXd(D * gc.minvsqrt_apply(k, x))));
      });
    }
    b.Chat[k] = std::move(C);
  }
  return b;
}

}  // namespace

TEST_CASE("whole-space block on the flat torus with unit flow along x") {
  auto gc = GridComplex::build(flat2(8, 8));
  VectorXd ex(2);
  ex << 1.0, 0.0;
  std::vector<VectorXd> X(gc.npts, ex);

  std::vector<blk::BlockWork<double>> works(1);
  works[0].blk = whole_space_block(gc, X);
  auto s = blk::summarize(works, 1e-8, 1e3, "flat2 flow", true);

  // basic forms: functions f(y), one-forms f(y) dy, nothing in degree two
  CHECK(s.dim == std::vector<long>({64, 128, 64}));
  CHECK(s.h == std::vector<long>({1, 2, 1}));
  CHECK(s.m == std::vector<long>({8, 8, 0}));
  CHECK(s.hb == std::vector<long>({1, 1, 0}));
  // e_1 counts the exact one-forms df that happen to be basic: f = f(y) mod constants
  CHECK(s.e == std::vector<long>({0, 7, 0, 0}));
  CHECK(s.ha_rank == std::vector<long>({0, 1, 1}));
  CHECK(s.ha_harm == std::vector<long>({0, 1, 1}));

  for (int k = 0; k <= 2; ++k) {
    CHECK(static_cast<long>(s.spectra[k].size()) == s.dim[k] - s.m[k]);
    // spectra keep the antibasic harmonic zeros and drop the basic ones
    long z = 0;
    for (double v : s.spectra[k])
      if (v < s.cuts.H[k].tau) ++z;
    CHECK(z == s.ha_harm[k]);
    CHECK(std::is_sorted(s.spectra[k].begin(), s.spectra[k].end()));
  }

  // harmonic slices hold at least the zero cluster, orthonormal columns
  auto& w = works[0];
  CHECK(w.Hzero[1].cols() >= s.m[1] + s.ha_harm[1]);
  la::MatrixXd gram = w.Hzero[1].transpose() * w.Hzero[1];
  CHECK((gram - la::MatrixXd::Identity(gram.rows(), gram.cols())).norm() < 1e-12);

  // the nonzero antibasic spectrum starts at the lattice eigenvalue of the
  // slowest x-mode, 4 sin^2(pi/8) * 64
  double first = 0.0;
  for (double v : s.spectra[1])
    if (v >= s.cuts.H[1].tau) {
      first = v;
      break;
    }
  CHECK(first == doctest::Approx(4.0 * std::pow(std::sin(M_PI / 8), 2) * 64.0).epsilon(1e-12));
}

TEST_CASE("complex scalar path and multiplicity weighting") {
  auto gc = GridComplex::build(flat2(6, 6));
  VectorXd ex(2);
  ex << 1.0, 0.0;
  std::vector<VectorXd> X(gc.npts, ex);
  auto br = whole_space_block(gc, X);

  blk::Block<std::complex<double>> bc;
  bc.label = br.label;
  bc.n = br.n;
  bc.mult = 3;
  bc.dims = br.dims;
  for (auto& m : br.dhat) bc.dhat.push_back(m.cast<std::complex<double>>());
  for (auto& m : br.Chat) bc.Chat.push_back(m.cast<std::complex<double>>());

  std::vector<blk::BlockWork<std::complex<double>>> works(1);
  works[0].blk = std::move(bc);
  auto s = blk::summarize(works, 1e-8, 1e3, "flat2 flow x3");

  CHECK(s.h == std::vector<long>({3, 6, 3}));
  CHECK(s.m == std::vector<long>({18, 18, 0}));
  CHECK(s.hb == std::vector<long>({3, 3, 0}));
  CHECK(s.ha_rank == std::vector<long>({0, 3, 3}));
  CHECK(s.ha_harm == std::vector<long>({0, 3, 3}));
  CHECK(static_cast<long>(s.spectra[1].size()) == s.dim[1] - s.m[1]);
}

TEST_CASE("block shape validation") {
  auto gc = GridComplex::build(flat2(4, 4));
  VectorXd ex(2);
  ex << 1.0, 0.0;
  std::vector<VectorXd> X(gc.npts, ex);
  auto b = whole_space_block(gc, X);
  b.dhat[0] = la::MatrixXd::Zero(3, 5);

  std::vector<blk::BlockWork<double>> works(1);
  works[0].blk = std::move(b);
  CHECK_THROWS_AS(blk::summarize(works, 1e-8, 1e3, "bad shapes"), std::invalid_argument);

  std::vector<blk::BlockWork<double>> none;
  CHECK_THROWS_AS(blk::summarize(none, 1e-8, 1e3, "empty"), std::invalid_argument);
}
