#include "folcoh/linalg.hpp"

#include <lapacke.h>

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <random>

namespace folcoh::la {

SpectralCut audited_cut(const std::vector<double>& values, double rel_tau, double min_gap,
                        const std::string& context, bool enforce, double scale_floor) {
  SpectralCut cut;
  for (double v : values) cut.sigma_max = std::max(cut.sigma_max, v);
  cut.tau = rel_tau * std::max(cut.sigma_max, scale_floor);
  if (cut.sigma_max == 0.0) {
    // structurally zero operator: everything is kernel, the cut is trivially robust
    cut.below = static_cast<int>(values.size());
    return cut;
  }
  for (double v : values) {
    if (v < cut.tau) {
      ++cut.below;
      cut.largest_below = std::max(cut.largest_below, v);
    } else {
      cut.smallest_above = std::min(cut.smallest_above, v);
    }
  }
  bool ok = cut.gap_ratio() >= min_gap;
  // tau itself must sit clear of both clusters by a factor of 10, otherwise a
  // tenfold tau perturbation could change the count.
  if (cut.below > 0 && cut.largest_below > cut.tau / 10.0) ok = false;
  if (cut.below < static_cast<int>(values.size()) && cut.smallest_above < cut.tau * 10.0) ok = false;
  if (!ok && enforce) {
    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    throw ThresholdError("ill-conditioned spectral cut for " + context + ": gap ratio " +
                             std::to_string(cut.gap_ratio()) + " at tau " + std::to_string(cut.tau),
                         std::move(sorted), cut.tau);
  }
  return cut;
}

namespace {
void check_info(lapack_int info, const char* what) {
  if (info != 0)
    throw std::runtime_error(std::string(what) + " failed with info=" + std::to_string(info));
}
}  // namespace

VectorXd sym_eigenvalues(MatrixXd A) {
  const lapack_int n = static_cast<lapack_int>(A.rows());
  VectorXd w(n);
  if (n == 0) return w;
  check_info(LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, A.data(), n, w.data()), "dsyevd");
  return w;
}

VectorXd herm_eigenvalues(MatrixXcd A) {
  const lapack_int n = static_cast<lapack_int>(A.rows());
  VectorXd w(n);
  if (n == 0) return w;
  check_info(LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'L', n,
                            reinterpret_cast<lapack_complex_double*>(A.data()), n, w.data()),
             "zheevd");
  return w;
}

std::pair<VectorXd, MatrixXd> sym_eigensystem(MatrixXd A) {
  const lapack_int n = static_cast<lapack_int>(A.rows());
  VectorXd w(n);
  if (n == 0) return {w, A};
  check_info(LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, A.data(), n, w.data()), "dsyevd");
  return {w, std::move(A)};
}

std::pair<VectorXd, MatrixXcd> herm_eigensystem(MatrixXcd A) {
  const lapack_int n = static_cast<lapack_int>(A.rows());
  VectorXd w(n);
  if (n == 0) return {w, A};
  check_info(LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                            reinterpret_cast<lapack_complex_double*>(A.data()), n, w.data()),
             "zheevd");
  return {w, std::move(A)};
}

VectorXd singular_values(MatrixXd A) {
  const lapack_int m = static_cast<lapack_int>(A.rows());
  const lapack_int n = static_cast<lapack_int>(A.cols());
  VectorXd s(std::min(m, n));
  if (s.size() == 0) return s;
  check_info(LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'N', m, n, A.data(), m, s.data(), nullptr, m,
                            nullptr, n),
             "dgesdd");
  return s;
}

VectorXd singular_values(MatrixXcd A) {
  const lapack_int m = static_cast<lapack_int>(A.rows());
  const lapack_int n = static_cast<lapack_int>(A.cols());
  VectorXd s(std::min(m, n));
  if (s.size() == 0) return s;
  check_info(LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', m, n,
                            reinterpret_cast<lapack_complex_double*>(A.data()), m, s.data(),
                            nullptr, m, nullptr, n),
             "zgesdd");
  return s;
}

SvdRight svd_right(MatrixXd A) {
  const lapack_int m = static_cast<lapack_int>(A.rows());
  const lapack_int n = static_cast<lapack_int>(A.cols());
  SvdRight out;
  out.sv.resize(std::min<lapack_int>(m, n));
  out.V.resize(n, n);
  if (n == 0) return out;
  if (m == 0) {
    out.V.setIdentity();
    return out;
  }
  // jobz 'A' returns the complete right singular space even when m < n; U is
  // required by the interface but small enough not to matter at our sizes.
  MatrixXd U(m, m);
  MatrixXd VT(n, n);
  check_info(LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'A', m, n, A.data(), m, out.sv.data(), U.data(), m,
                            VT.data(), n),
             "dgesdd");
  out.V = VT.transpose();
  return out;
}

SvdRightC svd_right(MatrixXcd A) {
  const lapack_int m = static_cast<lapack_int>(A.rows());
  const lapack_int n = static_cast<lapack_int>(A.cols());
  SvdRightC out;
  out.sv.resize(std::min<lapack_int>(m, n));
  out.V.resize(n, n);
  if (n == 0) return out;
  if (m == 0) {
    out.V.setIdentity();
    return out;
  }
  MatrixXcd U(m, m);
  MatrixXcd VT(n, n);
  check_info(LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'A', m, n,
                            reinterpret_cast<lapack_complex_double*>(A.data()), m, out.sv.data(),
                            reinterpret_cast<lapack_complex_double*>(U.data()), m,
                            reinterpret_cast<lapack_complex_double*>(VT.data()), n),
             "zgesdd");
  out.V = VT.adjoint();
  return out;
}

namespace {
template <class Mat>
Mat kernel_from_svd(const VectorXd& sv, const Mat& V, double rel_tau, double min_gap,
                    const std::string& ctx) {
  std::vector<double> vals(static_cast<size_t>(V.cols()), 0.0);
  for (int i = 0; i < sv.size(); ++i) vals[static_cast<size_t>(i)] = sv[i];
  SpectralCut cut = audited_cut(vals, rel_tau, min_gap, ctx);
  // singular values are descending; kernel columns are the trailing ones
  return V.rightCols(cut.below);
}
}  // namespace

MatrixXd kernel_basis(const MatrixXd& A, double rel_tau, double min_gap, const std::string& ctx) {
  SvdRight s = svd_right(A);
  return kernel_from_svd(s.sv, s.V, rel_tau, min_gap, ctx);
}

MatrixXcd kernel_basis(const MatrixXcd& A, double rel_tau, double min_gap, const std::string& ctx) {
  SvdRightC s = svd_right(A);
  return kernel_from_svd(s.sv, s.V, rel_tau, min_gap, ctx);
}

double sigma_max_estimate(const SparseD& C, int iters) {
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> gauss;
  VectorXd v = VectorXd::NullaryExpr(C.cols(), [&](Eigen::Index) { return gauss(rng); });
  v.normalize();
  double s2 = 0.0;
  for (int i = 0; i < iters; ++i) {
    VectorXd w = SparseD(C.transpose()) * (C * v);
    s2 = w.norm();
    if (s2 == 0.0) return 0.0;
    v = w / s2;
  }
  return std::sqrt(s2);
}

SparseKernel sparse_kernel_basis(const SparseD& C, double rel_tau, double min_gap,
                                 const std::string& ctx, int expected_dim_hint) {
  const Eigen::Index n = C.cols();
  const double smax = sigma_max_estimate(C);
  if (smax == 0.0) {
    SparseKernel out;
    out.basis = MatrixXd::Identity(n, n);
    out.values.assign(static_cast<size_t>(n), 0.0);
    out.cut = audited_cut(out.values, rel_tau, min_gap, ctx);
    return out;
  }

  SparseD G = SparseD(C.transpose()) * C;
  // Shift well below the audited non-kernel floor (1e-5 * smax singular value
  // => 1e-10 * smax^2 Gram eigenvalue); each iteration then separates kernel
  // from the rest by at least ~1e4.
  const double shift = std::pow(1e-7 * smax, 2);
  SparseD A = G;
  for (Eigen::Index i = 0; i < n; ++i) A.coeffRef(i, i) += shift;
  A.makeCompressed();
  Eigen::SimplicialLLT<SparseD> llt(A);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("sparse Cholesky failed for " + ctx);

  std::mt19937_64 rng(0xf01c0d);
  std::normal_distribution<double> gauss;
  int block = std::max(8, expected_dim_hint + expected_dim_hint / 2 + 4);
  for (;;) {
    block = std::min<int>(block, static_cast<int>(n));
    MatrixXd X = MatrixXd::NullaryExpr(n, block, [&](Eigen::Index, Eigen::Index) { return gauss(rng); });
    for (int sweep = 0; sweep < 4; ++sweep) {
      for (int c = 0; c < block; ++c) X.col(c) = llt.solve(X.col(c));
      Eigen::HouseholderQR<MatrixXd> qr(X);
      X = qr.householderQ() * MatrixXd::Identity(n, block);
    }
    // Rayleigh-Ritz on the Gram matrix over the iterated subspace
    MatrixXd GX = G * X;
    MatrixXd T = X.transpose() * GX;
    auto [ritz, W] = sym_eigensystem(0.5 * (T + T.transpose()));
    MatrixXd Y = X * W;  // Ritz vectors, ascending Ritz values

    // Certify candidate kernel vectors by direct residuals ||C y||.
    std::vector<double> vals(static_cast<size_t>(block));
    for (int i = 0; i < block; ++i) {
      double direct = (C * Y.col(i)).norm();
      double fromritz = std::sqrt(std::max(0.0, ritz[i]));
      vals[static_cast<size_t>(i)] = std::min(direct, std::max(fromritz, 0.0));
    }
    double tau = rel_tau * smax;
    int kdim = 0;
    while (kdim < block && vals[static_cast<size_t>(kdim)] < tau) ++kdim;
    if (kdim == block && block < static_cast<int>(n)) {
      block = std::min<int>(2 * block, static_cast<int>(n));
      continue;  // kernel may extend beyond the probe block
    }
    // Feed smax into the audit so tau matches the full operator scale.
    std::vector<double> audit_vals = vals;
    audit_vals.push_back(smax);
    SparseKernel out;
    out.cut = audited_cut(audit_vals, rel_tau, min_gap, ctx);
    out.basis = Y.leftCols(kdim);
    out.values = std::move(vals);
    return out;
  }
}

}  // namespace folcoh::la
