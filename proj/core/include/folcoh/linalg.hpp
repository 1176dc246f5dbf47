// Dense symmetric/Hermitian eigensolvers and SVD on top of LAPACKE, plus the
// audited threshold machinery every rank decision in the engine goes through.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace folcoh::la {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using SparseD = Eigen::SparseMatrix<double>;

struct ThresholdError : std::runtime_error {
  std::vector<double> spectrum;  // the offending values, sorted
  double tau;
  ThresholdError(const std::string& msg, std::vector<double> spec, double t)
      : std::runtime_error(msg), spectrum(std::move(spec)), tau(t) {}
};

// Split of a nonnegative spectral value set at tau = rel_tau * max.
// The audit demands that tau sits in a wide gap: values below must stay under
// tau/margin and values above must clear tau*margin, with an overall ratio of
// at least min_gap between the two sides. This is what makes every reported
// integer invariant robust under tau -> 10*tau and tau -> tau/10.
struct SpectralCut {
  double tau = 0.0;
  double sigma_max = 0.0;
  int below = 0;
  double largest_below = 0.0;
  double smallest_above = std::numeric_limits<double>::infinity();

  double gap_ratio() const {
    if (below == 0 || largest_below == 0.0) return std::numeric_limits<double>::infinity();
    return smallest_above / largest_below;
  }
};

// `values` need not be sorted. Throws ThresholdError when `enforce` and the
// audit fails; `context` names the operator for the diagnostic.
// `scale_floor` guards derived operators (compressions, products): tau is
// taken relative to max(sigma_max, scale_floor), so a family whose true value
// is zero does not get ranked against its own rounding noise.
SpectralCut audited_cut(const std::vector<double>& values, double rel_tau, double min_gap,
                        const std::string& context, bool enforce = true, double scale_floor = 0.0);

// ---- dense solvers (LAPACK) ----

// Eigenvalues (ascending) of a symmetric / Hermitian matrix.
VectorXd sym_eigenvalues(MatrixXd A);
VectorXd herm_eigenvalues(MatrixXcd A);
// Full eigensystem: A = V diag(w) V^T (resp. V^H). Returns {w, V}.
std::pair<VectorXd, MatrixXd> sym_eigensystem(MatrixXd A);
std::pair<VectorXd, MatrixXcd> herm_eigensystem(MatrixXcd A);

// Singular values (descending, LAPACK order).
VectorXd singular_values(MatrixXd A);
VectorXd singular_values(MatrixXcd A);

// Full SVD data needed for kernel extraction: singular values plus the right
// singular vectors as columns (all n of them).
struct SvdRight {
  VectorXd sv;     // descending, length min(m,n), implicit zeros beyond
  MatrixXd V;      // n x n
};
struct SvdRightC {
  VectorXd sv;
  MatrixXcd V;
};
SvdRight svd_right(MatrixXd A);
SvdRightC svd_right(MatrixXcd A);

// Orthonormal basis (columns) of the numerical kernel of A under an audited
// cut of its singular spectrum.
MatrixXd kernel_basis(const MatrixXd& A, double rel_tau, double min_gap, const std::string& ctx);
MatrixXcd kernel_basis(const MatrixXcd& A, double rel_tau, double min_gap, const std::string& ctx);

// ---- sparse kernel extraction (shifted block inverse iteration) ----
//
// Finds an orthonormal basis of the numerical kernel of a tall sparse matrix C
// without densifying it. Ritz values from the Gram matrix are refined by
// direct residual norms ||C v|| so the audit is not limited by the squared
// conditioning of the Gram matrix.
struct SparseKernel {
  MatrixXd basis;              // n x kdim
  std::vector<double> values;  // certified singular values, all of C's lower spectrum probed
  SpectralCut cut;
};
SparseKernel sparse_kernel_basis(const SparseD& C, double rel_tau, double min_gap,
                                 const std::string& ctx, int expected_dim_hint = 16);

// Largest singular value estimate by power iteration on C^T C.
double sigma_max_estimate(const SparseD& C, int iters = 30);

}  // namespace folcoh::la
