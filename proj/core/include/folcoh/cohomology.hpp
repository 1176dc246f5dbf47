// Case runner: builds a catalog case at a resolution, reduces it to counted
// Betti tables and antibasic spectra, and evaluates the operator-level
// checks on top (Hodge splitting, theorem gates, metric independence,
// threshold robustness, invariant reduction, refinement decay).
#pragma once

#include <complex>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "folcoh/blocks.hpp"
#include "folcoh/catalog.hpp"
#include "folcoh/foliation.hpp"
#include "folcoh/grid.hpp"
#include "folcoh/su2.hpp"

namespace folcoh::coh {

using Cplx = std::complex<double>;
using Eigen::VectorXcd;
using Eigen::VectorXd;

struct RunConfig {
  std::string case_name;
  std::optional<int> n;        // transverse scale (grid) или representation truncation
  std::optional<int> n_fiber;  // glued cases: fiber resolution (alias of n)
  std::optional<int> n_t;      // glued cases: suspension-axis resolution
  std::optional<int> jmax;     // homogeneous case: spin truncation
  double rel_tau = 1e-8;
  double min_gap = 1e3;
  double identity_tol = 1e-10;
  std::string suite = "all";  // betti | identities | convergence | properties | all
  unsigned seed = 1;
  std::string out_path;  // JSON report path; the spectra CSV lands beside it
};

// A built case: the backend plus its block reduction and counted summary.
// Grid cases hold the complex and flow engine; the homogeneous case holds
// the representation-space complex. Exactly one of rwork/cwork is populated.
struct CaseComplex {
  const cat::CaseInfo* info = nullptr;  // null for ad-hoc reductions
  cat::Resolution res;
  double rel_tau = 1e-8, min_gap = 1e3;
  std::string label;

  std::unique_ptr<grid::GridComplex> G;
  std::unique_ptr<fol::FlowEngine> eng;
  std::unique_ptr<su2::BergerComplex> berger;

  std::vector<blk::BlockWork<double>> rwork;
  std::vector<blk::BlockWork<Cplx>> cwork;
  blk::CountSummary sum;

  bool homogeneous() const { return berger != nullptr; }
  int n() const { return sum.n; }
  long dim(int k) const;

  static CaseComplex build(const cat::CaseInfo& info, const cat::Resolution& res,
                           double rel_tau = 1e-8, double min_gap = 1e3);
  static CaseComplex build_grid(const grid::GridSpec& spec, double rel_tau = 1e-8,
                                double min_gap = 1e3);
};

// ---- counted tables ----
inline const std::vector<long>& betti_ordinary(const CaseComplex& C) { return C.sum.h; }
inline const std::vector<long>& betti_basic(const CaseComplex& C) { return C.sum.hb; }
inline const std::vector<long>& betti_antibasic(const CaseComplex& C) { return C.sum.ha_rank; }
inline const std::vector<long>& betti_antibasic_harmonic(const CaseComplex& C) {
  return C.sum.ha_harm;
}

// First `count` antibasic Laplacian eigenvalues at degree k (ascending,
// harmonic zeros included, basic zeros excluded). Cross-checks the zero
// multiplicity against the harmonic count and, on blocks small enough to
// re-factor, the eigenpair residuals.
std::vector<double> spectrum(const CaseComplex& C, int k, int count);

// M-orthogonal splitting of an antibasic k-form: omega = exact + coexact +
// harmonic under the antibasic differential pair. Throws ValidationError when
// omega has a basic component beyond tol.
template <typename Scalar>
struct HodgeParts {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> exact, coexact, harmonic;
  int iters_exact = 0, iters_coexact = 0;
};
HodgeParts<double> hodge_decompose(const CaseComplex& C, int k, const VectorXd& omega,
                                   double tol = 1e-10);
HodgeParts<Cplx> hodge_decompose(const CaseComplex& C, int k, const VectorXcd& omega,
                                 double tol = 1e-10);

// ---- checks ----

struct PropertyRow {
  std::string name;
  std::string status;  // "pass" | "fail" | "skipped"
  std::string reason;  // gate justification for skips, offending data for fails
  std::string detail;  // measured numbers
};

struct Discrepancy {
  std::string table;  // "h" | "h_b" | "h_a"
  int degree = 0;
  long computed = 0;
  int expected = 0;
  std::string source;
  std::string note;
};

// Every theorem gate plus the internal consistency battery, one row each.
// Rows that do not apply are skipped with a machine-readable reason.
std::vector<PropertyRow> property_checks(CaseComplex& C, double identity_tol, unsigned seed);

// Basic harmonic representatives at degree r wedged into antibasic (r+1)-forms:
// checks near-harmonicity and linear independence of the images.
PropertyRow chi_wedge_harmonic(const CaseComplex& C, int r, double identity_tol);

// The antibasic Laplacian quadratic form against the ordinary one plus the
// invariance-defect correction on antibasic 1-forms.
PropertyRow quadratic_form_check(const CaseComplex& C, double identity_tol, unsigned seed);

// Zero-mode restriction along an invariant circle axis. Asserts (hard) that
// all four Betti vectors survive and that every form-space dimension divides
// by exactly the axis size.
CaseComplex invariant_reduction(const CaseComplex& C, int axis);

// Recount with a scaled threshold, reusing the retained factorizations.
blk::CountSummary recount(CaseComplex& C, double rel_tau);

// Betti tables of base and perturbed-metric builds must agree; the
// metric-change map must intertwine the codifferentials exactly.
PropertyRow metric_independence(const CaseComplex& base, const CaseComplex& pert,
                                double identity_tol, unsigned seed);

struct ConvergenceRow {
  std::string name;
  int degree = 0;
  std::string cls;
  double coarse = 0, fine = 0;
};
// Identity residuals at a case-specific coarse/fine resolution pair. The
// fine build can be shared with the main run via `fine_hint`.
std::vector<ConvergenceRow> convergence_rows(const cat::CaseInfo& info, unsigned seed,
                                             const CaseComplex* fine_hint = nullptr);

// ---- report ----

struct IdentityRow {
  std::string name;
  int degree = 0;
  double residual = 0;
  std::string cls;
};

struct CohomologyReport {
  std::string case_name;
  bool homogeneous = false;
  bool bundle_like = false;
  grid::CaseFlags flags;
  std::map<std::string, int> resolution;
  double rel_tau = 0, min_gap = 0, identity_tol = 0;
  double observed_min_gap = 0;  // smallest audited gap ratio across all cuts
  unsigned seed = 1;
  std::vector<long> h, h_b, h_a_rank, h_a_harmonic;
  std::vector<std::vector<double>> spectra;  // per degree, leading entries
  std::vector<IdentityRow> identities;
  std::vector<ConvergenceRow> convergence;
  std::vector<PropertyRow> properties;
  std::vector<Discrepancy> discrepancies;
  std::vector<std::string> hard_failures;
  int exit_code = 0;  // 0 clean, 2 hard failure, 3 flagged discrepancy only
};

CohomologyReport run_case(const RunConfig& cfg);

}  // namespace folcoh::coh
