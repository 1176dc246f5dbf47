// Grid backend: differential forms on flat torus quotients, including mapping
// tori glued by an integral linear map. Forms are coordinate-coframe
// coefficient tables over the vertex lattice; d is the cubical coboundary in
// component form (forward differences), which is exactly nilpotent.
//
// Across a twisted wrap the complex is the algebraic mapping torus of the
// fiber complex: the gluing diffeomorphism enters as a cellular-approximation
// chain map (vertex permutation, staircase edge paths, winding-number
// plaquette fills), so d^2 = 0 survives the seam exactly.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "folcoh/expr.hpp"
#include "folcoh/multiindex.hpp"

namespace folcoh::grid {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using SparseD = Eigen::SparseMatrix<double>;

struct AxisSpec {
  std::string name = "x";
  int size = 0;
  double length = 1.0;
};

struct CaseFlags {
  bool riemannian = false;
  bool taut = false;
  bool involutive_normal = false;
  bool basic_mean_curvature = false;
};

struct GridSpec {
  std::string name;
  int leaf_dim = 1;
  std::vector<AxisSpec> axes;
  // Monodromy: when `monodromy_axis` wraps, fiber coordinates are glued by the
  // integral matrix `deck` (u, L_t) ~ (deck * u, 0) on the cover.
  int monodromy_axis = -1;
  std::array<int, 2> fiber_axes{-1, -1};
  Eigen::Matrix2i deck = Eigen::Matrix2i::Identity();
  // Upper-triangle metric entries g_ij (i <= j, row-major) as DSL strings.
  std::vector<std::string> metric;
  // leaf_dim rows of n DSL strings each.
  std::vector<std::vector<std::string>> frame;
  expr::Env constants;  // extra DSL constants; "pi" is always available
  CaseFlags flags;

  int dim() const { return static_cast<int>(axes.size()); }
  static GridSpec from_json(const std::string& text);
  std::string to_json() const;
};

struct FormField {
  int k = 0;
  VectorXd a;
};

// A pointwise (zeroth-order) operator: one small matrix per grid point.
struct PointwiseOp {
  int kin = 0, kout = 0;
  std::vector<MatrixXd> blk;  // npts blocks, each dim(kout) x dim(kin)
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class GridComplex {
 public:
  static GridComplex build(const GridSpec& spec);

  // --- shape ---
  int n = 0, p = 0, q = 0;
  std::vector<int> N;
  std::vector<double> h;
  long npts = 0;
  mi::Table table{1};
  GridSpec spec;

  long dim(int k) const { return (k < 0 || k > n) ? 0 : npts * table.dim(k); }
  long pt_index(const std::vector<int>& u) const;
  std::vector<double> coords(long pt) const;

  // --- metric data ---
  const MatrixXd& metric_at(long pt) const { return g_pt_[pt]; }
  double cell_volume() const { return cellvol_; }
  double total_volume() const;

  // mass operator (block-diagonal Lambda^k Gramian of g^{-1} * sqrt(det g) * cell volume)
  VectorXd mass_apply(int k, const VectorXd& x) const;
  VectorXd mass_solve(int k, const VectorXd& x) const;
  VectorXd msqrt_apply(int k, const VectorXd& x) const;
  VectorXd minvsqrt_apply(int k, const VectorXd& x) const;
  double inner(int k, const VectorXd& x, const VectorXd& y) const;

  // --- operators ---
  const SparseD& d(int k) const;               // degree k -> k+1 (empty matrix at k = n)
  VectorXd codifferential(int k, const VectorXd& x) const;  // k -> k-1
  VectorXd star(int k, const VectorXd& x) const;            // k -> n-k, pointwise
  PointwiseOp interior_op(const std::vector<VectorXd>& Xfield, int k) const;  // i_X: k -> k-1
  PointwiseOp wedge_op(const FormField& alpha, int k) const;     // alpha ^ . : k -> k+alpha.k
  PointwiseOp contract_op(const FormField& alpha, int k) const;  // metric adjoint of wedge
  VectorXd apply(const PointwiseOp& op, const VectorXd& x) const;

  // sparse assemblies of pointwise data, for building whole-space matrices
  SparseD pointwise_matrix(const PointwiseOp& op) const;
  SparseD mass_half_matrix(int k, bool inverse) const;  // M^{1/2}, or M^{-1/2}

  // frame vector fields, pointwise components (npts x n each)
  const std::vector<VectorXd>& frame_field(int j) const { return frame_[j]; }

  // metric-change map B^k = (mass')^{-1} mass between two complexes sharing a
  // grid skeleton (same axes/monodromy, different metric).
  static VectorXd metric_change(const GridComplex& from, const GridComplex& to, int k,
                                const VectorXd& x);

  // max |coefficient| of the exactly-composed d?d (grouped by spacing
  // monomial, integer arithmetic): structurally zero, returned as evidence.
  double exact_d2_max(int k) const;

  // deterministic band-limited test form, deck-compatible across the seam
  FormField smooth_test_form(int k, unsigned seed) const;
  FormField random_form(int k, std::mt19937_64& rng) const;

  // pointwise norm-squared table of a form (used for |phi0|^2 and friends)
  VectorXd pointwise_norm2(const FormField& f) const;

 private:
  double cellvol_ = 1.0;
  std::vector<MatrixXd> g_pt_;       // n x n per point
  std::vector<double> sqrtdetg_;
  // per degree: per-point mass / sqrt / invsqrt blocks
  std::vector<std::vector<MatrixXd>> mass_, msqrt_, minvsqrt_;
  std::vector<std::vector<MatrixXd>> gram0_;  // Lambda^k(g^{-1}) without volume factors
  std::vector<std::vector<VectorXd>> frame_;  // p fields, each npts of n-vectors... stored [j][pt]
  mutable std::vector<SparseD> d_;

  // monodromy data
  int t_axis_ = -1;
  std::array<int, 2> fib_{-1, -1};
  Eigen::Matrix2i deckA_ = Eigen::Matrix2i::Identity();
  Eigen::Matrix2i deckV_ = Eigen::Matrix2i::Identity();  // A^{-1}, the gluing used upward
  struct TransferTerm {
    Eigen::Vector2i offset;
    unsigned fmask;  // local fiber mask of the image cell type
    int coeff;
  };
  std::array<std::vector<TransferTerm>, 4> ttab_;  // indexed by local fiber mask

  void build_transfer_tables();
  void assemble_d() const;
  // neighbors of (pt, component mask) in +axis direction, with transfer coefficients
  struct Shifted {
    long pt;
    unsigned mask;
    double coeff;
  };
  void shifted_cells(long pt, unsigned mask, int axis, std::vector<Shifted>& out) const;
  friend class GridAudit;
};

}  // namespace folcoh::grid
