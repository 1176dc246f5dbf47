// Spectral backend for the unit-quaternion group with a left-invariant
// diagonal metric and the flow along the third frame field. Scalars split
// into matrix coefficients of the irreducible representations: the row index
// is inert (pure multiplicity) and every operator we need acts on the column
// index within a single irrep. All matrices here are therefore exact up to
// rounding; truncation in the representation ladder only limits which fields
// can be represented, never the operators acting on them.
//
// Frame conventions: E_1, E_2, E_3 are the left-invariant fields with
// [E_a, E_b] = 2 eps_abc E_c, sigma^i the dual coframe, e^i = a_i sigma^i the
// orthonormal coframe of g = sum a_i^2 sigma^i x sigma^i. The flow field is
// X = E_3 / a_3, chi = e^3, kappa = 0, phi0 = d chi = -2 a3/(a1 a2) e^1^e^2.
#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "folcoh/blocks.hpp"
#include "folcoh/linalg.hpp"
#include "folcoh/multiindex.hpp"

namespace folcoh::su2 {

using Cplx = std::complex<double>;
using Mat = la::MatrixXcd;
using Vec = la::VectorXcd;

// Action of E_axis on the column index at spin j2/2: -2i J_axis, sized j2+1.
Mat rep_generator(int j2, int axis);

class BergerComplex {
 public:
  // a1, a2, a3 are the coframe scales; two_jmax is twice the highest retained
  // spin (so the scalar mode count is sum_{d=1}^{two_jmax+1} d^2).
  BergerComplex(double a1, double a2, double a3, int two_jmax);

  int n() const { return 3; }
  int two_jmax() const { return two_jmax_; }
  double scale(int i) const { return a_[i]; }
  double volume() const;
  long scalar_modes() const;
  long dim(int k) const;

  // one block per irrep, multiplicity 2j+1, already in hat coordinates
  // (the mass is a scalar within each block, so it cancels)
  std::vector<blk::Block<Cplx>> blocks() const;

  // dense direct-sum operators over all retained irreps
  Mat d(int k) const;             // k -> k+1
  Mat delta(int k) const;         // k -> k-1, exact mass adjoint of d
  Mat ix(int k) const;            // interior product with X, k -> k-1
  Mat wedge_chi(int k) const;     // k -> k+1
  Mat contract_chi(int k) const;  // mass adjoint of wedge_chi (== ix)
  Mat wedge_phi0(int k) const;    // k -> k+2
  Mat contract_phi0(int k) const;
  Mat basic_projector(int k) const;  // mass-orthogonal, built per irrep

  Eigen::VectorXd mass_diag(int k) const;
  Vec chi_vec() const;   // chi as a one-form coefficient vector (j = 0 part)
  Vec phi0_vec() const;  // phi0 as a two-form coefficient vector

 private:
  double a_[3];
  int two_jmax_ = 0;
  mi::Table table_;

  // per-irrep blocks on the column index; layout is slot * (j2+1) + column
  Mat d_block(int j2, int k) const;
  Mat ix_block(int j2, int k) const;
  Mat wedge_block(int j2, int k, unsigned wmask, double coeff) const;
  Mat constraint_block(int j2, int k) const;  // rows [i_X ; i_X d]
  Mat assemble(int kin, int kout, const std::function<Mat(int)>& per_irrep) const;
};

}  // namespace folcoh::su2
