// Isotypic-block reductions shared by every backend. A backend splits its
// cochain complex into blocks (Fourier frequencies, representation labels, or
// one whole-space block) and hands over hat-coordinate matrices:
//
//   dhat[k] = M_{k+1}^{1/2} d_k M_k^{-1/2}     (so adjoints are transposes)
//   Chat[k] = hat-weighted tangential constraint rows [i_X ; i_X d]
//
// The reduction then counts, per degree and with thresholds audited across
// all blocks of a case at once:
//   R_k    rank of dhat_k
//   m_k    dim of the basic subspace (kernel of Chat_k)
//   e_k    dim of (image of dhat_{k-1}) meeting the basic subspace
//   h^k    ordinary Betti number
//   h_b^k  basic Betti number (from d restricted to the basic kernels)
//   h_a^k  antibasic Betti number, via rank counting and independently via
//          the zero cluster of the antibasic Laplacian
#pragma once

#include <complex>
#include <string>
#include <vector>

#include "folcoh/linalg.hpp"

namespace folcoh::blk {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <typename S>
struct Block {
  std::string label;
  int n = 0;
  int mult = 1;  // how many copies of this block the real complex contains
  std::vector<long> dims;      // n+1 entries
  std::vector<Mat<S>> dhat;    // n+1 entries, dhat[n] has zero rows
  std::vector<Mat<S>> Chat;    // n+1 entries
};

// per-block scratch: raw spectra from the svd/eig passes plus kernel bases
template <typename S>
struct BlockWork {
  Block<S> blk;
  std::vector<std::vector<double>> sv_d, sv_C, sv_Cd;  // first pass
  std::vector<Mat<S>> Qb;                              // basic kernel bases (hat coords)
  std::vector<std::vector<double>> sv_B;               // basic coboundary blocks
  std::vector<std::vector<double>> eig_H;              // antibasic Laplacian spectra
  std::vector<Mat<S>> Hzero;       // low-lying eigenvectors of H (zero-cluster superset)
  std::vector<std::vector<double>> Hzero_vals;
  std::vector<long> R, m;
  std::vector<long> rank_Cd, rank_B;
};

struct Cuts {
  std::vector<la::SpectralCut> d, C, Cd, B, H;
};

struct CountSummary {
  int n = 0;
  std::vector<long> dim, R, m;
  std::vector<long> e;  // n+2 entries, e[0] = e[n+1] = 0
  std::vector<long> h, hb, ha_rank, ha_harm;
  std::vector<std::vector<double>> spectra;  // antibasic spectra per degree, sorted, basic zeros removed
  Cuts cuts;
};

// first pass: singular values of dhat, Chat and Chat*dhat
template <typename S>
void collect(BlockWork<S>& w);

// second pass with case-wide cuts for d and C: kernel bases, basic coboundary
// blocks, antibasic Laplacian spectra (+ low-lying eigenvectors if requested)
template <typename S>
void reduce(BlockWork<S>& w, const Cuts& cuts, bool want_harmonic_vectors);

// run both passes over all blocks of a case and assemble the global counts
template <typename S>
CountSummary summarize(std::vector<BlockWork<S>>& works, double rel_tau, double min_gap,
                       const std::string& context, bool want_harmonic_vectors = false);

}  // namespace folcoh::blk
