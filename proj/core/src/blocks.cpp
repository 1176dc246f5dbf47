#include "folcoh/blocks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace folcoh::blk {

namespace {

using la::MatrixXcd;
using la::MatrixXd;
using la::VectorXd;

VectorXd eigenvalues_only(MatrixXd A) { return la::sym_eigenvalues(std::move(A)); }
VectorXd eigenvalues_only(MatrixXcd A) { return la::herm_eigenvalues(std::move(A)); }
std::pair<VectorXd, MatrixXd> eigensystem(MatrixXd A) { return la::sym_eigensystem(std::move(A)); }
std::pair<VectorXd, MatrixXcd> eigensystem(MatrixXcd A) { return la::herm_eigensystem(std::move(A)); }

std::vector<double> to_vec(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// Mirrors the classification inside audited_cut: v < tau is kernel, and a
// structurally zero spectrum (sigma_max == 0) is all kernel.
long count_above(const std::vector<double>& vals, const la::SpectralCut& cut) {
  if (cut.sigma_max == 0.0) return 0;
  long c = 0;
  for (double v : vals)
    if (v >= cut.tau) ++c;
  return c;
}

template <typename S>
std::vector<double> safe_sv(const Mat<S>& A) {
  if (A.rows() == 0 || A.cols() == 0) return {};
  return to_vec(la::singular_values(A));
}

// P_a X = X - Qb (Qb^H X) column by column
template <typename S>
Mat<S> project_antibasic(const Mat<S>& Qb, Mat<S> X) {
  if (Qb.cols() > 0 && X.size() > 0) X -= Qb * (Qb.adjoint() * X).eval();
  return X;
}

// H_k = dhat_k^H Pa_{k+1} dhat_k + Pa_k dhat_{k-1} dhat_{k-1}^H Pa_k, assembled
// from the two projected factors so the result is Hermitian PSD by construction.
// Basic vectors sit in its kernel because d preserves the basic kernels exactly.
template <typename S>
Mat<S> antibasic_laplacian(const Block<S>& b, const std::vector<Mat<S>>& Qb, int k) {
  const long dk = b.dims[k];
  Mat<S> H = Mat<S>::Zero(dk, dk);
  if (k < b.n && b.dhat[k].rows() > 0) {
    Mat<S> up = project_antibasic(Qb[k + 1], b.dhat[k]);
    H.noalias() += up.adjoint() * up;
  }
  if (k > 0 && b.dhat[k - 1].rows() > 0) {
    Mat<S> down = project_antibasic(Qb[k], b.dhat[k - 1]);
    H.noalias() += down * down.adjoint();
  }
  Mat<S> Ht = H.adjoint();
  return 0.5 * (H + Ht);
}

// Eigensystem of H with the columns below `keep` sliced off for later
// harmonic extraction. keep_floor lets the audit pass widen the slice.
template <typename S>
void eig_and_slice(Mat<S> H, double keep_floor, std::vector<double>& eig, Mat<S>& zvecs,
                   std::vector<double>& zvals) {
  auto [vals, vecs] = eigensystem(std::move(H));
  eig = to_vec(vals);
  const double wmax = vals.size() > 0 ? vals(vals.size() - 1) : 0.0;
  const double keep = std::max(keep_floor, 1e-6 * std::max(wmax, 1.0));
  long nz = 0;
  while (nz < vals.size() && vals(nz) < keep) ++nz;
  zvecs = vecs.leftCols(nz);
  zvals.assign(eig.begin(), eig.begin() + nz);
}

}  // namespace

template <typename S>
void collect(BlockWork<S>& w) {
  const Block<S>& b = w.blk;
  const int n = b.n;
  if (static_cast<int>(b.dims.size()) != n + 1 || static_cast<int>(b.dhat.size()) != n + 1 ||
      static_cast<int>(b.Chat.size()) != n + 1)
    throw std::invalid_argument("block " + b.label + ": dims/dhat/Chat need n+1 entries");
  for (int k = 0; k <= n; ++k) {
    const long rows_want = k < n ? b.dims[k + 1] : 0;
    if (b.dhat[k].cols() != b.dims[k] || b.dhat[k].rows() != rows_want)
      throw std::invalid_argument("block " + b.label + ": dhat[" + std::to_string(k) +
                                  "] has wrong shape");
    if (b.Chat[k].cols() != b.dims[k])
      throw std::invalid_argument("block " + b.label + ": Chat[" + std::to_string(k) +
                                  "] has wrong column count");
  }

  // a recount over the same blocks reuses the retained spectra
  if (w.sv_d.size() == static_cast<std::size_t>(n + 1)) return;

  w.sv_d.assign(n + 1, {});
  w.sv_C.assign(n + 1, {});
  w.sv_Cd.assign(n + 1, {});
  for (int k = 0; k <= n; ++k) {
    w.sv_d[k] = safe_sv(b.dhat[k]);
    w.sv_C[k] = safe_sv(b.Chat[k]);
    if (k >= 1 && b.Chat[k].rows() > 0 && b.dims[k - 1] > 0)
      w.sv_Cd[k] = safe_sv(Mat<S>(b.Chat[k] * b.dhat[k - 1]));
  }
}

template <typename S>
void reduce(BlockWork<S>& w, const Cuts& cuts, bool want_harmonic_vectors) {
  const Block<S>& b = w.blk;
  const int n = b.n;

  // A recount with shifted thresholds can keep the factorizations of the
  // previous pass as long as every basic-kernel split is unchanged; only the
  // counting fields follow the new cuts then. (When a harmonic slice turns
  // out too narrow for the new cuts, summarize() re-slices that one block.)
  std::vector<long> m_new(n + 1, 0);
  for (int k = 0; k <= n; ++k) {
    const long dk = b.dims[k];
    if (dk == 0) continue;
    m_new[k] = b.Chat[k].rows() == 0 ? dk : dk - count_above(w.sv_C[k], cuts.C[k]);
  }
  bool reuse = w.Qb.size() == static_cast<std::size_t>(n + 1) &&
               w.sv_B.size() == static_cast<std::size_t>(n + 1);
  for (int k = 0; k <= n && reuse; ++k) reuse = w.Qb[k].cols() == m_new[k];
  if (reuse) {
    for (int k = 0; k <= n; ++k) {
      w.R[k] = count_above(w.sv_d[k], cuts.d[k]);
      w.rank_Cd[k] = count_above(w.sv_Cd[k], cuts.Cd[k]);
      w.m[k] = m_new[k];
    }
    return;
  }

  w.R.assign(n + 1, 0);
  w.m.assign(n + 1, 0);
  w.rank_Cd.assign(n + 1, 0);
  w.Qb.assign(n + 1, Mat<S>());
  w.sv_B.assign(n + 1, {});
  w.eig_H.assign(n + 1, {});
  w.Hzero.assign(n + 1, Mat<S>());
  w.Hzero_vals.assign(n + 1, {});

  for (int k = 0; k <= n; ++k) {
    w.R[k] = count_above(w.sv_d[k], cuts.d[k]);
    w.rank_Cd[k] = count_above(w.sv_Cd[k], cuts.Cd[k]);
  }

  // Basic kernels. Pass 1 kept only the singular values, so redo the SVD here
  // instead of holding every right factor across the case-wide audit.
  for (int k = 0; k <= n; ++k) {
    const long dk = b.dims[k];
    if (dk == 0) {
      w.Qb[k] = Mat<S>(0, 0);
      continue;
    }
    if (b.Chat[k].rows() == 0) {
      w.m[k] = dk;
      w.Qb[k] = Mat<S>::Identity(dk, dk);
      continue;
    }
    auto svd = la::svd_right(Mat<S>(b.Chat[k]));
    const long rank = count_above(to_vec(svd.sv), cuts.C[k]);
    w.m[k] = dk - rank;
    w.Qb[k] = svd.V.rightCols(dk - rank);
  }

  for (int k = 0; k < n; ++k) {
    if (w.Qb[k].cols() == 0 || w.Qb[k + 1].cols() == 0) continue;
    w.sv_B[k] = safe_sv(Mat<S>(w.Qb[k + 1].adjoint() * b.dhat[k] * w.Qb[k]));
  }

  for (int k = 0; k <= n; ++k) {
    if (b.dims[k] == 0) continue;
    Mat<S> H = antibasic_laplacian(b, w.Qb, k);
    if (want_harmonic_vectors) {
      eig_and_slice(std::move(H), 0.0, w.eig_H[k], w.Hzero[k], w.Hzero_vals[k]);
    } else {
      w.eig_H[k] = to_vec(eigenvalues_only(std::move(H)));
    }
  }
}

template <typename S>
CountSummary summarize(std::vector<BlockWork<S>>& works, double rel_tau, double min_gap,
                       const std::string& context, bool want_harmonic_vectors) {
  if (works.empty()) throw std::invalid_argument("summarize(" + context + "): no blocks");
  const int n = works.front().blk.n;
  for (const auto& w : works)
    if (w.blk.n != n)
      throw std::invalid_argument("summarize(" + context + "): blocks disagree on top degree");

  for (auto& w : works) collect(w);

  auto merge = [&](auto member) {
    std::vector<std::vector<double>> per(n + 1);
    for (const auto& w : works)
      for (int k = 0; k <= n; ++k) {
        const auto& src = (w.*member)[k];
        per[k].insert(per[k].end(), src.begin(), src.end());
      }
    return per;
  };
  // Derived families (compressions and products of the primaries) can be
  // structurally zero; their SVDs then emit pure rounding noise, and a cut
  // relative to that noise would count it as rank. Each family's tau is
  // therefore floored at rel_tau times the parent scale that bounds it.
  auto cut_all = [&](const std::vector<std::vector<double>>& per, const std::string& what,
                     const std::vector<double>& floors) {
    std::vector<la::SpectralCut> cs(n + 1);
    for (int k = 0; k <= n; ++k)
      cs[k] = la::audited_cut(per[k], rel_tau, min_gap,
                              context + ": " + what + " " + std::to_string(k), true, floors[k]);
    return cs;
  };
  const std::vector<double> no_floor(n + 1, 0.0);

  Cuts cuts;
  cuts.d = cut_all(merge(&BlockWork<S>::sv_d), "rank of d, degree", no_floor);
  cuts.C = cut_all(merge(&BlockWork<S>::sv_C), "basic kernel, degree", no_floor);
  {
    std::vector<double> f(n + 1, 0.0);  // ||C_k d_{k-1}|| <= ||C_k|| ||d_{k-1}||
    for (int k = 1; k <= n; ++k) f[k] = cuts.C[k].sigma_max * cuts.d[k - 1].sigma_max;
    cuts.Cd = cut_all(merge(&BlockWork<S>::sv_Cd), "rank of C*d, degree", f);
  }

  for (auto& w : works) reduce(w, cuts, want_harmonic_vectors);

  {
    std::vector<double> f(n + 1, 0.0);  // B_k compresses d_k between basic bases
    for (int k = 0; k <= n; ++k) f[k] = cuts.d[k].sigma_max;
    cuts.B = cut_all(merge(&BlockWork<S>::sv_B), "basic coboundary, degree", f);
  }
  {
    // audit |eigenvalue| so the rounding-level negatives of the PSD assembly
    // land in the kernel cluster instead of being silently dropped
    auto per = merge(&BlockWork<S>::eig_H);
    for (auto& list : per)
      for (auto& v : list) v = std::abs(v);
    std::vector<double> f(n + 1, 0.0);  // H_k is a sum of two squared d factors
    for (int k = 0; k <= n; ++k) {
      f[k] = cuts.d[k].sigma_max * cuts.d[k].sigma_max;
      if (k > 0) f[k] += cuts.d[k - 1].sigma_max * cuts.d[k - 1].sigma_max;
    }
    cuts.H = cut_all(per, "antibasic Laplacian, degree", f);
  }

  auto zero_count = [&](const std::vector<double>& eig, int k) {
    if (cuts.H[k].sigma_max == 0.0) return static_cast<long>(eig.size());
    long z = 0;
    for (double v : eig)
      if (std::abs(v) < cuts.H[k].tau) ++z;
    return z;
  };

  // The per-block slice in reduce() used a local heuristic threshold; if the
  // audited case-wide tau asks for more columns, redo that one eigensystem.
  if (want_harmonic_vectors) {
    for (auto& w : works)
      for (int k = 0; k <= n; ++k) {
        if (w.blk.dims[k] == 0) continue;
        const long z = zero_count(w.eig_H[k], k);
        if (z > w.Hzero[k].cols())
          eig_and_slice(antibasic_laplacian(w.blk, w.Qb, k), 10.0 * cuts.H[k].tau, w.eig_H[k],
                        w.Hzero[k], w.Hzero_vals[k]);
      }
  }

  CountSummary s;
  s.n = n;
  s.dim.assign(n + 1, 0);
  s.R.assign(n + 1, 0);
  s.m.assign(n + 1, 0);
  s.e.assign(n + 2, 0);
  s.h.assign(n + 1, 0);
  s.hb.assign(n + 1, 0);
  s.ha_rank.assign(n + 1, 0);
  s.ha_harm.assign(n + 1, 0);
  s.spectra.assign(n + 1, {});

  std::vector<long> rank_B(n + 1, 0), rank_Cd(n + 1, 0), zeros_H(n + 1, 0);
  for (auto& w : works) {
    const long mult = w.blk.mult;
    for (int k = 0; k <= n; ++k) {
      s.dim[k] += mult * w.blk.dims[k];
      s.R[k] += mult * w.R[k];
      s.m[k] += mult * w.m[k];
      rank_Cd[k] += mult * w.rank_Cd[k];
      rank_B[k] += mult * count_above(w.sv_B[k], cuts.B[k]);

      const long z = zero_count(w.eig_H[k], k);
      if (z < w.m[k])
        throw std::logic_error("summarize(" + context + "): block " + w.blk.label + " degree " +
                               std::to_string(k) + " lost basic zero modes from the Laplacian");
      zeros_H[k] += mult * z;

      // antibasic spectrum: drop the basic zeros (the m smallest), keep the rest
      // (harmonic zeros included), one copy per multiplicity
      for (std::size_t i = static_cast<std::size_t>(w.m[k]); i < w.eig_H[k].size(); ++i)
        s.spectra[k].insert(s.spectra[k].end(), static_cast<std::size_t>(mult), w.eig_H[k][i]);
    }
  }
  for (int k = 0; k <= n; ++k) std::sort(s.spectra[k].begin(), s.spectra[k].end());

  for (int k = 1; k <= n; ++k) {
    s.e[k] = s.R[k - 1] - rank_Cd[k];
    if (s.e[k] < 0)
      throw std::logic_error("summarize(" + context + "): negative basic-image count at degree " +
                             std::to_string(k));
  }
  for (int k = 0; k <= n; ++k) {
    s.h[k] = s.dim[k] - s.R[k] - (k > 0 ? s.R[k - 1] : 0);
    s.hb[k] = s.m[k] - rank_B[k] - (k > 0 ? rank_B[k - 1] : 0);
    s.ha_rank[k] = s.h[k] - s.m[k] + s.e[k] + s.e[k + 1];
    s.ha_harm[k] = zeros_H[k] - s.m[k];
  }
  s.cuts = std::move(cuts);
  return s;
}

template void collect<double>(BlockWork<double>&);
template void collect<std::complex<double>>(BlockWork<std::complex<double>>&);
template void reduce<double>(BlockWork<double>&, const Cuts&, bool);
template void reduce<std::complex<double>>(BlockWork<std::complex<double>>&, const Cuts&, bool);
template CountSummary summarize<double>(std::vector<BlockWork<double>>&, double, double,
                                        const std::string&, bool);
template CountSummary summarize<std::complex<double>>(std::vector<BlockWork<std::complex<double>>>&,
                                                      double, double, const std::string&, bool);

}  // namespace folcoh::blk
