#include "folcoh/su2.hpp"

#include <cmath>
#include <stdexcept>

namespace folcoh::su2 {

namespace {
constexpr double kTwoPiSq = 2.0 * M_PI * M_PI;
}

Mat rep_generator(int j2, int axis) {
  const int d = j2 + 1;
  const double j = 0.5 * j2;
  Mat Jp = Mat::Zero(d, d);
  for (int i = 0; i + 1 < d; ++i) {
    const double m = -j + i;
    Jp(i + 1, i) = std::sqrt(j * (j + 1) - m * (m + 1));
  }
  const Mat Jm = Jp.adjoint();
  const Cplx iu(0.0, 1.0);
  switch (axis) {
    case 0:
      return -iu * (Jp + Jm);  // -2i Jx
    case 1:
      return Jm - Jp;  // -2i Jy
    case 2: {
      Mat Jz = Mat::Zero(d, d);
      for (int i = 0; i < d; ++i) Jz(i, i) = -j + i;
      return -2.0 * iu * Jz;
    }
    default:
      throw std::invalid_argument("rep_generator: axis out of range");
  }
}

BergerComplex::BergerComplex(double a1, double a2, double a3, int two_jmax)
    : a_{a1, a2, a3}, two_jmax_(two_jmax), table_(3) {
  if (!(a1 > 0.0) || !(a2 > 0.0) || !(a3 > 0.0))
    throw std::invalid_argument("coframe scales must be positive");
  if (two_jmax < 0 || two_jmax > 12)
    throw std::invalid_argument("representation cutoff out of range [0, 12]");
}

double BergerComplex::volume() const { return kTwoPiSq * a_[0] * a_[1] * a_[2]; }

long BergerComplex::scalar_modes() const {
  long s = 0;
  for (int j2 = 0; j2 <= two_jmax_; ++j2) s += static_cast<long>(j2 + 1) * (j2 + 1);
  return s;
}

long BergerComplex::dim(int k) const { return scalar_modes() * mi::comb(3, k); }

Mat BergerComplex::d_block(int j2, int k) const {
  const long dj = j2 + 1;
  Mat B = Mat::Zero(mi::comb(3, k + 1) * dj, mi::comb(3, k) * dj);
  if (k < 0 || k >= 3) return B;
  for (int s = 0; s < table_.dim(k); ++s) {
    const unsigned I = table_.mask(k, s);
    for (int c = 0; c < 3; ++c) {
      if (I & (1u << c)) continue;
      const int sign = mi::merge_sign(1u << c, I);
      B.block(table_.slot(I | (1u << c)) * dj, s * dj, dj, dj) +=
          (static_cast<double>(sign) / a_[c]) * rep_generator(j2, c);
    }
  }
  if (k == 1) {
    // d e^1 = -2 a1/(a2 a3) e^2^e^3 and cyclic, written in increasing order
    const struct {
      unsigned src, dst;
      double c;
    } terms[3] = {{0b001u, 0b110u, -2.0 * a_[0] / (a_[1] * a_[2])},
                  {0b010u, 0b101u, 2.0 * a_[1] / (a_[0] * a_[2])},
                  {0b100u, 0b011u, -2.0 * a_[2] / (a_[0] * a_[1])}};
    for (const auto& t : terms)
      B.block(table_.slot(t.dst) * dj, table_.slot(t.src) * dj, dj, dj) +=
          t.c * Mat::Identity(dj, dj);
  }
  return B;
}

Mat BergerComplex::ix_block(int j2, int k) const {
  const long dj = j2 + 1;
  Mat B = Mat::Zero(mi::comb(3, k - 1) * dj, mi::comb(3, k) * dj);
  if (k <= 0 || k > 3) return B;
  for (int s = 0; s < table_.dim(k); ++s) {
    const unsigned I = table_.mask(k, s);
    if (!(I & 0b100u)) continue;
    const int sign = mi::pos_sign(I, 2);
    B.block(table_.slot(I & ~0b100u) * dj, s * dj, dj, dj) =
        static_cast<double>(sign) * Mat::Identity(dj, dj);
  }
  return B;
}

Mat BergerComplex::wedge_block(int j2, int k, unsigned wmask, double coeff) const {
  const long dj = j2 + 1;
  const int kw = mi::popcount(wmask);
  Mat B = Mat::Zero(mi::comb(3, k + kw) * dj, mi::comb(3, k) * dj);
  if (k < 0 || k > 3) return B;
  for (int s = 0; s < table_.dim(k); ++s) {
    const unsigned I = table_.mask(k, s);
    const int sign = mi::merge_sign(wmask, I);
    if (sign == 0) continue;
    B.block(table_.slot(wmask | I) * dj, s * dj, dj, dj) =
        coeff * static_cast<double>(sign) * Mat::Identity(dj, dj);
  }
  return B;
}

Mat BergerComplex::constraint_block(int j2, int k) const {
  const Mat ixk = ix_block(j2, k);
  const Mat ixd = k < 3 ? Mat(ix_block(j2, k + 1) * d_block(j2, k)) : Mat(0, ixk.cols());
  Mat C(ixk.rows() + ixd.rows(), ixk.cols());
  C.topRows(ixk.rows()) = ixk;
  C.bottomRows(ixd.rows()) = ixd;
  return C;
}

std::vector<blk::Block<Cplx>> BergerComplex::blocks() const {
  std::vector<blk::Block<Cplx>> out;
  out.reserve(two_jmax_ + 1);
  for (int j2 = 0; j2 <= two_jmax_; ++j2) {
    blk::Block<Cplx> b;
    b.label = "irrep 2j=" + std::to_string(j2);
    b.n = 3;
    b.mult = j2 + 1;
    b.dims.resize(4);
    b.dhat.resize(4);
    b.Chat.resize(4);
    for (int k = 0; k <= 3; ++k) {
      b.dims[k] = mi::comb(3, k) * (j2 + 1);
      // the mass is (volume / (2j+1)) * Id on every degree of this block, so
      // the hat change of coordinates is the identity
      b.dhat[k] = d_block(j2, k);
      b.Chat[k] = constraint_block(j2, k);
    }
    out.push_back(std::move(b));
  }
  return out;
}

Mat BergerComplex::assemble(int kin, int kout, const std::function<Mat(int)>& per_irrep) const {
  Mat A = Mat::Zero(dim(kout), dim(kin));
  long oin = 0, oout = 0;
  for (int j2 = 0; j2 <= two_jmax_; ++j2) {
    const long dj = j2 + 1;
    const Mat B = per_irrep(j2);
    for (long m = 0; m < dj; ++m)
      A.block(oout + m * B.rows(), oin + m * B.cols(), B.rows(), B.cols()) = B;
    oin += dj * B.cols();
    oout += dj * B.rows();
  }
  return A;
}

Mat BergerComplex::d(int k) const {
  return assemble(k, k + 1, [&](int j2) { return d_block(j2, k); });
}

Mat BergerComplex::delta(int k) const {
  // the scalar mass of each block cancels, so the adjoint is the plain one
  return assemble(k, k - 1, [&](int j2) { return Mat(d_block(j2, k - 1).adjoint()); });
}

Mat BergerComplex::ix(int k) const {
  return assemble(k, k - 1, [&](int j2) { return ix_block(j2, k); });
}

Mat BergerComplex::wedge_chi(int k) const {
  return assemble(k, k + 1, [&](int j2) { return wedge_block(j2, k, 0b100u, 1.0); });
}

Mat BergerComplex::contract_chi(int k) const {
  return assemble(k, k - 1, [&](int j2) { return Mat(wedge_block(j2, k - 1, 0b100u, 1.0).adjoint()); });
}

Mat BergerComplex::wedge_phi0(int k) const {
  const double c = -2.0 * a_[2] / (a_[0] * a_[1]);
  return assemble(k, k + 2, [&](int j2) { return wedge_block(j2, k, 0b011u, c); });
}

Mat BergerComplex::contract_phi0(int k) const {
  const double c = -2.0 * a_[2] / (a_[0] * a_[1]);
  return assemble(k, k - 2, [&](int j2) { return Mat(wedge_block(j2, k - 2, 0b011u, c).adjoint()); });
}

Mat BergerComplex::basic_projector(int k) const {
  return assemble(k, k, [&](int j2) {
    const Mat Qb = la::kernel_basis(constraint_block(j2, k), 1e-10, 1e3,
                                    "basic kernel of irrep 2j=" + std::to_string(j2) +
                                        " in degree " + std::to_string(k));
    return Mat(Qb * Qb.adjoint());
  });
}

Eigen::VectorXd BergerComplex::mass_diag(int k) const {
  Eigen::VectorXd m(dim(k));
  long off = 0;
  for (int j2 = 0; j2 <= two_jmax_; ++j2) {
    const long dj = j2 + 1;
    const long len = mi::comb(3, k) * dj * dj;
    m.segment(off, len).setConstant(volume() / static_cast<double>(dj));
    off += len;
  }
  return m;
}

Vec BergerComplex::chi_vec() const {
  Vec v = Vec::Zero(dim(1));
  v(table_.slot(0b100u)) = 1.0;
  return v;
}

Vec BergerComplex::phi0_vec() const {
  Vec v = Vec::Zero(dim(2));
  v(table_.slot(0b011u)) = -2.0 * a_[2] / (a_[0] * a_[1]);
  return v;
}

}  // namespace folcoh::su2
