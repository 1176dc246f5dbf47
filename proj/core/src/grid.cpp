#include "folcoh/grid.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

namespace folcoh::grid {

using nlohmann::json;
using folcoh::mi::merge_sign;
using folcoh::mi::pos_sign;

// ---------------------------------------------------------------------------
// GridSpec <-> JSON
// ---------------------------------------------------------------------------

GridSpec GridSpec::from_json(const std::string& text) {
  json j = json::parse(text);
  GridSpec s;
  s.name = j.value("name", "unnamed");
  s.leaf_dim = j.value("leaf_dim", 1);
  if (!j.contains("axes") || !j["axes"].is_array())
    throw ValidationError("grid spec: missing axes array");
  for (const auto& ja : j["axes"]) {
    AxisSpec ax;
    ax.name = ja.at("name").get<std::string>();
    ax.size = ja.at("size").get<int>();
    ax.length = ja.value("length", 1.0);
    s.axes.push_back(ax);
  }
  auto axis_of = [&s](const std::string& nm) {
    for (int i = 0; i < s.dim(); ++i)
      if (s.axes[i].name == nm) return i;
    throw ValidationError("grid spec: unknown axis name '" + nm + "'");
  };
  if (j.contains("monodromy")) {
    const auto& jm = j["monodromy"];
    s.monodromy_axis = axis_of(jm.at("axis").get<std::string>());
    auto fib = jm.at("fiber");
    s.fiber_axes = {axis_of(fib.at(0).get<std::string>()),
                    axis_of(fib.at(1).get<std::string>())};
    auto m = jm.at("matrix");
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) s.deck(r, c) = m.at(r).at(c).get<int>();
  }
  if (!j.contains("metric") || !j["metric"].is_array())
    throw ValidationError("grid spec: missing metric entry list");
  for (const auto& e : j["metric"]) s.metric.push_back(e.get<std::string>());
  if (j.contains("frame"))
    for (const auto& row : j["frame"]) {
      std::vector<std::string> fr;
      for (const auto& e : row) fr.push_back(e.get<std::string>());
      s.frame.push_back(fr);
    }
  if (j.contains("constants"))
    for (auto it = j["constants"].begin(); it != j["constants"].end(); ++it)
      s.constants[it.key()] = it.value().get<double>();
  if (j.contains("flags")) {
    const auto& jf = j["flags"];
    s.flags.riemannian = jf.value("riemannian", false);
    s.flags.taut = jf.value("taut", false);
    s.flags.involutive_normal = jf.value("involutive_normal", false);
    s.flags.basic_mean_curvature = jf.value("basic_mean_curvature", false);
  }
  return s;
}

std::string GridSpec::to_json() const {
  json j;
  j["name"] = name;
  j["leaf_dim"] = leaf_dim;
  j["axes"] = json::array();
  for (const auto& ax : axes)
    j["axes"].push_back({{"name", ax.name}, {"size", ax.size}, {"length", ax.length}});
  if (monodromy_axis >= 0) {
    j["monodromy"] = {
        {"axis", axes[monodromy_axis].name},
        {"fiber", {axes[fiber_axes[0]].name, axes[fiber_axes[1]].name}},
        {"matrix", {{deck(0, 0), deck(0, 1)}, {deck(1, 0), deck(1, 1)}}}};
  }
  j["metric"] = metric;
  j["frame"] = frame;
  json jc = json::object();
  for (const auto& [k, v] : constants) jc[k] = v;
  j["constants"] = jc;
  j["flags"] = {{"riemannian", flags.riemannian},
                {"taut", flags.taut},
                {"involutive_normal", flags.involutive_normal},
                {"basic_mean_curvature", flags.basic_mean_curvature}};
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// build
// ---------------------------------------------------------------------------

long GridComplex::pt_index(const std::vector<int>& u) const {
  long pt = 0, stride = 1;
  for (int i = 0; i < n; ++i) {
    pt += static_cast<long>(u[i]) * stride;
    stride *= N[i];
  }
  return pt;
}

std::vector<double> GridComplex::coords(long pt) const {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) {
    x[i] = static_cast<double>(pt % N[i]) * h[i];
    pt /= N[i];
  }
  return x;
}

namespace {

std::vector<int> decode(long pt, const std::vector<int>& N) {
  std::vector<int> u(N.size());
  for (size_t i = 0; i < N.size(); ++i) {
    u[i] = static_cast<int>(pt % N[i]);
    pt /= N[i];
  }
  return u;
}

// Lambda^k of a symmetric matrix: entries are minors det(S[I,J]).
MatrixXd lambda_power(const MatrixXd& S, const mi::Table& tb, int k) {
  const int C = tb.dim(k);
  MatrixXd out(C, C);
  std::vector<int> rows, cols;
  for (int i = 0; i < C; ++i) {
    unsigned I = tb.mask(k, i);
    rows.clear();
    for (int a = 0; a < tb.n; ++a)
      if (I >> a & 1u) rows.push_back(a);
    for (int jj = 0; jj < C; ++jj) {
      unsigned J = tb.mask(k, jj);
      cols.clear();
      for (int a = 0; a < tb.n; ++a)
        if (J >> a & 1u) cols.push_back(a);
      MatrixXd sub(k, k);
      for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) sub(r, c) = S(rows[r], cols[c]);
      out(i, jj) = (k == 0) ? 1.0 : sub.determinant();
    }
  }
  return out;
}

MatrixXd sym_sqrt(const MatrixXd& A, bool inverse) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(A);
  Eigen::VectorXd w = es.eigenvalues();
  for (int i = 0; i < w.size(); ++i) {
    double s = std::sqrt(std::max(w[i], 0.0));
    w[i] = inverse ? 1.0 / s : s;
  }
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

GridComplex GridComplex::build(const GridSpec& spec) {
  GridComplex G;
  G.spec = spec;
  G.n = spec.dim();
  G.p = spec.leaf_dim;
  G.q = G.n - G.p;
  if (G.n < 1 || G.n > mi::kMaxDim) throw ValidationError("grid spec: dimension out of range");
  if (G.p < 1 || G.p >= G.n) throw ValidationError("grid spec: leaf dimension out of range");
  G.table = mi::Table(G.n);

  G.npts = 1;
  for (const auto& ax : spec.axes) {
    // size 1 is a legitimate degenerate circle: the forward difference wraps
    // to the same cell and the derivative along that axis is exactly zero,
    // which is what the invariant (zero-mode) reduction relies on
    if (ax.size < 1) throw ValidationError("grid spec: axis '" + ax.name + "' needs size >= 1");
    if (!(ax.length > 0)) throw ValidationError("grid spec: axis '" + ax.name + "' needs positive length");
    G.N.push_back(ax.size);
    G.h.push_back(ax.length / ax.size);
    G.npts *= ax.size;
  }
  G.cellvol_ = 1.0;
  for (double hh : G.h) G.cellvol_ *= hh;

  // monodromy bookkeeping
  G.t_axis_ = spec.monodromy_axis;
  if (G.t_axis_ >= 0) {
    if (G.N[G.t_axis_] < 2)
      throw ValidationError("monodromy: glued axis needs size >= 2");
    G.fib_ = spec.fiber_axes;
    if (G.fib_[0] < 0 || G.fib_[1] < 0 || G.fib_[0] >= G.fib_[1] ||
        G.fib_[0] == G.t_axis_ || G.fib_[1] == G.t_axis_ || G.t_axis_ >= G.n)
      throw ValidationError("monodromy: fiber axes must be two distinct axes below the glued axis");
    G.deckV_ = spec.deck;
    int det = G.deckV_(0, 0) * G.deckV_(1, 1) - G.deckV_(0, 1) * G.deckV_(1, 0);
    if (det != 1 && det != -1)
      throw ValidationError("monodromy: gluing matrix must be unimodular");
    // inverse of an integer unimodular 2x2 is integer again
    Eigen::Matrix2i inv;
    inv << G.deckV_(1, 1), -G.deckV_(0, 1), -G.deckV_(1, 0), G.deckV_(0, 0);
    G.deckA_ = inv * det;
    double h0 = G.h[G.fib_[0]], h1 = G.h[G.fib_[1]];
    if (std::abs(h0 - h1) > 1e-12 * h0)
      throw ValidationError("monodromy: the two fiber axes must share one grid spacing");
    G.build_transfer_tables();
    int maxoff = 0;
    for (const auto& terms : G.ttab_)
      for (const auto& t : terms)
        maxoff = std::max({maxoff, std::abs(t.offset[0]), std::abs(t.offset[1])});
    int need = 2 * maxoff + 4;
    for (int f : {G.fib_[0], G.fib_[1]})
      if (G.N[f] < need) {
        std::ostringstream os;
        os << "monodromy: transfer stencil reaches offset " << maxoff << "; fiber axis '"
           << spec.axes[f].name << "' needs at least " << need << " points, got " << G.N[f]
           << " (kernel separation would be unreliable this coarse)";
        throw ValidationError(os.str());
      }
  }

  // parse field expressions once
  const int nmet = G.n * (G.n + 1) / 2;
  if (static_cast<int>(spec.metric.size()) != nmet)
    throw ValidationError("grid spec: metric needs the upper triangle, " + std::to_string(nmet) +
                          " entries");
  if (static_cast<int>(spec.frame.size()) != G.p)
    throw ValidationError("grid spec: frame needs one row per leaf direction");
  std::vector<expr::Ast> met;
  for (const auto& s : spec.metric) met.push_back(expr::Ast::parse(s));
  std::vector<std::vector<expr::Ast>> frm(G.p);
  for (int j = 0; j < G.p; ++j) {
    if (static_cast<int>(spec.frame[j].size()) != G.n)
      throw ValidationError("grid spec: each frame row needs one component per axis");
    for (const auto& s : spec.frame[j]) frm[j].push_back(expr::Ast::parse(s));
  }
  expr::Env consts = spec.constants;
  consts["pi"] = M_PI;

  auto eval_metric = [&](const std::vector<double>& x) {
    expr::Env vars;
    for (int i = 0; i < G.n; ++i) vars[spec.axes[i].name] = x[i];
    MatrixXd g(G.n, G.n);
    int idx = 0;
    for (int i = 0; i < G.n; ++i)
      for (int j = i; j < G.n; ++j) {
        g(i, j) = met[idx].evaluate(vars, consts);
        g(j, i) = g(i, j);
        ++idx;
      }
    return g;
  };
  auto eval_frame = [&](int j, const std::vector<double>& x) {
    expr::Env vars;
    for (int i = 0; i < G.n; ++i) vars[spec.axes[i].name] = x[i];
    VectorXd X(G.n);
    for (int i = 0; i < G.n; ++i) X[i] = frm[j][i].evaluate(vars, consts);
    return X;
  };

  // pointwise metric, frame, mass blocks
  G.g_pt_.resize(G.npts);
  G.sqrtdetg_.resize(G.npts);
  G.frame_.assign(G.p, std::vector<VectorXd>(G.npts));
  G.gram0_.assign(G.n + 1, {});
  G.mass_.assign(G.n + 1, {});
  G.msqrt_.assign(G.n + 1, {});
  G.minvsqrt_.assign(G.n + 1, {});
  for (int k = 0; k <= G.n; ++k) {
    G.gram0_[k].resize(G.npts);
    G.mass_[k].resize(G.npts);
    G.msqrt_[k].resize(G.npts);
    G.minvsqrt_[k].resize(G.npts);
  }
  for (long pt = 0; pt < G.npts; ++pt) {
    auto x = G.coords(pt);
    MatrixXd g = eval_metric(x);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(g);
    if (es.eigenvalues().minCoeff() <= 1e-8) {
      std::ostringstream os;
      os << "metric is not positive definite at grid point " << pt
         << " (smallest eigenvalue " << es.eigenvalues().minCoeff() << ")";
      throw ValidationError(os.str());
    }
    G.g_pt_[pt] = g;
    double detg = g.determinant();
    G.sqrtdetg_[pt] = std::sqrt(detg);
    MatrixXd ginv = g.inverse();
    for (int k = 0; k <= G.n; ++k) {
      MatrixXd g0 = lambda_power(ginv, G.table, k);
      G.gram0_[k][pt] = g0;
      MatrixXd m = g0 * (G.sqrtdetg_[pt] * G.cellvol_);
      G.mass_[k][pt] = m;
      G.msqrt_[k][pt] = sym_sqrt(m, false);
      G.minvsqrt_[k][pt] = sym_sqrt(m, true);
    }
    MatrixXd fr(G.p, G.n);
    for (int j = 0; j < G.p; ++j) {
      G.frame_[j][pt] = eval_frame(j, x);
      fr.row(j) = G.frame_[j][pt].transpose();
    }
    Eigen::JacobiSVD<MatrixXd> svd(fr);
    if (svd.singularValues().minCoeff() <= 1e-8)
      throw ValidationError("frame fields are degenerate at grid point " + std::to_string(pt));
  }

  // seam compatibility: metric and frame must descend through the gluing
  if (G.t_axis_ >= 0) {
    const double Lt = spec.axes[G.t_axis_].length;
    MatrixXd Mext = MatrixXd::Identity(G.n, G.n);
    Mext(G.fib_[0], G.fib_[0]) = G.deckV_(0, 0);
    Mext(G.fib_[0], G.fib_[1]) = G.deckV_(0, 1);
    Mext(G.fib_[1], G.fib_[0]) = G.deckV_(1, 0);
    Mext(G.fib_[1], G.fib_[1]) = G.deckV_(1, 1);
    for (long pt0 = 0; pt0 < G.npts; ++pt0) {
      auto u = decode(pt0, G.N);
      if (u[G.t_axis_] != 0) continue;
      // top-seam coordinates of this lattice column
      auto xtop = G.coords(pt0);
      xtop[G.t_axis_] = Lt;
      // image vertex under the gluing
      Eigen::Vector2i v(u[G.fib_[0]], u[G.fib_[1]]);
      Eigen::Vector2i w = G.deckV_ * v;
      auto uimg = u;
      uimg[G.fib_[0]] = ((w[0] % G.N[G.fib_[0]]) + G.N[G.fib_[0]]) % G.N[G.fib_[0]];
      uimg[G.fib_[1]] = ((w[1] % G.N[G.fib_[1]]) + G.N[G.fib_[1]]) % G.N[G.fib_[1]];
      auto ximg = G.coords(G.pt_index(uimg));
      MatrixXd gtop = eval_metric(xtop);
      MatrixXd gimg = eval_metric(ximg);
      MatrixXd pulled = Mext.transpose() * gimg * Mext;
      double rel = (pulled - gtop).norm() / std::max(1.0, gtop.norm());
      if (rel > 1e-10) {
        std::ostringstream os;
        os << "monodromy: metric does not descend through the gluing (relative seam mismatch "
           << rel << ")";
        throw ValidationError(os.str());
      }
      for (int j = 0; j < G.p; ++j) {
        VectorXd Xtop = eval_frame(j, xtop);
        VectorXd Ximg = eval_frame(j, ximg);
        double relf = (Mext * Xtop - Ximg).norm() / std::max(1.0, Ximg.norm());
        if (relf > 1e-10) {
          std::ostringstream os;
          os << "monodromy: frame field " << j
             << " does not descend through the gluing (relative seam mismatch " << relf << ")";
          throw ValidationError(os.str());
        }
      }
    }
  }

  G.d_.assign(G.n + 1, SparseD());
  return G;
}

// ---------------------------------------------------------------------------
// monodromy transfer tables
// ---------------------------------------------------------------------------

namespace {

struct EdgeChain {
  // key: (x, y, axis) -> integer coefficient
  std::map<std::tuple<int, int, int>, int> c;
  void add(int x, int y, int axis, int v) {
    auto key = std::make_tuple(x, y, axis);
    c[key] += v;
    if (c[key] == 0) c.erase(key);
  }
};

// staircase path from 0 to w: axis-0 steps first, then axis-1 steps
std::vector<std::tuple<int, int, int, int>> staircase(const Eigen::Vector2i& w) {
  std::vector<std::tuple<int, int, int, int>> edges;  // (x, y, axis, coeff)
  int cx = 0, cy = 0;
  int s0 = (w[0] > 0) - (w[0] < 0);
  for (int i = 0; i < std::abs(w[0]); ++i) {
    if (s0 > 0) {
      edges.emplace_back(cx, cy, 0, 1);
      cx += 1;
    } else {
      edges.emplace_back(cx - 1, cy, 0, -1);
      cx -= 1;
    }
  }
  int s1 = (w[1] > 0) - (w[1] < 0);
  for (int i = 0; i < std::abs(w[1]); ++i) {
    if (s1 > 0) {
      edges.emplace_back(cx, cy, 1, 1);
      cy += 1;
    } else {
      edges.emplace_back(cx, cy - 1, 1, -1);
      cy -= 1;
    }
  }
  return edges;
}

}  // namespace

void GridComplex::build_transfer_tables() {
  const Eigen::Vector2i Ve1 = deckV_.col(0), Ve2 = deckV_.col(1);
  auto p1 = staircase(Ve1), p2 = staircase(Ve2);

  ttab_[0] = {{Eigen::Vector2i(0, 0), 0u, 1}};
  ttab_[1].clear();
  for (auto [x, y, axis, c] : p1)
    ttab_[1].push_back({Eigen::Vector2i(x, y), axis == 0 ? 1u : 2u, c});
  ttab_[2].clear();
  for (auto [x, y, axis, c] : p2)
    ttab_[2].push_back({Eigen::Vector2i(x, y), axis == 0 ? 1u : 2u, c});

  // image of the unit square: fill the transported boundary loop by winding
  // numbers, so that (boundary of fill) == loop holds in integers.
  EdgeChain loop;
  for (auto [x, y, axis, c] : p1) loop.add(x, y, axis, c);
  for (auto [x, y, axis, c] : p2) loop.add(x + Ve1[0], y + Ve1[1], axis, c);
  for (auto [x, y, axis, c] : p1) loop.add(x + Ve2[0], y + Ve2[1], axis, -c);
  for (auto [x, y, axis, c] : p2) loop.add(x, y, axis, -c);

  int xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  for (const auto& [key, c] : loop.c) {
    xmin = std::min(xmin, std::get<0>(key));
    xmax = std::max(xmax, std::get<0>(key));
    ymin = std::min(ymin, std::get<1>(key));
    ymax = std::max(ymax, std::get<1>(key));
  }
  auto lcoeff = [&loop](int x, int y, int axis) {
    auto it = loop.c.find(std::make_tuple(x, y, axis));
    return it == loop.c.end() ? 0 : it->second;
  };
  // W(x) = W(x - e1) - L2(x), swept along axis 0 from outside the support
  std::map<std::pair<int, int>, int> W;
  auto wval = [&W](int x, int y) {
    auto it = W.find({x, y});
    return it == W.end() ? 0 : it->second;
  };
  for (int y = ymin - 1; y <= ymax + 1; ++y)
    for (int x = xmin; x <= xmax + 1; ++x) {
      int v = wval(x - 1, y) - lcoeff(x, y, 1);
      if (v != 0) W[{x, y}] = v;
    }
  // exact closure audit: the fill's boundary must reproduce the loop on both axes
  for (int y = ymin - 2; y <= ymax + 2; ++y)
    for (int x = xmin - 2; x <= xmax + 2; ++x) {
      if (wval(x, y) - wval(x - 1, y) != -lcoeff(x, y, 1) ||
          wval(x, y) - wval(x, y - 1) != lcoeff(x, y, 0))
        throw std::logic_error("monodromy: winding fill failed to close the transported square");
    }
  ttab_[3].clear();
  for (const auto& [key, v] : W)
    ttab_[3].push_back({Eigen::Vector2i(key.first, key.second), 3u, v});
}

// ---------------------------------------------------------------------------
// coboundary
// ---------------------------------------------------------------------------

void GridComplex::shifted_cells(long pt, unsigned mask, int axis,
                                std::vector<Shifted>& out) const {
  out.clear();
  auto u = decode(pt, N);
  if (axis != t_axis_ || u[axis] + 1 < N[axis]) {
    u[axis] = (u[axis] + 1) % N[axis];
    out.push_back({pt_index(u), mask, 1.0});
    return;
  }
  // twisted wrap: replace the fiber factor of the cell by its chain-map image
  unsigned fbit0 = 1u << fib_[0], fbit1 = 1u << fib_[1];
  unsigned fmask_local = ((mask & fbit0) ? 1u : 0u) | ((mask & fbit1) ? 2u : 0u);
  unsigned Jf = mask & (fbit0 | fbit1);
  unsigned Jr = mask & ~(fbit0 | fbit1);
  int s1 = merge_sign(Jf, Jr);
  Eigen::Vector2i v(u[fib_[0]], u[fib_[1]]);
  Eigen::Vector2i base = deckV_ * v;
  for (const auto& term : ttab_[fmask_local]) {
    unsigned Jfp = ((term.fmask & 1u) ? fbit0 : 0u) | ((term.fmask & 2u) ? fbit1 : 0u);
    int s2 = merge_sign(Jfp, Jr);
    auto uu = u;
    uu[t_axis_] = 0;
    int w0 = base[0] + term.offset[0], w1 = base[1] + term.offset[1];
    uu[fib_[0]] = ((w0 % N[fib_[0]]) + N[fib_[0]]) % N[fib_[0]];
    uu[fib_[1]] = ((w1 % N[fib_[1]]) + N[fib_[1]]) % N[fib_[1]];
    out.push_back({pt_index(uu), Jfp | Jr, static_cast<double>(term.coeff * s1 * s2)});
  }
}

void GridComplex::assemble_d() const {
  d_.assign(n + 1, SparseD());
  std::vector<Shifted> sh;
  for (int k = 0; k < n; ++k) {
    const int C0 = table.dim(k), C1 = table.dim(k + 1);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(npts) * C1 * (k + 1) * 2);
    for (long pt = 0; pt < npts; ++pt) {
      for (int slot = 0; slot < C1; ++slot) {
        unsigned K = table.mask(k + 1, slot);
        long row = pt * C1 + slot;
        for (int a = 0; a < n; ++a) {
          if (!(K >> a & 1u)) continue;
          unsigned J = K & ~(1u << a);
          double sgn = pos_sign(K, a) / h[a];
          shifted_cells(pt, J, a, sh);
          for (const auto& s : sh)
            trips.emplace_back(row, s.pt * C0 + table.slot(s.mask), sgn * s.coeff);
          trips.emplace_back(row, pt * C0 + table.slot(J), -sgn);
        }
      }
    }
    SparseD D(npts * C1, npts * C0);
    D.setFromTriplets(trips.begin(), trips.end());
    D.makeCompressed();
    d_[k] = std::move(D);
  }
  d_[n] = SparseD(0, npts * table.dim(n));
}

const SparseD& GridComplex::d(int k) const {
  if (d_.empty() || (d_[0].rows() == 0 && d_[0].cols() == 0 && n > 0)) assemble_d();
  if (k < 0 || k > n) throw std::out_of_range("d: degree out of range");
  return d_[k];
}

double GridComplex::exact_d2_max(int k) const {
  if (k < 0 || k + 2 > n) return 0.0;
  // Split d by spacing monomial: d_k = sum_g S_g / h_g with integer S_g, so the
  // groups S_g S_g' + S_g' S_g (and each S_g S_g) must vanish in exact integer
  // arithmetic. The two glued fiber axes share one spacing (enforced at build
  // time) and the seam transfer mixes their edge types, so they form a single
  // group; every other axis stands alone.
  std::vector<std::vector<int>> groups;
  if (t_axis_ >= 0) {
    groups.push_back({fib_[0], fib_[1]});
    for (int a = 0; a < n; ++a)
      if (a != fib_[0] && a != fib_[1]) groups.push_back({a});
  } else {
    for (int a = 0; a < n; ++a) groups.push_back({a});
  }
  auto tagged = [this](int deg, const std::vector<int>& axes) {
    const int C0 = table.dim(deg), C1 = table.dim(deg + 1);
    std::vector<Eigen::Triplet<double>> trips;
    std::vector<Shifted> sh;
    for (long pt = 0; pt < npts; ++pt)
      for (int slot = 0; slot < C1; ++slot) {
        unsigned K = table.mask(deg + 1, slot);
        long row = pt * C1 + slot;
        for (int axis : axes) {
          if (!(K >> axis & 1u)) continue;
          unsigned J = K & ~(1u << axis);
          double sgn = pos_sign(K, axis);
          shifted_cells(pt, J, axis, sh);
          for (const auto& s : sh)
            trips.emplace_back(row, s.pt * C0 + table.slot(s.mask), sgn * s.coeff);
          trips.emplace_back(row, pt * C0 + table.slot(J), -sgn);
        }
      }
    SparseD S(npts * C1, npts * C0);
    S.setFromTriplets(trips.begin(), trips.end());
    return S;
  };
  const size_t ng = groups.size();
  std::vector<SparseD> Sk, Sk1;
  for (const auto& g : groups) {
    Sk.push_back(tagged(k, g));
    Sk1.push_back(tagged(k + 1, g));
  }
  double worst = 0.0;
  for (size_t a = 0; a < ng; ++a)
    for (size_t b = a; b < ng; ++b) {
      SparseD P = (a == b) ? SparseD(Sk1[a] * Sk[a]) : SparseD(Sk1[a] * Sk[b] + Sk1[b] * Sk[a]);
      double m = 0.0;
      for (int c = 0; c < P.outerSize(); ++c)
        for (SparseD::InnerIterator it(P, c); it; ++it) m = std::max(m, std::abs(it.value()));
      worst = std::max(worst, m / (h[groups[a][0]] * h[groups[b][0]]));
    }
  return worst;
}

// ---------------------------------------------------------------------------
// pointwise operators
// ---------------------------------------------------------------------------

VectorXd GridComplex::mass_apply(int k, const VectorXd& x) const {
  const int C = table.dim(k);
  VectorXd y(x.size());
  for (long pt = 0; pt < npts; ++pt)
    y.segment(pt * C, C) = mass_[k][pt] * x.segment(pt * C, C);
  return y;
}

VectorXd GridComplex::mass_solve(int k, const VectorXd& x) const {
  const int C = table.dim(k);
  VectorXd y(x.size());
  for (long pt = 0; pt < npts; ++pt) {
    const MatrixXd& mi = minvsqrt_[k][pt];
    y.segment(pt * C, C) = mi * (mi * x.segment(pt * C, C));
  }
  return y;
}

VectorXd GridComplex::msqrt_apply(int k, const VectorXd& x) const {
  const int C = table.dim(k);
  VectorXd y(x.size());
  for (long pt = 0; pt < npts; ++pt)
    y.segment(pt * C, C) = msqrt_[k][pt] * x.segment(pt * C, C);
  return y;
}

VectorXd GridComplex::minvsqrt_apply(int k, const VectorXd& x) const {
  const int C = table.dim(k);
  VectorXd y(x.size());
  for (long pt = 0; pt < npts; ++pt)
    y.segment(pt * C, C) = minvsqrt_[k][pt] * x.segment(pt * C, C);
  return y;
}

double GridComplex::inner(int k, const VectorXd& x, const VectorXd& y) const {
  return x.dot(mass_apply(k, y));
}

double GridComplex::total_volume() const {
  double v = 0.0;
  for (long pt = 0; pt < npts; ++pt) v += sqrtdetg_[pt];
  return v * cellvol_;
}

VectorXd GridComplex::codifferential(int k, const VectorXd& x) const {
  if (k <= 0) return VectorXd::Zero(0);
  VectorXd y = d(k - 1).transpose() * mass_apply(k, x);
  return mass_solve(k - 1, y);
}

VectorXd GridComplex::star(int k, const VectorXd& x) const {
  const int C = table.dim(k), Cc = table.dim(n - k);
  const unsigned full = (1u << n) - 1u;
  VectorXd out(npts * Cc);
  for (long pt = 0; pt < npts; ++pt) {
    VectorXd y = gram0_[k][pt] * x.segment(pt * C, C) * sqrtdetg_[pt];
    for (int i = 0; i < C; ++i) {
      unsigned I = table.mask(k, i);
      unsigned Ic = full & ~I;
      out[pt * Cc + table.slot(Ic)] = merge_sign(I, Ic) * y[i];
    }
  }
  return out;
}

PointwiseOp GridComplex::interior_op(const std::vector<VectorXd>& X, int k) const {
  PointwiseOp op;
  op.kin = k;
  op.kout = k - 1;
  const int C0 = table.dim(k), C1 = table.dim(k - 1);
  op.blk.resize(npts);
  for (long pt = 0; pt < npts; ++pt) {
    MatrixXd B = MatrixXd::Zero(C1, C0);
    for (int j = 0; j < C1; ++j) {
      unsigned J = table.mask(k - 1, j);
      for (int b = 0; b < n; ++b) {
        if (J >> b & 1u) continue;
        unsigned K = J | (1u << b);
        B(j, table.slot(K)) += pos_sign(K, b) * X[pt][b];
      }
    }
    op.blk[pt] = std::move(B);
  }
  return op;
}

PointwiseOp GridComplex::wedge_op(const FormField& alpha, int k) const {
  PointwiseOp op;
  op.kin = k;
  op.kout = k + alpha.k;
  if (op.kout > n) throw std::out_of_range("wedge: degree exceeds dimension");
  const int Ca = table.dim(alpha.k), C0 = table.dim(k), C1 = table.dim(op.kout);
  op.blk.resize(npts);
  for (long pt = 0; pt < npts; ++pt) {
    MatrixXd B = MatrixXd::Zero(C1, C0);
    for (int ia = 0; ia < Ca; ++ia) {
      unsigned A = table.mask(alpha.k, ia);
      double av = alpha.a[pt * Ca + ia];
      if (av == 0.0) continue;
      for (int ib = 0; ib < C0; ++ib) {
        unsigned Bm = table.mask(k, ib);
        int s = merge_sign(A, Bm);
        if (s == 0) continue;
        B(table.slot(A | Bm), ib) += s * av;
      }
    }
    op.blk[pt] = std::move(B);
  }
  return op;
}

PointwiseOp GridComplex::contract_op(const FormField& alpha, int k) const {
  // pointwise metric adjoint of wedging with alpha, mapping degree k to k - |alpha|
  PointwiseOp op;
  op.kin = k;
  op.kout = k - alpha.k;
  if (op.kout < 0) throw std::out_of_range("contract: degree below zero");
  PointwiseOp w = wedge_op(alpha, op.kout);
  op.blk.resize(npts);
  for (long pt = 0; pt < npts; ++pt) {
    const MatrixXd& glo = gram0_[op.kout][pt];
    const MatrixXd& ghi = gram0_[k][pt];
    op.blk[pt] = glo.llt().solve(w.blk[pt].transpose() * ghi);
  }
  return op;
}

VectorXd GridComplex::apply(const PointwiseOp& op, const VectorXd& x) const {
  const int C0 = table.dim(op.kin), C1 = table.dim(op.kout);
  VectorXd y(npts * C1);
  for (long pt = 0; pt < npts; ++pt)
    y.segment(pt * C1, C1) = op.blk[pt] * x.segment(pt * C0, C0);
  return y;
}

SparseD GridComplex::pointwise_matrix(const PointwiseOp& op) const {
  const int C0 = table.dim(op.kin), C1 = table.dim(op.kout);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(npts) * C0 * C1);
  for (long pt = 0; pt < npts; ++pt)
    for (int i = 0; i < C1; ++i)
      for (int j = 0; j < C0; ++j) {
        double v = op.blk[pt](i, j);
        if (v != 0.0) trip.emplace_back(pt * C1 + i, pt * C0 + j, v);
      }
  SparseD A(npts * C1, npts * C0);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

SparseD GridComplex::mass_half_matrix(int k, bool inverse) const {
  const int C = table.dim(k);
  const auto& blocks = inverse ? minvsqrt_[k] : msqrt_[k];
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(npts) * C * C);
  for (long pt = 0; pt < npts; ++pt)
    for (int i = 0; i < C; ++i)
      for (int j = 0; j < C; ++j) {
        double v = blocks[pt](i, j);
        if (v != 0.0) trip.emplace_back(pt * C + i, pt * C + j, v);
      }
  SparseD A(npts * C, npts * C);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

VectorXd GridComplex::metric_change(const GridComplex& from, const GridComplex& to, int k,
                                    const VectorXd& x) {
  if (from.n != to.n || from.N != to.N)
    throw ValidationError("metric change map needs two metrics on one grid skeleton");
  return to.mass_solve(k, from.mass_apply(k, x));
}

VectorXd GridComplex::pointwise_norm2(const FormField& f) const {
  const int C = table.dim(f.k);
  VectorXd out(npts);
  for (long pt = 0; pt < npts; ++pt) {
    auto seg = f.a.segment(pt * C, C);
    out[pt] = seg.dot(gram0_[f.k][pt] * seg);
  }
  return out;
}

// ---------------------------------------------------------------------------
// test fields
// ---------------------------------------------------------------------------

FormField GridComplex::smooth_test_form(int k, unsigned seed) const {
  // Band-limited modes; on glued grids every fiber-dependent mode is windowed
  // by sin^4(pi t / L_t) so the sampled field descends to the quotient.
  FormField f;
  f.k = k;
  const int C = table.dim(k);
  f.a = VectorXd::Zero(npts * C);
  const double Lt = (t_axis_ >= 0) ? spec.axes[t_axis_].length : 1.0;
  for (int slot = 0; slot < C; ++slot) {
    unsigned mask = table.mask(k, slot);
    std::mt19937_64 rng(0x9e3779b97f4a7c15ull ^ (seed * 1315423911u + slot * 2654435761u));
    std::uniform_int_distribution<int> freq(-2, 2);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int mode = 0; mode < 2; ++mode) {
      std::vector<int> m(n);
      for (int a = 0; a < n; ++a) m[a] = freq(rng);
      double amp = 0.3 + 0.7 * unif(rng);
      double phase = 2.0 * M_PI * unif(rng);
      bool fiberish = false;
      if (t_axis_ >= 0) {
        if (mask & ((1u << fib_[0]) | (1u << fib_[1]))) fiberish = true;
        if (m[fib_[0]] != 0 || m[fib_[1]] != 0) fiberish = true;
      }
      for (long pt = 0; pt < npts; ++pt) {
        auto x = coords(pt);
        double arg = phase;
        for (int a = 0; a < n; ++a) arg += 2.0 * M_PI * m[a] * x[a] / spec.axes[a].length;
        double v = amp * std::cos(arg);
        if (fiberish) {
          double w = std::sin(M_PI * x[t_axis_] / Lt);
          v *= w * w * w * w;
        }
        f.a[pt * C + slot] += v;
      }
    }
  }
  return f;
}

FormField GridComplex::random_form(int k, std::mt19937_64& rng) const {
  FormField f;
  f.k = k;
  std::normal_distribution<double> gauss(0.0, 1.0);
  f.a = VectorXd::NullaryExpr(dim(k), [&](Eigen::Index) { return gauss(rng); });
  return f;
}

}  // namespace folcoh::grid
