// Case catalog: the model foliations the engine ships with, the grid or
// homogeneous realization of each, the integer tables they are expected to
// reproduce, and where each expectation comes from.
#pragma once

#include <string>
#include <vector>

#include "folcoh/grid.hpp"

namespace folcoh::cat {

// Sentinel for a degree whose continuum dimension is infinite. The discrete
// count at such a degree is required to grow with resolution instead of
// matching a fixed integer.
inline constexpr int kGrows = -1;

struct ExpectedTables {
  std::vector<int> h, h_b, h_a;  // full length n+1, kGrows allowed in h_b
  std::string source_h, source_hb, source_ha;
};

// Per-case resolution. Grid cases read `n` as the transverse scale (each case
// maps it onto its axes its own way); glued cases read `n` as the fiber size
// and `n_t` as the glued-axis size; the homogeneous case reads `n` as the
// representation truncation (twice the maximal spin).
struct Resolution {
  int n = 0;
  int n_t = 0;
};

struct CaseInfo {
  std::string name;
  std::string summary;
  bool homogeneous = false;
  // bundle-like refers to the catalog metric: the flow moves transverse
  // distances rigidly. Several theorem gates require it on top of the
  // foliation being Riemannian.
  bool bundle_like = true;
  grid::CaseFlags flags;
  Resolution res;
  ExpectedTables expect;

  // Documented divergence between a published table and the value this
  // engine (plus an independent recomputation) produces. Empty when none.
  std::vector<int> computed_h, computed_ha;
  std::string discrepancy_note;

  std::string perturbed_of;  // base case name for metric-independence variants

  double a1 = 1.0, a2 = 1.0, a3 = 1.0;  // homogeneous backend scales
};

const std::vector<CaseInfo>& catalog();
const CaseInfo* find_case(const std::string& name);

// Grid spec of a grid-backed case at the requested resolution. Throws
// grid::ValidationError for resolutions the case cannot realize.
grid::GridSpec grid_spec(const CaseInfo& info, const Resolution& res);

}  // namespace folcoh::cat
