#pragma once

#include <optional>

#include "forge/correction.hpp"
#include "forge/deficiency.hpp"
#include "forge/dissimilarity.hpp"

namespace forge {

// Least N with 2^-N below the smallest positive value, clamped to [4, 20];
// guarantees the depth-N correction keeps every off-diagonal value positive.
int choose_depth(const Dissimilarity& h);

struct RepairOptions {
  std::optional<int> depth;
  bool lift = true;      // add epsilon to every off-diagonal corrected value
  bool closure = false;  // shortest-path closure instead of the lift
  bool prescale = false; // divide input by its max value first
  std::optional<TDOracle> oracle;  // skip the TD-table stage
  int bisect_iters = 60;
};

struct RepairResult {
  Dissimilarity d1;
  CorrectionFn f;
  TriangleReport pre_lift;   // triangle state of f(h) before exactification
  Modulus fwd;               // h < delta implies d1 <= eps
  Modulus bwd;               // d1 < delta implies h <= eps
  double epsilon = 0;        // lift actually applied
  int depth = 0;
  double scale = 1.0;        // prescale divisor
  bool closure_used = false;

  ojson certificate() const;
};

RepairResult repair(const Dissimilarity& h, const RepairOptions& opt = {});

// The exact finite-depth equivalence moduli for a lifted repair, re-verified
// exhaustively against the tables before being returned. Throws
// ConstructionError if verification fails (which would mean the pipeline
// itself is broken, not the data).
std::pair<Modulus, Modulus> certify_equivalence(const Dissimilarity& h,
                                                const Dissimilarity& d1,
                                                const CorrectionFn& f,
                                                double lift_epsilon);

}  // namespace forge
