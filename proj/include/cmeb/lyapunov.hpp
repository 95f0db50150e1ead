#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cmeb/model.hpp"

namespace cmeb {

// Drift diagnostics for a candidate pair (w, K_2): certify
// Qw(x) <= K_1 - K_2 w(x) exactly on a finite box and classify the
// asymptotic sign of Qw + K_2 w along each axis and the diagonal.

enum class DriftVerdict { VerifiedOnBoxLeadingNegative, BoxOnly, Failed };

struct RayLeading {
  std::string direction;  // species name, or "diagonal"
  int64_t degree = -1;    // top degree of the numerator restriction, -1 if it vanishes
  Rational coeff;         // its leading coefficient
  // "negative": drift tends to -inf; "growing": tends to +inf (numerator
  // outgrows the propensity denominator); "bounded"/"vanishes": inconclusive.
  std::string behavior;
};

struct DriftReport {
  Polynomial w;
  Rational k2;
  Rational k1;  // exact max of Qw + K_2 w over the enumerated box
  State argmax;
  int64_t box_radius = 0;
  size_t states_checked = 0;
  std::vector<RayLeading> rays;
  DriftVerdict verdict = DriftVerdict::Failed;
  std::string reason;  // populated when Failed
  // K_1/K_2 as a candidate tail constant <w> <= c: a heuristic reading of the
  // drift inequality, reported for convenience and never certified.
  std::optional<double> tail_constant_heuristic;

  std::string to_json() const;
};

// Exact arithmetic throughout: Qw via the generator identity, the box maximum
// over {0..R}^n (minus constraint-invalid states) in rational arithmetic.
// Validation problems yield verdict Failed with a reason, not an exception.
DriftReport drift_report(const ReactionNetwork& net, const Polynomial& w,
                         const Rational& k2, int64_t box_radius,
                         size_t threads = 1, size_t state_cap = 2000000);

}  // namespace cmeb
