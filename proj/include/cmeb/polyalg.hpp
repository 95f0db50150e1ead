#pragma once

#include "cmeb/model.hpp"

namespace cmeb {

// g(x) = o(x) * Q x^alpha = sum_j s_j(x) ((x+v_j)^alpha - x^alpha);
// degree <= |alpha| + d_a - 1.
Polynomial generator_polynomial(const ReactionNetwork& net, const MultiIndex& alpha);

// Coefficient vector of the alpha-moment equation sum_beta g_beta z_beta = 0
// over MonomialBasis(n, d). Requires |alpha| <= d - d_a + 1.
std::vector<Rational> moment_equation_coeffs(const ReactionNetwork& net,
                                             const MultiIndex& alpha, uint32_t d);

// Index pattern of the moment matrix (i = 0) and the n localizing matrices
// (i >= 1): entry (r, c) holds the moment subscript rows[r] + rows[c] (+ e_i).
struct LocalizingMatrixSymbolic {
  size_t i;                       // 0 = moment matrix, 1..n = x_i localizer
  uint32_t d;                     // relaxation order
  std::vector<MultiIndex> rows;   // |.| <= floor(d/2) or floor((d-1)/2)
  std::vector<std::vector<MultiIndex>> entries;

  size_t dim() const { return rows.size(); }
};

std::vector<LocalizingMatrixSymbolic> localizing_structure(size_t n, uint32_t d);

// Qw = (sum_j s_j(x)(w(x+v_j) - w(x)), o(x)) as an exact numerator/denominator
// pair.
struct GeneratorImage {
  Polynomial num;
  Polynomial den;
};

GeneratorImage apply_generator_rational(const ReactionNetwork& net, const Polynomial& w);

}  // namespace cmeb
