#include "cmeb/polyalg.hpp"

#include <stdexcept>

namespace cmeb {

Polynomial generator_polynomial(const ReactionNetwork& net, const MultiIndex& alpha) {
  size_t n = net.n();
  if (alpha.vars() != n) throw std::invalid_argument("multi-index arity mismatch");
  Polynomial g(n);
  Polynomial xa = Polynomial::monomial(alpha, 1);
  for (const auto& r : net.reactions()) {
    Polynomial jump = shift_expand(alpha, r.net()) - xa;
    g = g + r.s * jump;
  }
  return g;
}

std::vector<Rational> moment_equation_coeffs(const ReactionNetwork& net,
                                             const MultiIndex& alpha, uint32_t d) {
  if (alpha.degree() + net.d_a() > d + 1)
    throw std::invalid_argument("moment equation needs |alpha| <= d - d_a + 1; got |alpha| = " +
                                std::to_string(alpha.degree()) + ", d = " + std::to_string(d) +
                                ", d_a = " + std::to_string(net.d_a()));
  MonomialBasis basis(net.n(), d);
  std::vector<Rational> coeffs(basis.size(), Rational(0));
  Polynomial g = generator_polynomial(net, alpha);
  for (const auto& [beta, c] : g.terms()) coeffs[basis.index_of(beta)] = c;
  return coeffs;
}

std::vector<LocalizingMatrixSymbolic> localizing_structure(size_t n, uint32_t d) {
  if (d < 1) throw std::invalid_argument("localizing structure needs d >= 1");
  std::vector<LocalizingMatrixSymbolic> out;
  for (size_t i = 0; i <= n; ++i) {
    LocalizingMatrixSymbolic m;
    m.i = i;
    m.d = d;
    uint32_t half = (i == 0) ? d / 2 : (d - 1) / 2;
    m.rows = MonomialBasis(n, half).list();
    m.entries.resize(m.rows.size());
    for (size_t r = 0; r < m.rows.size(); ++r) {
      m.entries[r].resize(m.rows.size());
      for (size_t c = 0; c < m.rows.size(); ++c) {
        MultiIndex e = m.rows[r] + m.rows[c];
        if (i >= 1) e = e.plus_unit(i - 1);
        m.entries[r][c] = e;
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

GeneratorImage apply_generator_rational(const ReactionNetwork& net, const Polynomial& w) {
  if (w.vars() != net.n()) throw std::invalid_argument("weight arity mismatch");
  Polynomial num(net.n());
  for (const auto& r : net.reactions()) num = num + r.s * (w.shift(r.net()) - w);
  return {num, net.o()};
}

}  // namespace cmeb
