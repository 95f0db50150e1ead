#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cmeb/rational_function.hpp"

namespace cmeb {

struct Reaction {
  std::vector<uint32_t> v_minus, v_plus;  // reactant / product stoichiometry
  Polynomial s;                           // numerator over the common denominator o
  RationalFunction propensity;            // as declared (before o is common)
  bool is_mass_action = false;
  Rational rate = 0;  // mass-action rate constant when is_mass_action

  std::vector<int64_t> net() const {
    std::vector<int64_t> v(v_minus.size());
    for (size_t i = 0; i < v.size(); ++i)
      v[i] = static_cast<int64_t>(v_plus[i]) - static_cast<int64_t>(v_minus[i]);
    return v;
  }
};

// Conjunction of linear inequalities a.x <= b and coordinate parities.
struct StateConstraint {
  struct LinearIneq {
    std::vector<int64_t> a;
    int64_t b;
  };
  struct Parity {
    size_t axis;
    uint32_t parity;  // x_axis mod 2 == parity
  };
  std::vector<LinearIneq> inequalities;
  std::vector<Parity> parities;

  bool contains(const State& x) const {
    for (const auto& q : inequalities) {
      int64_t s = 0;
      for (size_t i = 0; i < q.a.size(); ++i) s += q.a[i] * x[i];
      if (s > q.b) return false;
    }
    for (const auto& p : parities)
      if ((x[p.axis] & 1) != p.parity) return false;
    return true;
  }
  bool empty() const { return inequalities.empty() && parities.empty(); }
};

class ReactionNetwork {
 public:
  ReactionNetwork(std::vector<std::string> species, std::vector<Reaction> reactions,
                  std::optional<StateConstraint> constraint = std::nullopt);

  size_t n() const { return species_.size(); }
  size_t reaction_count() const { return reactions_.size(); }
  const std::vector<std::string>& species() const { return species_; }
  const std::vector<Reaction>& reactions() const { return reactions_; }
  const Reaction& reaction(size_t j) const { return reactions_.at(j); }
  const Polynomial& o() const { return o_; }
  uint32_t d_a() const { return d_a_; }  // max numerator degree, recomputed
  uint32_t d_o() const { return d_o_; }  // degree of o, recomputed
  const std::optional<StateConstraint>& constraint() const { return constraint_; }
  ReactionNetwork with_constraint(StateConstraint c) const;

  // a_j(x) = s_j(x)/o(x), exact; throws when o(x) <= 0.
  Rational propensity_eval(size_t j, const State& x) const;
  // total exit rate q(x)
  Rational exit_rate(const State& x) const;
  // {x - v_j : valid state with a_j(x - v_j) > 0}, deduplicated
  std::vector<State> incoming_states(const State& x) const;
  // sum_j a_j(x-v_j) p(x-v_j) - q(x) p(x) for a finite p given as pairs
  double stationary_residual(const std::map<State, double>& p, const State& x) const;

  bool state_valid(const State& x) const;

  std::string pretty_print() const;  // DSL text that reparses to this network
  std::string to_json() const;
  static ReactionNetwork from_json(const std::string& text);

 private:
  std::vector<std::string> species_;
  std::vector<Reaction> reactions_;
  Polynomial o_;
  uint32_t d_a_ = 0, d_o_ = 0;
  std::optional<StateConstraint> constraint_;
};

// Parses the reaction DSL:
//   reaction  := lhs "->" rhs "@" propensity
//   lhs, rhs  := "0" | term ("+" term)*
//   term      := [natural] species-ident
//   propensity:= "mass_action(" rational ")" | expression in x1..xn with
//                rational constants, + - * / ^ (integer exponents), parens
// "#" starts a comment; a "species:" header fixes the species order.
ReactionNetwork parse_network(const std::string& text);

// Propensity expression grammar restricted to a trivial denominator.
Polynomial parse_polynomial(const std::string& text, size_t n);

struct ParseError : std::runtime_error {
  size_t line, column;
  ParseError(const std::string& msg, size_t line, size_t column)
      : std::runtime_error(msg + " at line " + std::to_string(line) + ", column " +
                           std::to_string(column)),
        line(line),
        column(column) {}
};

}  // namespace cmeb
