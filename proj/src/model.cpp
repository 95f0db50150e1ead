#include "cmeb/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <sstream>

namespace cmeb {

namespace {

struct Cursor {
  const std::string& s;
  size_t pos = 0;
  size_t line;

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool eof() {
    skip_ws();
    return pos >= s.size();
  }
  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }
  bool consume(char c) {
    if (peek() == c) {
      ++pos;
      return true;
    }
    return false;
  }
  bool consume_word(const std::string& w) {
    skip_ws();
    if (s.compare(pos, w.size(), w) == 0) {
      pos += w.size();
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, line, pos + 1); }
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string read_ident(Cursor& c) {
  c.skip_ws();
  size_t start = c.pos;
  if (c.pos >= c.s.size() || !ident_start(c.s[c.pos])) c.fail("expected identifier");
  while (c.pos < c.s.size() && ident_char(c.s[c.pos])) ++c.pos;
  return c.s.substr(start, c.pos - start);
}

Rational read_number(Cursor& c) {
  c.skip_ws();
  size_t start = c.pos;
  while (c.pos < c.s.size() &&
         (std::isdigit(static_cast<unsigned char>(c.s[c.pos])) || c.s[c.pos] == '.'))
    ++c.pos;
  // exponent part
  if (c.pos < c.s.size() && (c.s[c.pos] == 'e' || c.s[c.pos] == 'E')) {
    size_t mark = c.pos++;
    if (c.pos < c.s.size() && (c.s[c.pos] == '+' || c.s[c.pos] == '-')) ++c.pos;
    if (c.pos < c.s.size() && std::isdigit(static_cast<unsigned char>(c.s[c.pos]))) {
      while (c.pos < c.s.size() && std::isdigit(static_cast<unsigned char>(c.s[c.pos]))) ++c.pos;
    } else {
      c.pos = mark;  // not an exponent; likely an identifier boundary
    }
  }
  if (c.pos == start) c.fail("expected number");
  try {
    return parse_rational(c.s.substr(start, c.pos - start));
  } catch (const std::invalid_argument& e) {
    c.pos = start;
    c.fail(e.what());
  }
}

// side := "0" | term ("+" term)*, term := [natural] ident
void parse_side(Cursor& c, std::vector<std::pair<std::string, uint32_t>>& out) {
  if (c.peek() == '-' &&
      !(c.pos + 1 < c.s.size() && c.s[c.pos + 1] == '>'))
    c.fail("negative stoichiometry");
  // a bare "0" with no identifier following denotes the empty side
  {
    size_t save = c.pos;
    if (c.consume('0')) {
      c.skip_ws();
      if (c.pos >= c.s.size() || c.s[c.pos] == '-' || c.s[c.pos] == '@') return;
      c.pos = save;
    }
  }
  while (true) {
    c.skip_ws();
    uint32_t coeff = 1;
    if (c.peek() == '-') c.fail("negative stoichiometry");
    if (std::isdigit(static_cast<unsigned char>(c.peek()))) {
      size_t start = c.pos;
      while (c.pos < c.s.size() && std::isdigit(static_cast<unsigned char>(c.s[c.pos]))) ++c.pos;
      coeff = static_cast<uint32_t>(std::stoul(c.s.substr(start, c.pos - start)));
    }
    out.emplace_back(read_ident(c), coeff);
    if (!c.consume('+')) break;
  }
}

struct ExprParser {
  Cursor& c;
  size_t n;

  RationalFunction parse() { return expr(); }

  RationalFunction expr() {
    RationalFunction r = term();
    while (true) {
      if (c.consume('+'))
        r = r + term();
      else if (c.peek() == '-' && !(c.pos + 1 < c.s.size() && c.s[c.pos + 1] == '>')) {
        c.consume('-');
        r = r - term();
      } else {
        break;
      }
    }
    return r;
  }

  RationalFunction term() {
    RationalFunction r = factor();
    while (true) {
      if (c.consume('*'))
        r = r * factor();
      else if (c.consume('/'))
        r = r / factor();
      else
        break;
    }
    return r;
  }

  RationalFunction factor() {
    if (c.consume('-')) return RationalFunction(Polynomial::constant(n, -1)) * factor();
    if (c.consume('+')) return factor();
    RationalFunction base = atom();
    if (c.consume('^')) {
      bool neg = c.consume('-');
      c.skip_ws();
      if (!std::isdigit(static_cast<unsigned char>(c.peek()))) c.fail("expected integer exponent");
      size_t start = c.pos;
      while (c.pos < c.s.size() && std::isdigit(static_cast<unsigned char>(c.s[c.pos]))) ++c.pos;
      int32_t k = static_cast<int32_t>(std::stol(c.s.substr(start, c.pos - start)));
      return base.pow(neg ? -k : k);
    }
    return base;
  }

  RationalFunction atom() {
    c.skip_ws();
    if (c.consume('(')) {
      RationalFunction r = expr();
      if (!c.consume(')')) c.fail("expected ')'");
      return r;
    }
    char ch = c.peek();
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.')
      return RationalFunction(Polynomial::constant(n, read_number(c)));
    if (ident_start(ch)) {
      size_t mark = c.pos;
      std::string id = read_ident(c);
      if (id.size() >= 2 && id[0] == 'x' &&
          std::all_of(id.begin() + 1, id.end(),
                      [](char d) { return std::isdigit(static_cast<unsigned char>(d)); })) {
        size_t axis = std::stoul(id.substr(1));
        if (axis == 0 || axis > n) {
          c.pos = mark;
          c.fail("variable " + id + " out of range (network has " + std::to_string(n) +
                 " species)");
        }
        return RationalFunction(Polynomial::variable(n, axis - 1));
      }
      c.pos = mark;
      c.fail("unknown symbol '" + id + "' in propensity");
    }
    c.fail("expected propensity atom");
  }
};

Polynomial falling_factorial(size_t n, size_t axis, uint32_t count) {
  Polynomial r = Polynomial::constant(n, 1);
  Polynomial x = Polynomial::variable(n, axis);
  for (uint32_t i = 0; i < count; ++i)
    r = r * (x - Polynomial::constant(n, static_cast<long>(i)));
  return r;
}

struct RawReaction {
  std::vector<std::pair<std::string, uint32_t>> lhs, rhs;
  std::string propensity_src;
  size_t line;
};

}  // namespace

ReactionNetwork parse_network(const std::string& text) {
  std::vector<std::string> species;
  bool species_fixed = false;
  std::vector<RawReaction> raw;

  auto species_index = [&](const std::string& name, size_t line, size_t col) -> size_t {
    auto it = std::find(species.begin(), species.end(), name);
    if (it != species.end()) return static_cast<size_t>(it - species.begin());
    if (species_fixed)
      throw ParseError("species '" + name + "' not in the species: header", line, col);
    species.push_back(name);
    return species.size() - 1;
  };

  std::istringstream in(text);
  std::string linebuf;
  size_t lineno = 0;
  while (std::getline(in, linebuf)) {
    ++lineno;
    auto hash = linebuf.find('#');
    if (hash != std::string::npos) linebuf.erase(hash);
    Cursor c{linebuf, 0, lineno};
    if (c.eof()) continue;

    if (c.consume_word("species:")) {
      if (!raw.empty() || !species.empty())
        c.fail("species: header must precede all reactions");
      while (!c.eof()) species.push_back(read_ident(c));
      if (species.empty()) c.fail("empty species: header");
      species_fixed = true;
      continue;
    }

    RawReaction r;
    r.line = lineno;
    parse_side(c, r.lhs);
    if (!(c.consume('-') && c.consume('>'))) c.fail("expected '->'");
    parse_side(c, r.rhs);
    if (!c.consume('@')) c.fail("expected '@' before propensity");
    c.skip_ws();
    r.propensity_src = linebuf.substr(c.pos);
    if (r.propensity_src.empty()) c.fail("missing propensity");
    for (const auto& [name, coeff] : r.lhs) species_index(name, lineno, 1);
    for (const auto& [name, coeff] : r.rhs) species_index(name, lineno, 1);
    raw.push_back(std::move(r));
  }

  if (raw.empty()) throw ParseError("no reactions", lineno == 0 ? 1 : lineno, 1);

  size_t n = species.size();
  std::vector<Reaction> reactions;
  for (const auto& r : raw) {
    Reaction rx;
    rx.v_minus.assign(n, 0);
    rx.v_plus.assign(n, 0);
    for (const auto& [name, coeff] : r.lhs)
      rx.v_minus[species_index(name, r.line, 1)] += coeff;
    for (const auto& [name, coeff] : r.rhs)
      rx.v_plus[species_index(name, r.line, 1)] += coeff;

    bool zero_net = true;
    for (size_t i = 0; i < n; ++i)
      if (rx.v_minus[i] != rx.v_plus[i]) zero_net = false;
    if (zero_net) throw ParseError("zero net-change reaction", r.line, 1);

    Cursor c{r.propensity_src, 0, r.line};
    if (c.consume_word("mass_action")) {
      if (!c.consume('(')) c.fail("expected '(' after mass_action");
      Rational k = read_number(c);
      if (c.consume('/')) {
        Rational den = read_number(c);
        if (den == 0) c.fail("zero denominator in rate constant");
        k /= den;
      }
      if (!c.consume(')')) c.fail("expected ')'");
      if (!c.eof()) c.fail("trailing input after mass_action(...)");
      if (k <= 0) throw ParseError("non-positive rate constant", r.line, 1);
      Polynomial s = Polynomial::constant(n, k);
      for (size_t i = 0; i < n; ++i) s = s * falling_factorial(n, i, rx.v_minus[i]);
      rx.propensity = RationalFunction(s);
      rx.is_mass_action = true;
      rx.rate = k;
    } else {
      ExprParser ep{c, n};
      rx.propensity = ep.parse();
      if (!c.eof()) c.fail("trailing input after propensity");
    }
    reactions.push_back(std::move(rx));
  }

  return ReactionNetwork(std::move(species), std::move(reactions));
}

Polynomial parse_polynomial(const std::string& text, size_t n) {
  Cursor c{text, 0, 1};
  ExprParser ep{c, n};
  RationalFunction r = ep.parse();
  if (!c.eof()) c.fail("trailing input after expression");
  if (!r.den_trivial()) throw ParseError("expected a polynomial, found a denominator", 1, 1);
  return r.num();
}

ReactionNetwork::ReactionNetwork(std::vector<std::string> species,
                                 std::vector<Reaction> reactions,
                                 std::optional<StateConstraint> constraint)
    : species_(std::move(species)),
      reactions_(std::move(reactions)),
      o_(Polynomial::constant(species_.empty() ? 1 : species_.size(), 1)),
      constraint_(std::move(constraint)) {
  if (species_.empty()) throw std::invalid_argument("network without species");
  size_t nn = species_.size();

  std::vector<std::vector<Polynomial>> den_lists;
  for (const auto& r : reactions_) den_lists.push_back(r.propensity.den_factors());
  auto o_factors = factor_lcm(den_lists);
  o_ = Polynomial::constant(nn, 1);
  for (const auto& f : o_factors) o_ = o_ * f;

  for (auto& r : reactions_) {
    if (r.v_minus.size() != nn || r.v_plus.size() != nn)
      throw std::invalid_argument("stoichiometry arity mismatch");
    bool zero_net = true;
    for (int64_t v : r.net())
      if (v != 0) zero_net = false;
    if (zero_net) throw std::invalid_argument("zero net-change reaction");
    r.s = r.propensity.num() * factor_complement(o_factors, r.propensity.den_factors(), nn);
    d_a_ = std::max(d_a_, r.s.degree());
  }
  d_o_ = o_.degree();
}

ReactionNetwork ReactionNetwork::with_constraint(StateConstraint c) const {
  ReactionNetwork r(*this);
  r.constraint_ = std::move(c);
  return r;
}

Rational ReactionNetwork::propensity_eval(size_t j, const State& x) const {
  Rational ox = o_.eval(x);
  if (ox <= 0)
    throw std::domain_error("common denominator not positive at state (o(x) = " +
                            rational_to_string(ox) + ")");
  return reaction(j).s.eval(x) / ox;
}

Rational ReactionNetwork::exit_rate(const State& x) const {
  Rational q = 0;
  for (size_t j = 0; j < reactions_.size(); ++j) q += propensity_eval(j, x);
  return q;
}

bool ReactionNetwork::state_valid(const State& x) const {
  for (int64_t v : x)
    if (v < 0) return false;
  return !constraint_ || constraint_->contains(x);
}

std::vector<State> ReactionNetwork::incoming_states(const State& x) const {
  std::set<State> seen;
  for (size_t j = 0; j < reactions_.size(); ++j) {
    auto v = reactions_[j].net();
    State y(x);
    bool ok = true;
    for (size_t i = 0; i < y.size(); ++i) {
      y[i] -= v[i];
      if (y[i] < 0) ok = false;
    }
    if (!ok || !state_valid(y)) continue;
    if (propensity_eval(j, y) > 0) seen.insert(y);
  }
  return {seen.begin(), seen.end()};
}

double ReactionNetwork::stationary_residual(const std::map<State, double>& p,
                                            const State& x) const {
  auto prob = [&](const State& y) {
    auto it = p.find(y);
    return it == p.end() ? 0.0 : it->second;
  };
  double acc = 0;
  for (size_t j = 0; j < reactions_.size(); ++j) {
    auto v = reactions_[j].net();
    State y(x);
    bool ok = true;
    for (size_t i = 0; i < y.size(); ++i) {
      y[i] -= v[i];
      if (y[i] < 0) ok = false;
    }
    if (ok && state_valid(y)) acc += to_double(propensity_eval(j, y)) * prob(y);
  }
  acc -= to_double(exit_rate(x)) * prob(x);
  return acc;
}

namespace {

std::string side_to_string(const std::vector<uint32_t>& v,
                           const std::vector<std::string>& species) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 0) continue;
    if (!s.empty()) s += " + ";
    if (v[i] > 1) s += std::to_string(v[i]);
    s += species[i];
  }
  return s.empty() ? "0" : s;
}

}  // namespace

std::string ReactionNetwork::pretty_print() const {
  std::string out = "species:";
  for (const auto& sp : species_) out += " " + sp;
  out += "\n";
  for (const auto& r : reactions_) {
    out += side_to_string(r.v_minus, species_) + " -> " + side_to_string(r.v_plus, species_) +
           " @ ";
    if (r.is_mass_action) {
      out += "mass_action(" + rational_to_string(r.rate) + ")";
    } else {
      std::string num = "(" + r.propensity.num().to_string() + ")";
      if (r.propensity.den_trivial()) {
        out += num;
      } else {
        std::string den;
        for (const auto& f : r.propensity.den_factors()) {
          if (!den.empty()) den += "*";
          den += "(" + f.to_string() + ")";
        }
        out += num + "/(" + den + ")";
      }
    }
    out += "\n";
  }
  return out;
}

namespace {

nlohmann::json poly_to_json(const Polynomial& p) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [a, c] : p.terms()) {
    nlohmann::json idx = nlohmann::json::array();
    for (uint32_t e : a.e) idx.push_back(e);
    terms.push_back({idx, c.get_num().get_str(), c.get_den().get_str()});
  }
  return terms;
}

Polynomial poly_from_json(const nlohmann::json& j, size_t n) {
  Polynomial p(n);
  for (const auto& t : j) {
    MultiIndex a(n);
    for (size_t i = 0; i < n; ++i) a.e[i] = t.at(0).at(i).get<uint32_t>();
    Rational c(mpz_class(t.at(1).get<std::string>()), mpz_class(t.at(2).get<std::string>()));
    c.canonicalize();
    p.add_term(a, c);
  }
  return p;
}

}  // namespace

std::string ReactionNetwork::to_json() const {
  nlohmann::json j;
  j["species"] = species_;
  j["denominator"] = poly_to_json(o_);
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : reactions_) {
    nlohmann::json rj;
    rj["vminus"] = r.v_minus;
    rj["vplus"] = r.v_plus;
    rj["numerator"] = poly_to_json(r.s);
    if (r.is_mass_action) rj["mass_action_rate"] = rational_to_string(r.rate);
    rs.push_back(rj);
  }
  j["reactions"] = rs;
  return j.dump(2);
}

ReactionNetwork ReactionNetwork::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  std::vector<std::string> species = j.at("species").get<std::vector<std::string>>();
  size_t n = species.size();
  Polynomial o = poly_from_json(j.at("denominator"), n);
  std::vector<Reaction> reactions;
  for (const auto& rj : j.at("reactions")) {
    Reaction r;
    r.v_minus = rj.at("vminus").get<std::vector<uint32_t>>();
    r.v_plus = rj.at("vplus").get<std::vector<uint32_t>>();
    Polynomial s = poly_from_json(rj.at("numerator"), n);
    if (o.is_constant()) {
      Rational c = o.coeff(MultiIndex(n));
      r.propensity = RationalFunction(s * Rational(1 / c));
    } else {
      r.propensity = RationalFunction(s, {o});
    }
    if (rj.contains("mass_action_rate")) {
      r.is_mass_action = true;
      r.rate = parse_rational(rj.at("mass_action_rate").get<std::string>());
    }
    reactions.push_back(std::move(r));
  }
  return ReactionNetwork(std::move(species), std::move(reactions));
}

}  // namespace cmeb
