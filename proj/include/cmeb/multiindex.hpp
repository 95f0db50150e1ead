#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace cmeb {

// Exponent vector of a monomial in n variables. Ordered graded-lex: first by
// total degree, then lexicographically with earlier variables dominating, so
// for n=2 the order is 1; x1, x2; x1^2, x1*x2, x2^2; ...
struct MultiIndex {
  std::vector<uint32_t> e;

  MultiIndex() = default;
  explicit MultiIndex(size_t n) : e(n, 0) {}
  MultiIndex(std::initializer_list<uint32_t> init) : e(init) {}

  size_t vars() const { return e.size(); }
  uint32_t degree() const {
    uint32_t s = 0;
    for (uint32_t v : e) s += v;
    return s;
  }

  MultiIndex operator+(const MultiIndex& o) const {
    MultiIndex r(*this);
    for (size_t i = 0; i < e.size(); ++i) r.e[i] += o.e[i];
    return r;
  }

  MultiIndex plus_unit(size_t axis) const {
    MultiIndex r(*this);
    r.e[axis] += 1;
    return r;
  }

  bool operator==(const MultiIndex& o) const { return e == o.e; }

  bool operator<(const MultiIndex& o) const {
    uint32_t da = degree(), db = o.degree();
    if (da != db) return da < db;
    return o.e < e;  // within a degree, higher leading exponents come first
  }

  std::string to_string() const;
};

// All multi-indices with |beta| <= d in n variables, in graded-lex order,
// with O(log) position lookup. Size is C(n+d, d).
class MonomialBasis {
 public:
  MonomialBasis(size_t n, uint32_t d);

  size_t size() const { return list_.size(); }
  size_t vars() const { return n_; }
  uint32_t order() const { return d_; }
  const MultiIndex& operator[](size_t i) const { return list_[i]; }
  const std::vector<MultiIndex>& list() const { return list_; }

  // Position of beta in the basis; throws if |beta| > d.
  size_t index_of(const MultiIndex& beta) const;

 private:
  size_t n_;
  uint32_t d_;
  std::vector<MultiIndex> list_;
};

uint64_t binomial(uint32_t n, uint32_t k);

}  // namespace cmeb
