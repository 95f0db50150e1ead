#include "cmeb/multiindex.hpp"

#include <algorithm>
#include <stdexcept>

namespace cmeb {

std::string MultiIndex::to_string() const {
  std::string s;
  for (size_t i = 0; i < e.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(e[i]);
  }
  return s;
}

uint64_t binomial(uint32_t n, uint32_t k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  uint64_t r = 1;
  for (uint32_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

namespace {

void enumerate(size_t axis, uint32_t budget, MultiIndex& cur,
               std::vector<MultiIndex>& out) {
  if (axis + 1 == cur.e.size()) {
    cur.e[axis] = budget;
    out.push_back(cur);
    cur.e[axis] = 0;
    return;
  }
  for (uint32_t v = budget; v + 1 > 0; --v) {
    cur.e[axis] = v;
    enumerate(axis + 1, budget - v, cur, out);
  }
  cur.e[axis] = 0;
}

}  // namespace

MonomialBasis::MonomialBasis(size_t n, uint32_t d) : n_(n), d_(d) {
  if (n == 0) throw std::invalid_argument("basis over zero variables");
  MultiIndex cur(n);
  for (uint32_t deg = 0; deg <= d; ++deg) enumerate(0, deg, cur, list_);
}

size_t MonomialBasis::index_of(const MultiIndex& beta) const {
  auto it = std::lower_bound(list_.begin(), list_.end(), beta);
  if (it == list_.end() || !(*it == beta))
    throw std::out_of_range("multi-index of degree " +
                            std::to_string(beta.degree()) +
                            " outside basis of order " + std::to_string(d_));
  return static_cast<size_t>(it - list_.begin());
}

}  // namespace cmeb
