#pragma once

#include "cmeb/linprog.hpp"

namespace cmeb {

// min/max c.y over free scalars y subject to linear equalities A y = b and
// per-block linear matrix inequalities C_b + sum_i y_i A_{b,i} >= 0 (PSD).
// Symmetric matrices are stored as lower triangles.
class ConicProgram {
 public:
  using Sense = LinearProgram::Sense;
  struct SymEntry {
    size_t r, c;  // r >= c
    double v;
  };
  struct Block {
    size_t dim;
    std::vector<SymEntry> constant;
    std::vector<std::pair<size_t, std::vector<SymEntry>>> terms;  // by variable

    std::vector<SymEntry>& term_entries(size_t var);
  };
  struct EqRow {
    std::vector<std::pair<size_t, double>> coeffs;
    double rhs;
  };

  explicit ConicProgram(size_t num_vars, Sense sense = Sense::Min);

  size_t num_vars() const { return n_; }
  Sense sense() const { return sense_; }
  void set_sense(Sense s) { sense_ = s; }

  void set_objective(size_t var, double coeff);
  const std::vector<double>& objective() const { return c_; }

  size_t add_equality(std::vector<std::pair<size_t, double>> coeffs, double rhs);
  const std::vector<EqRow>& equalities() const { return eq_; }

  size_t add_block(size_t dim);
  void block_add_constant(size_t block, size_t r, size_t c, double v);
  void block_add_term(size_t block, size_t var, size_t r, size_t c, double v);
  const std::vector<Block>& blocks() const { return blocks_; }

  bool operator==(const ConicProgram& o) const;

 private:
  size_t n_;
  Sense sense_;
  std::vector<double> c_;
  std::vector<EqRow> eq_;
  std::vector<Block> blocks_;
};

struct SdpOptions {
  size_t max_iter = 200;
  size_t dense_limit = 40;  // largest block dimension accepted
};

SolveResult solve_sdp(const ConicProgram& cp, const ToleranceConfig& tol = {},
                      const SdpOptions& opts = {});

// Substitutes y_i = mult_i * yhat_i; the optimal value is unchanged, points
// map back through the returned multipliers.
struct VariableScaling {
  std::vector<double> mult;
  std::vector<double> unscale_point(const std::vector<double>& yhat) const;
};

std::pair<ConicProgram, VariableScaling> scale_conic(const ConicProgram& cp,
                                                     const std::vector<double>& mult);

}  // namespace cmeb
