#pragma once

#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace cmeb {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit, NumericalFailure };

std::string to_string(SolveStatus s);

struct ToleranceConfig {
  double feas = 1e-8;  // primal feasibility
  double opt = 1e-9;   // simplex reduced-cost optimality
  double gap = 1e-7;   // conic duality gap
  size_t max_iter = 20000;
};

// Rows are stored uniformly as lo <= a.x <= hi; an equality has lo == hi.
class LinearProgram {
 public:
  enum class Sense { Min, Max };
  struct Row {
    std::vector<std::pair<size_t, double>> coeffs;
    double lo, hi;
  };

  explicit LinearProgram(size_t num_vars, Sense sense = Sense::Min);

  size_t num_vars() const { return n_; }
  size_t num_rows() const { return rows_.size(); }
  Sense sense() const { return sense_; }
  void set_sense(Sense s) { sense_ = s; }

  void set_objective(size_t var, double coeff);
  void clear_objective();
  const std::vector<double>& objective() const { return c_; }

  size_t add_equality(std::vector<std::pair<size_t, double>> coeffs, double rhs);
  size_t add_range(std::vector<std::pair<size_t, double>> coeffs, double lo, double hi);
  const std::vector<Row>& rows() const { return rows_; }

  void set_bounds(size_t var, double lo, double hi);
  double var_lo(size_t var) const { return lo_[var]; }
  double var_hi(size_t var) const { return hi_[var]; }

  void set_var_name(size_t var, std::string name);
  const std::string& var_name(size_t var) const { return names_[var]; }

 private:
  void check_coeffs(const std::vector<std::pair<size_t, double>>& coeffs) const;

  size_t n_;
  Sense sense_;
  std::vector<double> c_;
  std::vector<Row> rows_;
  std::vector<double> lo_, hi_;
  std::vector<std::string> names_;
};

struct SolveResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  double value = 0;
  std::vector<double> x;           // primal point (original variables)
  std::vector<double> duals;       // one multiplier per row
  std::vector<double> ray;         // certificate: Farkas duals (infeasible) or
                                   // primal improving direction (unbounded)
  double primal_residual = 0;      // max constraint/bound violation
  double dual_residual = 0;        // max reduced-cost violation (LP) / dual feas (SDP)
  double gap = 0;                  // duality gap (SDP)
  size_t iterations = 0;

  bool optimal() const { return status == SolveStatus::Optimal; }
};

// Opaque warm-start handle: keeps the previous basis so a re-solve after an
// objective swap starts from a feasible vertex.
class SimplexBasis {
 public:
  SimplexBasis();
  ~SimplexBasis();
  SimplexBasis(SimplexBasis&&) noexcept;
  SimplexBasis& operator=(SimplexBasis&&) noexcept;

  struct Impl;
  std::unique_ptr<Impl> impl;
};

SolveResult solve_lp(const LinearProgram& lp, const ToleranceConfig& tol = {},
                     SimplexBasis* warm = nullptr);

}  // namespace cmeb
