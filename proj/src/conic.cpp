#include "cmeb/conic.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

namespace cmeb {

std::vector<ConicProgram::SymEntry>& ConicProgram::Block::term_entries(size_t var) {
  for (auto& [v, entries] : terms)
    if (v == var) return entries;
  terms.emplace_back(var, std::vector<SymEntry>{});
  return terms.back().second;
}

ConicProgram::ConicProgram(size_t num_vars, Sense sense)
    : n_(num_vars), sense_(sense), c_(num_vars, 0.0) {}

void ConicProgram::set_objective(size_t var, double coeff) {
  if (var >= n_) throw std::invalid_argument("variable index out of range");
  if (!std::isfinite(coeff)) throw std::invalid_argument("non-finite objective");
  c_[var] = coeff;
}

size_t ConicProgram::add_equality(std::vector<std::pair<size_t, double>> coeffs, double rhs) {
  for (const auto& [j, a] : coeffs) {
    if (j >= n_) throw std::invalid_argument("variable index out of range");
    if (!std::isfinite(a)) throw std::invalid_argument("non-finite coefficient");
  }
  if (!std::isfinite(rhs)) throw std::invalid_argument("non-finite rhs");
  eq_.push_back(EqRow{std::move(coeffs), rhs});
  return eq_.size() - 1;
}

size_t ConicProgram::add_block(size_t dim) {
  if (dim == 0) throw std::invalid_argument("empty block");
  blocks_.push_back(Block{dim, {}, {}});
  return blocks_.size() - 1;
}

void ConicProgram::block_add_constant(size_t block, size_t r, size_t c, double v) {
  auto& b = blocks_.at(block);
  if (r < c) std::swap(r, c);
  if (r >= b.dim) throw std::invalid_argument("block entry out of range");
  b.constant.push_back(SymEntry{r, c, v});
}

void ConicProgram::block_add_term(size_t block, size_t var, size_t r, size_t c, double v) {
  auto& b = blocks_.at(block);
  if (var >= n_) throw std::invalid_argument("variable index out of range");
  if (r < c) std::swap(r, c);
  if (r >= b.dim) throw std::invalid_argument("block entry out of range");
  b.term_entries(var).push_back(SymEntry{r, c, v});
}

bool ConicProgram::operator==(const ConicProgram& o) const {
  auto dump_block = [](const Block& b) {
    std::vector<std::tuple<size_t, size_t, size_t, double>> flat;  // (var+1, r, c, accum)
    std::map<std::tuple<size_t, size_t, size_t>, double> acc;
    for (const auto& e : b.constant) acc[{0, e.r, e.c}] += e.v;
    for (const auto& [v, es] : b.terms)
      for (const auto& e : es) acc[{v + 1, e.r, e.c}] += e.v;
    for (const auto& [k, val] : acc)
      if (val != 0) flat.emplace_back(std::get<0>(k), std::get<1>(k), std::get<2>(k), val);
    return flat;
  };
  if (n_ != o.n_ || sense_ != o.sense_ || c_ != o.c_) return false;
  if (eq_.size() != o.eq_.size() || blocks_.size() != o.blocks_.size()) return false;
  for (size_t i = 0; i < eq_.size(); ++i) {
    std::map<size_t, double> a, b;
    for (auto& [j, v] : eq_[i].coeffs) a[j] += v;
    for (auto& [j, v] : o.eq_[i].coeffs) b[j] += v;
    if (a != b || eq_[i].rhs != o.eq_[i].rhs) return false;
  }
  for (size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].dim != o.blocks_[i].dim) return false;
    if (dump_block(blocks_[i]) != dump_block(o.blocks_[i])) return false;
  }
  return true;
}

std::vector<double> VariableScaling::unscale_point(const std::vector<double>& yhat) const {
  std::vector<double> y(yhat.size());
  for (size_t i = 0; i < yhat.size(); ++i) y[i] = yhat[i] * mult[i];
  return y;
}

std::pair<ConicProgram, VariableScaling> scale_conic(const ConicProgram& cp,
                                                     const std::vector<double>& mult) {
  if (mult.size() != cp.num_vars()) throw std::invalid_argument("one multiplier per variable");
  for (double m : mult)
    if (!(m > 0) || !std::isfinite(m)) throw std::invalid_argument("multipliers must be positive");
  ConicProgram out(cp.num_vars(), cp.sense());
  for (size_t i = 0; i < cp.num_vars(); ++i) out.set_objective(i, cp.objective()[i] * mult[i]);
  for (const auto& row : cp.equalities()) {
    auto coeffs = row.coeffs;
    for (auto& [j, a] : coeffs) a *= mult[j];
    out.add_equality(std::move(coeffs), row.rhs);
  }
  for (const auto& b : cp.blocks()) {
    size_t bi = out.add_block(b.dim);
    for (const auto& e : b.constant) out.block_add_constant(bi, e.r, e.c, e.v);
    for (const auto& [var, es] : b.terms)
      for (const auto& e : es) out.block_add_term(bi, var, e.r, e.c, e.v * mult[var]);
  }
  return {out, VariableScaling{mult}};
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd to_dense(size_t dim, const std::vector<ConicProgram::SymEntry>& entries) {
  MatrixXd M = MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (const auto& e : entries) {
    M(static_cast<Eigen::Index>(e.r), static_cast<Eigen::Index>(e.c)) += e.v;
    if (e.r != e.c) M(static_cast<Eigen::Index>(e.c), static_cast<Eigen::Index>(e.r)) += e.v;
  }
  return M;
}

double min_eig(const MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// largest alpha in (0, 1] with S + alpha dS >= (1 - tau-ish) positive definite
double max_step(const Eigen::LLT<MatrixXd>& chol, const MatrixXd& dS) {
  MatrixXd L = chol.matrixL();
  MatrixXd T = L.triangularView<Eigen::Lower>().solve(dS);
  MatrixXd W = L.triangularView<Eigen::Lower>().solve(T.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (W + W.transpose()), Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues().minCoeff();
  if (lmin >= 0) return 1.0;
  return std::min(1.0, -1.0 / lmin);
}

struct Reduced {
  size_t k = 0;                 // reduced dimension
  VectorXd yp;                  // particular solution of the equalities
  MatrixXd Z;                   // orthonormal nullspace basis
  VectorXd chat;                // reduced objective
  std::vector<MatrixXd> Chat;   // per block
  std::vector<std::vector<MatrixXd>> Ahat;  // per block, per reduced variable
  std::vector<size_t> dims;
};

}  // namespace

SolveResult solve_sdp(const ConicProgram& cp, const ToleranceConfig& tol,
                      const SdpOptions& opts) {
  const size_t nv = cp.num_vars();
  SolveResult res;

  for (const auto& b : cp.blocks())
    if (b.dim > opts.dense_limit)
      throw std::invalid_argument("block dimension " + std::to_string(b.dim) +
                                  " exceeds the dense solver limit " +
                                  std::to_string(opts.dense_limit));

  double flip = cp.sense() == ConicProgram::Sense::Max ? -1.0 : 1.0;
  VectorXd c(static_cast<Eigen::Index>(nv));
  for (size_t i = 0; i < nv; ++i) c[static_cast<Eigen::Index>(i)] = flip * cp.objective()[i];

  // eliminate the equalities: y = yp + Z u
  const size_t p = cp.equalities().size();
  MatrixXd A = MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(nv));
  VectorXd b(static_cast<Eigen::Index>(p));
  for (size_t r = 0; r < p; ++r) {
    for (const auto& [j, a] : cp.equalities()[r].coeffs)
      A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) += a;
    b[static_cast<Eigen::Index>(r)] = cp.equalities()[r].rhs;
  }

  Reduced red;
  if (p > 0) {
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);
    cod.setThreshold(1e-12);
    red.yp = cod.solve(b);
    double feas = (A * red.yp - b).cwiseAbs().maxCoeff();
    double bscale = 1.0 + b.cwiseAbs().maxCoeff();
    if (feas > 1e-9 * bscale) {
      res.status = SolveStatus::Infeasible;
      return res;
    }
    Eigen::Index rank = cod.rank();
    // nullspace from the full QR of A^T: last nv - rank columns of Q
    Eigen::HouseholderQR<MatrixXd> qr(A.transpose());
    MatrixXd Q = qr.householderQ();
    red.Z = Q.rightCols(static_cast<Eigen::Index>(nv) - rank);
  } else {
    red.yp = VectorXd::Zero(static_cast<Eigen::Index>(nv));
    red.Z = MatrixXd::Identity(static_cast<Eigen::Index>(nv), static_cast<Eigen::Index>(nv));
  }
  red.k = static_cast<size_t>(red.Z.cols());
  red.chat = red.Z.transpose() * c;
  const double obj_shift = c.dot(red.yp);

  for (const auto& blk : cp.blocks()) {
    MatrixXd C0 = to_dense(blk.dim, blk.constant);
    std::vector<MatrixXd> Afull;
    std::vector<size_t> vars;
    for (const auto& [var, es] : blk.terms) {
      Afull.push_back(to_dense(blk.dim, es));
      vars.push_back(var);
    }
    MatrixXd Chat = C0;
    for (size_t t = 0; t < vars.size(); ++t)
      Chat += red.yp[static_cast<Eigen::Index>(vars[t])] * Afull[t];
    std::vector<MatrixXd> Ahat(red.k,
                               MatrixXd::Zero(static_cast<Eigen::Index>(blk.dim),
                                              static_cast<Eigen::Index>(blk.dim)));
    for (size_t i = 0; i < red.k; ++i)
      for (size_t t = 0; t < vars.size(); ++t) {
        double z = red.Z(static_cast<Eigen::Index>(vars[t]), static_cast<Eigen::Index>(i));
        if (z != 0) Ahat[i] += z * Afull[t];
      }
    red.Chat.push_back(std::move(Chat));
    red.Ahat.push_back(std::move(Ahat));
    red.dims.push_back(blk.dim);
  }

  const size_t nb = red.dims.size();
  const size_t k = red.k;

  auto assemble_y = [&](const VectorXd& u) {
    VectorXd y = red.yp + red.Z * u;
    std::vector<double> out(nv);
    for (size_t i = 0; i < nv; ++i) out[i] = y[static_cast<Eigen::Index>(i)];
    return out;
  };

  auto finish_duals = [&](const std::vector<MatrixXd>& X) {
    // multipliers for the equality rows: A^T lambda = c - sum_b A_b^*(X_b)
    if (p == 0) return;
    VectorXd rhs = c;
    size_t bi = 0;
    for (const auto& blk : cp.blocks()) {
      for (const auto& [var, es] : blk.terms) {
        double dot = 0;
        MatrixXd Ad = to_dense(blk.dim, es);
        dot = (Ad.cwiseProduct(X[bi])).sum();
        rhs[static_cast<Eigen::Index>(var)] -= dot;
      }
      ++bi;
    }
    VectorXd lam = A.transpose().colPivHouseholderQr().solve(rhs);
    res.duals.assign(p, 0.0);
    for (size_t r = 0; r < p; ++r)
      res.duals[r] = flip * lam[static_cast<Eigen::Index>(r)];
  };

  if (k == 0 || nb == 0) {
    // fully determined by the equalities, or a plain linear problem over them
    VectorXd u = VectorXd::Zero(0);
    if (nb == 0 && k > 0) {
      // unconstrained directions: bounded only if chat == 0
      if (red.chat.cwiseAbs().maxCoeff() > 1e-12) {
        res.status = SolveStatus::Unbounded;
        return res;
      }
    }
    double viol = 0;
    for (size_t bi = 0; bi < nb; ++bi) viol = std::min(viol, min_eig(red.Chat[bi]));
    res.x = assemble_y(VectorXd::Zero(static_cast<Eigen::Index>(k)));
    if (viol < -tol.feas * 10) {
      res.status = SolveStatus::Infeasible;
      return res;
    }
    res.status = SolveStatus::Optimal;
    res.value = flip * obj_shift;
    res.primal_residual = std::max(0.0, -viol);
    std::vector<MatrixXd> X0;
    for (size_t bi = 0; bi < nb; ++bi)
      X0.push_back(MatrixXd::Zero(static_cast<Eigen::Index>(red.dims[bi]),
                                  static_cast<Eigen::Index>(red.dims[bi])));
    finish_duals(X0);
    return res;
  }

  // interior-point iteration state
  std::vector<MatrixXd> S(nb), X(nb);
  double data_scale = 1.0;
  for (size_t bi = 0; bi < nb; ++bi) data_scale = std::max(data_scale, red.Chat[bi].norm());
  double kdim = 0;
  for (size_t bi = 0; bi < nb; ++bi) kdim += static_cast<double>(red.dims[bi]);
  for (size_t bi = 0; bi < nb; ++bi) {
    Eigen::Index d = static_cast<Eigen::Index>(red.dims[bi]);
    S[bi] = data_scale * MatrixXd::Identity(d, d);
    X[bi] = std::max(1.0, red.chat.cwiseAbs().maxCoeff()) * MatrixXd::Identity(d, d);
  }
  VectorXd u = VectorXd::Zero(static_cast<Eigen::Index>(k));

  auto block_S_of_u = [&](const VectorXd& uu, size_t bi) {
    MatrixXd M = red.Chat[bi];
    for (size_t i = 0; i < k; ++i)
      if (uu[static_cast<Eigen::Index>(i)] != 0)
        M += uu[static_cast<Eigen::Index>(i)] * red.Ahat[bi][i];
    return M;
  };

  double cnorm = 1.0 + red.chat.cwiseAbs().maxCoeff();

  size_t iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    // residuals
    std::vector<MatrixXd> Rp(nb);
    double rp_norm = 0;
    for (size_t bi = 0; bi < nb; ++bi) {
      Rp[bi] = block_S_of_u(u, bi) - S[bi];
      rp_norm = std::max(rp_norm, Rp[bi].cwiseAbs().maxCoeff());
    }
    VectorXd rd = red.chat;
    for (size_t bi = 0; bi < nb; ++bi)
      for (size_t i = 0; i < k; ++i)
        rd[static_cast<Eigen::Index>(i)] -= (red.Ahat[bi][i].cwiseProduct(X[bi])).sum();
    double rd_norm = rd.cwiseAbs().maxCoeff();

    double gap = 0;
    for (size_t bi = 0; bi < nb; ++bi) gap += (X[bi].cwiseProduct(S[bi])).sum();
    double mu = gap / kdim;

    double pval = red.chat.dot(u);
    double dval = 0;
    for (size_t bi = 0; bi < nb; ++bi) dval -= (red.Chat[bi].cwiseProduct(X[bi])).sum();
    double rel_gap = std::abs(pval - dval) / (1.0 + std::abs(pval) + std::abs(dval));

    if (rel_gap <= tol.gap && rp_norm <= tol.feas * (1 + data_scale) &&
        rd_norm <= tol.feas * cnorm) {
      res.status = SolveStatus::Optimal;
      res.x = assemble_y(u);
      res.value = flip * (pval + obj_shift);
      res.gap = rel_gap;
      res.primal_residual = rp_norm;
      res.dual_residual = rd_norm;
      res.iterations = iter;
      finish_duals(X);
      return res;
    }
    if (pval < -1e13 * (1 + data_scale)) {
      res.status = SolveStatus::Unbounded;
      res.x = assemble_y(u);
      res.iterations = iter;
      return res;
    }

    // NT scaling per block: W = L V D^{-1} V^T L^T with R^T L = U D V^T,
    // X = L L^T, S = R R^T; then W S W = X.
    std::vector<Eigen::LLT<MatrixXd>> cholS(nb), cholX(nb);
    std::vector<MatrixXd> W(nb), Sinv(nb);
    bool chol_ok = true;
    for (size_t bi = 0; bi < nb; ++bi) {
      cholS[bi].compute(S[bi]);
      cholX[bi].compute(X[bi]);
      if (cholS[bi].info() != Eigen::Success || cholX[bi].info() != Eigen::Success) {
        chol_ok = false;
        break;
      }
      MatrixXd L = cholX[bi].matrixL();
      MatrixXd R = cholS[bi].matrixL();
      Eigen::JacobiSVD<MatrixXd> svd(R.transpose() * L,
                                     Eigen::ComputeFullU | Eigen::ComputeFullV);
      MatrixXd G = L * svd.matrixV() * svd.singularValues().cwiseInverse().cwiseSqrt().asDiagonal();
      W[bi] = G * G.transpose();
      Eigen::Index d = static_cast<Eigen::Index>(red.dims[bi]);
      Sinv[bi] = cholS[bi].solve(MatrixXd::Identity(d, d));
    }
    if (!chol_ok) {
      res.status = SolveStatus::NumericalFailure;
      res.x = assemble_y(u);
      res.iterations = iter;
      return res;
    }

    // Schur complement M_ij = sum_b <Ahat_i, W Ahat_j W>
    MatrixXd M = MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    std::vector<std::vector<MatrixXd>> WAW(nb);
    for (size_t bi = 0; bi < nb; ++bi) {
      WAW[bi].resize(k);
      for (size_t j = 0; j < k; ++j) WAW[bi][j] = W[bi] * red.Ahat[bi][j] * W[bi];
      for (size_t i = 0; i < k; ++i)
        for (size_t j = i; j < k; ++j) {
          double v = (red.Ahat[bi][i].cwiseProduct(WAW[bi][j])).sum();
          M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += v;
          if (i != j) M(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) += v;
        }
    }

    Eigen::LLT<MatrixXd> Mchol;
    double reg = 0;
    for (int attempt = 0; attempt < 6; ++attempt) {
      MatrixXd Mreg = M;
      if (reg > 0)
        Mreg += reg * MatrixXd::Identity(static_cast<Eigen::Index>(k),
                                         static_cast<Eigen::Index>(k));
      Mchol.compute(Mreg);
      if (Mchol.info() == Eigen::Success) break;
      reg = reg == 0 ? 1e-12 * (1 + M.diagonal().cwiseAbs().maxCoeff()) : reg * 100;
    }
    if (Mchol.info() != Eigen::Success) {
      res.status = SolveStatus::NumericalFailure;
      res.x = assemble_y(u);
      res.iterations = iter;
      return res;
    }

    // direction for a given centering target; Rc_b = sigma*mu*Sinv - X
    auto solve_dir = [&](double sigma, VectorXd& du, std::vector<MatrixXd>& dS,
                         std::vector<MatrixXd>& dX) {
      VectorXd rhs = -rd;  // note: d-feas equations read <Ahat_i, X + dX> = chat_i
      for (size_t bi = 0; bi < nb; ++bi) {
        MatrixXd Rc = sigma * mu * Sinv[bi] - X[bi];
        MatrixXd T = Rc - W[bi] * Rp[bi] * W[bi];
        for (size_t i = 0; i < k; ++i)
          rhs[static_cast<Eigen::Index>(i)] += (red.Ahat[bi][i].cwiseProduct(T)).sum();
      }
      du = Mchol.solve(rhs);
      dS.resize(nb);
      dX.resize(nb);
      for (size_t bi = 0; bi < nb; ++bi) {
        Eigen::Index d = static_cast<Eigen::Index>(red.dims[bi]);
        MatrixXd ds = Rp[bi];
        for (size_t i = 0; i < k; ++i)
          ds += du[static_cast<Eigen::Index>(i)] * red.Ahat[bi][i];
        MatrixXd Rc = sigma * mu * Sinv[bi] - X[bi];
        MatrixXd dx = Rc - W[bi] * ds * W[bi];
        dS[bi] = 0.5 * (ds + ds.transpose());
        dX[bi] = 0.5 * (dx + dx.transpose());
        (void)d;
      }
    };

    VectorXd du_aff;
    std::vector<MatrixXd> dS_aff, dX_aff;
    solve_dir(0.0, du_aff, dS_aff, dX_aff);

    double ap = 1.0, ad = 1.0;
    for (size_t bi = 0; bi < nb; ++bi) {
      ap = std::min(ap, max_step(cholS[bi], dS_aff[bi]));
      ad = std::min(ad, max_step(cholX[bi], dX_aff[bi]));
    }
    double a_aff = std::min(ap, ad) * 0.98;
    double gap_aff = 0;
    for (size_t bi = 0; bi < nb; ++bi)
      gap_aff += ((X[bi] + a_aff * dX_aff[bi]).cwiseProduct(S[bi] + a_aff * dS_aff[bi])).sum();
    double sigma = std::pow(std::max(gap_aff, 0.0) / gap, 3);
    sigma = std::clamp(sigma, 1e-8, 0.9999);

    VectorXd du;
    std::vector<MatrixXd> dS, dX;
    solve_dir(sigma, du, dS, dX);

    ap = ad = 1.0;
    for (size_t bi = 0; bi < nb; ++bi) {
      ap = std::min(ap, max_step(cholS[bi], dS[bi]));
      ad = std::min(ad, max_step(cholX[bi], dX[bi]));
    }
    ap = std::min(1.0, 0.98 * ap);
    ad = std::min(1.0, 0.98 * ad);
    if (ap < 1e-10 && ad < 1e-10) {
      res.status = SolveStatus::NumericalFailure;
      res.x = assemble_y(u);
      res.iterations = iter;
      return res;
    }

    u += ap * du;
    for (size_t bi = 0; bi < nb; ++bi) {
      S[bi] += ap * dS[bi];
      X[bi] += ad * dX[bi];
      S[bi] = 0.5 * (S[bi] + S[bi].transpose());
      X[bi] = 0.5 * (X[bi] + X[bi].transpose());
    }
  }

  res.status = SolveStatus::IterationLimit;
  res.x = assemble_y(u);
  res.iterations = iter;
  return res;
}

}  // namespace cmeb
