#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cmeb/birthdeath.hpp"
#include "cmeb/export.hpp"
#include "cmeb/lyapunov.hpp"
#include "cmeb/moments.hpp"
#include "cmeb/ssa.hpp"
#include "cmeb/statebounds.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cmeb;

namespace {

constexpr const char* kVersion = "1.0.0";

// exit codes: 0 success, 2 configuration, 3 solver, 4 network validation
struct ExitError {
  int code;
  std::string msg;
};

[[noreturn]] void die(int code, const std::string& msg) { throw ExitError{code, msg}; }

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string rtag(double r) {
  if (r == std::floor(r) && std::fabs(r) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0f", r);
    return buf;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", r);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string piece; std::getline(in, piece, sep);) out.push_back(piece);
  return out;
}

struct Common {
  std::string network_path;
  std::string out_dir = "cmeb-out";
  size_t threads = 1;
  double tol_feas = 1e-8, tol_opt = 1e-9, tol_gap = 1e-7;
  std::string sweep;

  ToleranceConfig tol() const {
    ToleranceConfig t;
    t.feas = tol_feas;
    t.opt = tol_opt;
    t.gap = tol_gap;
    return t;
  }
};

struct Ctx {
  fs::path out;
  json manifest;
  std::vector<std::string> outputs;

  void write_file(const std::string& name, const std::string& content) {
    fs::path p = out / name;
    fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) die(2, "cannot write " + p.string());
    f << content;
    outputs.push_back(name);
  }
  void finish() {
    manifest["outputs"] = outputs;
    fs::create_directories(out);
    std::ofstream f(out / "manifest.json", std::ios::binary);
    if (!f) die(2, "cannot write " + (out / "manifest.json").string());
    f << manifest.dump(2) << "\n";
  }
};

Polynomial parse_expr_arg(const std::string& text, size_t n, const std::string& what) {
  try {
    return parse_polynomial(text, n);
  } catch (const std::exception& e) {
    die(2, what + ": " + e.what());
  }
}

MultiIndex parse_alpha(const std::string& text, size_t n) {
  MultiIndex a(n);
  auto parts = split(text, ',');
  if (parts.empty() || parts.size() > n)
    die(2, "--alpha '" + text + "': expected 1.." + std::to_string(n) + " exponents");
  for (size_t i = 0; i < parts.size(); ++i) {
    try {
      a.e[i] = (uint32_t)std::stoul(parts[i]);
    } catch (...) {
      die(2, "--alpha '" + text + "': bad exponent '" + parts[i] + "'");
    }
  }
  if (a.degree() == 0) die(2, "--alpha '" + text + "': zero multi-index");
  return a;
}

std::string alpha_tag(const MultiIndex& a) {
  std::string s;
  for (size_t i = 0; i < a.e.size(); ++i) s += (i ? "-" : "") + std::to_string(a.e[i]);
  return s;
}

void require_increasing(const std::vector<double>& r, const std::string& what) {
  for (size_t i = 0; i + 1 < r.size(); ++i)
    if (!(r[i] < r[i + 1])) die(2, what + " must be strictly increasing");
  if (r.empty()) die(2, what + " must be nonempty");
  for (double v : r)
    if (!(v > 0)) die(2, what + " entries must be positive");
}

// ---------------------------------------------------------------- moments --

struct MomentsCfg {
  std::vector<uint32_t> ds;
  std::vector<std::string> alphas{"1"};
  bool stats = false;
  size_t stats_species = 1;  // 1-based
  bool export_sdpa = false;
  bool no_scale = false;
  std::vector<double> sigma;
};

void check_orders(const ReactionNetwork& net, const std::vector<uint32_t>& ds,
                  const std::vector<MultiIndex>& targets) {
  if (ds.empty()) die(2, "--d must list at least one relaxation order");
  for (size_t i = 0; i + 1 < ds.size(); ++i)
    if (!(ds[i] < ds[i + 1])) die(2, "--d must be strictly increasing");
  uint32_t max_order = 0;
  for (const auto& a : targets) max_order = std::max(max_order, a.degree());
  for (uint32_t d : ds) {
    if (d < net.d_o() || d + 1 < net.d_a())
      die(2, "order " + std::to_string(d) + " is below the model degrees (need d >= " +
                 std::to_string(net.d_o()) + " and d >= " + std::to_string(net.d_a()) + " - 1)");
    if (d < max_order + net.d_o())
      die(2, "order " + std::to_string(d) + " cannot carry a degree-" +
                 std::to_string(max_order) + " target (need d >= |alpha| + " +
                 std::to_string(net.d_o()) + ")");
  }
}

void write_sdpa_exports(const ReactionNetwork& net, const std::vector<uint32_t>& ds,
                        const std::vector<MultiIndex>& targets, Ctx& ctx) {
  for (const auto& a : targets) {
    Polynomial f = net.o() * Polynomial::monomial(a, 1);
    for (uint32_t d : ds) {
      Spectrahedron sp = build_spectrahedron(net, d);
      ConicProgram cp = sp.program;
      set_moment_objective(cp, sp, f);
      cp.set_sense(ConicProgram::Sense::Min);
      ctx.write_file("exports/sdp_a" + alpha_tag(a) + "_d" + std::to_string(d) + "_min.dat-s",
                     to_sdpa(cp));
      cp.set_sense(ConicProgram::Sense::Max);
      ctx.write_file("exports/sdp_a" + alpha_tag(a) + "_d" + std::to_string(d) + "_max.dat-s",
                     to_sdpa(cp));
    }
  }
}

int cmd_moments(const ReactionNetwork& net, const Common& cm, const MomentsCfg& mc, Ctx& ctx) {
  std::vector<MultiIndex> targets;
  for (const auto& s : mc.alphas) targets.push_back(parse_alpha(s, net.n()));
  if (mc.stats) {
    if (mc.stats_species < 1 || mc.stats_species > net.n())
      die(2, "--species out of range");
    for (uint32_t k = 1; k <= 3; ++k) {
      MultiIndex a(net.n());
      a.e[mc.stats_species - 1] = k;
      if (std::find(targets.begin(), targets.end(), a) == targets.end()) targets.push_back(a);
    }
  }
  check_orders(net, mc.ds, targets);

  json opts;
  opts["d"] = mc.ds;
  for (const auto& a : targets) opts["alpha"].push_back(a.e);
  ctx.manifest["options"] = opts;

  if (mc.export_sdpa) {
    write_sdpa_exports(net, mc.ds, targets, ctx);
    return 0;
  }

  MomentOptions mo;
  mo.tol = cm.tol();
  mo.scale = !mc.no_scale;
  mo.sigma = mc.sigma;
  auto rows = moment_hierarchy(net, targets, mc.ds, mo);

  std::ostringstream csv;
  csv << "alpha,d,lower,upper,gap,lower_status,upper_status\n";
  json jrows = json::array(), warnings = json::array();
  std::map<std::string, std::pair<double, double>> prev;  // per-target running envelope
  bool solver_failure = false;
  for (const auto& row : rows) {
    const auto& b = row.bound;
    std::string tag = alpha_tag(row.alpha);
    csv << tag << ',' << row.d << ',' << fmt(b.lower) << ',' << fmt(b.upper) << ','
        << fmt(b.upper - b.lower) << ',' << to_string(b.lower_status) << ','
        << to_string(b.upper_status) << "\n";
    json jr;
    jr["alpha"] = row.alpha.e;
    jr["d"] = row.d;
    jr["lower"] = b.lower;
    jr["upper"] = b.upper;
    jr["lower_status"] = to_string(b.lower_status);
    jr["upper_status"] = to_string(b.upper_status);
    jr["sigma"] = b.sigma;
    jrows.push_back(jr);
    if (!b.valid()) solver_failure = true;

    auto it = prev.find(tag);
    if (it != prev.end() && b.valid()) {
      double slack = cm.tol_gap * std::max(1.0, std::abs(b.upper));
      if (b.lower < it->second.first - slack)
        warnings.push_back("alpha " + tag + ", d " + std::to_string(row.d) +
                           ": lower bound decreased from " + fmt(it->second.first) + " to " +
                           fmt(b.lower));
      if (b.upper > it->second.second + slack)
        warnings.push_back("alpha " + tag + ", d " + std::to_string(row.d) +
                           ": upper bound increased from " + fmt(it->second.second) + " to " +
                           fmt(b.upper));
    }
    if (b.valid()) prev[tag] = {b.lower, b.upper};
  }
  ctx.write_file("hierarchy.csv", csv.str());
  json jh;
  jh["rows"] = jrows;
  jh["warnings"] = warnings;
  ctx.write_file("hierarchy.json", jh.dump(2) + "\n");
  for (const auto& w : warnings) std::cerr << "cmeb: warning: " << w.get<std::string>() << "\n";

  if (mc.stats) {
    const MomentBound *m1 = nullptr, *m2 = nullptr, *m3 = nullptr;
    uint32_t dmax = mc.ds.back();
    for (const auto& row : rows) {
      if (row.d != dmax || row.alpha.degree() == 0) continue;
      if (row.alpha.e[mc.stats_species - 1] != row.alpha.degree()) continue;
      if (row.alpha.degree() == 1) m1 = &row.bound;
      if (row.alpha.degree() == 2) m2 = &row.bound;
      if (row.alpha.degree() == 3) m3 = &row.bound;
    }
    if (m1 && m2 && m3) {
      auto st = stats_intervals(*m1, *m2, *m3);
      json js;
      auto put = [&](const char* k, const Interval& iv) {
        js[k] = {{"lo", iv.lo}, {"hi", iv.hi}, {"bounded", iv.bounded()}};
      };
      put("variance", st.variance);
      put("cv", st.cv);
      put("skewness", st.skewness);
      js["species"] = net.species()[mc.stats_species - 1];
      js["d"] = dmax;
      ctx.write_file("stats.json", js.dump(2) + "\n");
    }
  }

  if (solver_failure) die(3, "one or more moment bounds failed to solve; see hierarchy.csv");
  return 0;
}

// ----------------------------------------------------- weights and c source --

struct WeightCfg {
  std::string w_expr;
  double c_user = 0;
  bool have_c_user = false;
  std::string c_sdp;  // "D" or "D:expr"
};

double resolve_c(const ReactionNetwork& net, const Polynomial& w, const WeightCfg& wc,
                 const Common& cm, json& source) {
  if (wc.have_c_user == !wc.c_sdp.empty())
    die(2, "exactly one of --c and --c-sdp is required");
  if (wc.have_c_user) {
    if (!(wc.c_user > 0)) die(2, "--c must be positive");
    source = {{"kind", "user"}, {"value", wc.c_user}};
    return wc.c_user;
  }
  auto colon = wc.c_sdp.find(':');
  uint32_t d = 0;
  try {
    size_t used = 0;
    d = (uint32_t)std::stoul(wc.c_sdp.substr(0, colon), &used);
    if (used != (colon == std::string::npos ? wc.c_sdp.size() : colon)) throw std::exception();
  } catch (...) {
    die(2, "--c-sdp expects D or D:expr, got '" + wc.c_sdp + "'");
  }
  Polynomial f = w;
  std::string f_expr;
  if (colon != std::string::npos) {
    f_expr = wc.c_sdp.substr(colon + 1);
    f = parse_expr_arg(f_expr, net.n(), "--c-sdp");
  }
  Polynomial target = f * net.o();
  if (target.degree() > d)
    die(2, "--c-sdp order " + std::to_string(d) + " is below the degree of f*o (" +
               std::to_string(target.degree()) + ")");
  MomentOptions mo;
  mo.tol = cm.tol();
  MomentBound b = bound_moment(net, d, target, mo);
  if (b.upper_status != SolveStatus::Optimal)
    die(3, "tail-constant SDP did not reach optimality: " + to_string(b.upper_status));
  source = {{"kind", "sdp"}, {"d", d}, {"value", b.upper}};
  if (!f_expr.empty()) source["f"] = f_expr;
  return b.upper;
}

WeightSpec resolve_weight(const ReactionNetwork& net, const WeightCfg& wc, const Common& cm,
                          json& source) {
  if (wc.w_expr.empty()) die(2, "--w is required");
  Polynomial w = parse_expr_arg(wc.w_expr, net.n(), "--w");
  try {
    weight_axis_powers(w);
  } catch (const std::exception& e) {
    die(2, std::string("--w is not a usable truncation weight: ") + e.what());
  }
  WeightSpec ws{w, resolve_c(net, w, wc, cm, source)};
  return ws;
}

DecisionScaling parse_scaling(const std::string& s) {
  if (s == "none") return DecisionScaling::None;
  if (s == "exit") return DecisionScaling::ByExitRate;
  if (s == "weight") return DecisionScaling::ByWeight;
  die(2, "--scaling must be none, exit or weight");
}

// --------------------------------------------------------------------- dist --

struct DistCfg {
  WeightCfg weight;
  std::vector<double> r;
  std::string scaling = "exit";
  bool force_lp = false;
  std::vector<std::string> avgs;
  double sup_ratio = 0;
  bool have_sup_ratio = false;
};

struct BdRoute {
  BirthDeathModel m;
  uint32_t p = 1;
  double a = 1;
};

std::optional<BdRoute> bd_route(const ReactionNetwork& net, const Polynomial& w) {
  if (net.n() != 1 || w.term_count() != 1) return std::nullopt;
  const auto& [alpha, coeff] = *w.terms().begin();
  if (alpha.degree() == 0 || coeff <= 0) return std::nullopt;
  try {
    return BdRoute{BirthDeathModel::from_network(net), alpha.e[0], to_double(coeff)};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

json uniqueness_json(const DistributionBounds& db) {
  auto v = uniqueness_test(db);
  json ju;
  ju["certified"] = v.unique_certified;
  ju["mass"] = v.mass;
  if (v.witness) ju["witness"] = *v.witness;
  return ju;
}

int cmd_dist(const ReactionNetwork& net, const Common& cm, const DistCfg& dc, Ctx& ctx) {
  require_increasing(dc.r, "--r");
  json source;
  WeightSpec ws = resolve_weight(net, dc.weight, cm, source);
  StateBoundOptions opts;
  opts.tol = cm.tol();
  opts.threads = cm.threads;
  opts.scaling = parse_scaling(dc.scaling);

  auto bd = dc.force_lp ? std::nullopt : bd_route(net, ws.w);
  json cert;
  cert["weight"] = dc.weight.w_expr;
  cert["c"] = ws.c;
  cert["c_source"] = source;
  cert["method"] = bd ? "closed-form" : "lp";
  json runs = json::array();

  for (size_t ri = 0; ri < dc.r.size(); ++ri) {
    double r = dc.r[ri];
    std::string csv_name = "bounds_r" + rtag(dc.r[ri]) + ".csv";
    std::ostringstream csv;
    json run;
    run["r"] = r;
    run["csv"] = csv_name;

    if (bd) {
      BdBounds bb = bd_bounds(bd->m, bd->p, ws.c / bd->a, r / bd->a);
      csv << net.species()[0] << ",lower,upper\n";
      double sl = 0, su = 0;
      int64_t mode = 0;
      for (int64_t x = 0; x <= bb.xmax; ++x) {
        csv << x << ',' << fmt(bb.lower[x]) << ',' << fmt(bb.upper[x]) << "\n";
        sl += bb.lower[x];
        su += bb.upper[x];
        if (bb.lower[x] > bb.lower[mode]) mode = x;
      }
      run["eps"] = bb.eps;
      run["informative"] = bb.eps < 1;
      run["eps_lower"] = std::clamp(1.0 - sl, 0.0, 1.0);
      run["eps_upper"] = std::max(su - 1.0 + bb.eps, bb.eps);
      run["states"] = bb.xmax + 1;
      json ju;
      ju["certified"] = bb.lower[mode] > 1e-10;
      ju["mass"] = bb.lower[mode];
      if (ju["certified"].get<bool>()) ju["witness"] = {mode};
      run["uniqueness"] = ju;
    } else {
      DistributionBounds db = bound_distribution(net, ws, r, opts);
      csv << net.species()[0];
      for (size_t i = 1; i < net.n(); ++i) csv << ',' << net.species()[i];
      csv << ",lower,upper\n";
      size_t degraded = 0;
      for (size_t k = 0; k < db.trunc.states.size(); ++k) {
        for (size_t i = 0; i < net.n(); ++i) csv << (i ? "," : "") << db.trunc.states[k][i];
        csv << ',' << fmt(db.lower[k]) << ',' << fmt(db.upper[k]) << "\n";
        if (db.lower_status[k] != SolveStatus::Optimal ||
            db.upper_status[k] != SolveStatus::Optimal)
          ++degraded;
      }
      run["eps"] = db.eps;
      run["informative"] = db.informative;
      run["eps_lower"] = db.eps_lower;
      run["eps_upper"] = db.eps_upper;
      run["states"] = db.trunc.states.size();
      run["interior"] = db.trunc.interior.size();
      run["degraded_states"] = degraded;
      run["uniqueness"] = uniqueness_json(db);
    }
    ctx.write_file(csv_name, csv.str());
    runs.push_back(run);
  }
  cert["runs"] = runs;
  ctx.write_file("certificate.json", cert.dump(2) + "\n");

  if (!dc.avgs.empty()) {
    std::ostringstream avg;
    avg << "f,r,lower,upper,lower_ext,upper_ext,sup_ratio,lower_status,upper_status\n";
    std::optional<double> usr;
    if (dc.have_sup_ratio) usr = dc.sup_ratio;
    for (const auto& expr : dc.avgs) {
      Polynomial f = parse_expr_arg(expr, net.n(), "--avg");
      for (double r : dc.r) {
        AverageBounds ab = bound_average(net, ws, r, f, opts, usr);
        avg << '"' << expr << "\"," << fmt(r) << ',' << fmt(ab.lower) << ',' << fmt(ab.upper)
            << ',' << fmt(ab.lower_ext) << ',' << fmt(ab.upper_ext) << ',' << fmt(ab.sup_ratio)
            << ',' << to_string(ab.lower_status) << ',' << to_string(ab.upper_status) << "\n";
      }
    }
    ctx.write_file("averages.csv", avg.str());
  }

  json opts_j;
  opts_j["w"] = dc.weight.w_expr;
  opts_j["c"] = ws.c;
  opts_j["c_source"] = source;
  opts_j["r"] = dc.r;
  opts_j["scaling"] = dc.scaling;
  opts_j["method"] = cert["method"];
  ctx.manifest["options"] = opts_j;
  return 0;
}

// ----------------------------------------------------------------- marginal --

struct MarginalCfg {
  WeightCfg weight;
  std::vector<double> r;
  std::string scaling = "exit";
  size_t axis = 1;  // 1-based
  std::vector<int64_t> label;
};

int cmd_marginal(const ReactionNetwork& net, const Common& cm, const MarginalCfg& mc, Ctx& ctx) {
  require_increasing(mc.r, "--r");
  json source;
  WeightSpec ws = resolve_weight(net, mc.weight, cm, source);
  StateBoundOptions opts;
  opts.tol = cm.tol();
  opts.threads = cm.threads;
  opts.scaling = parse_scaling(mc.scaling);

  std::function<int64_t(const State&)> label;
  std::string label_desc;
  if (!mc.label.empty()) {
    if (mc.label.size() != net.n()) die(2, "--label needs one coefficient per species");
    auto coeffs = mc.label;
    label = [coeffs](const State& x) {
      int64_t s = 0;
      for (size_t i = 0; i < coeffs.size(); ++i) s += coeffs[i] * x[i];
      return s;
    };
    label_desc = "linear";
  } else {
    if (mc.axis < 1 || mc.axis > net.n()) die(2, "--axis out of range");
    size_t ax = mc.axis - 1;
    label = [ax](const State& x) { return x[ax]; };
    label_desc = net.species()[ax];
  }

  json cert;
  cert["weight"] = mc.weight.w_expr;
  cert["c"] = ws.c;
  cert["c_source"] = source;
  cert["cell"] = label_desc;
  json runs = json::array();
  for (size_t ri = 0; ri < mc.r.size(); ++ri) {
    double r = mc.r[ri];
    MarginalBounds mb = bound_marginal(net, ws, r, label, opts);
    std::string csv_name = "marginal_r" + rtag(mc.r[ri]) + ".csv";
    std::ostringstream csv;
    csv << "cell,lower,upper,upper_plus_tail\n";
    for (size_t k = 0; k < mb.cells.size(); ++k)
      csv << mb.cells[k] << ',' << fmt(mb.lower[k]) << ',' << fmt(mb.upper[k]) << ','
          << fmt(std::min(1.0, mb.upper[k] + mb.eps)) << "\n";
    ctx.write_file(csv_name, csv.str());
    json run;
    run["r"] = r;
    run["csv"] = csv_name;
    run["eps"] = mb.eps;
    run["informative"] = mb.eps < 1;
    run["eps_lower"] = mb.eps_lower;
    run["eps_upper"] = mb.eps_upper;
    run["cells"] = mb.cells.size();
    runs.push_back(run);
  }
  cert["runs"] = runs;
  ctx.write_file("certificate.json", cert.dump(2) + "\n");

  json opts_j;
  opts_j["w"] = mc.weight.w_expr;
  opts_j["c"] = ws.c;
  opts_j["c_source"] = source;
  opts_j["r"] = mc.r;
  opts_j["cell"] = label_desc;
  opts_j["scaling"] = mc.scaling;
  ctx.manifest["options"] = opts_j;
  return 0;
}

// ----------------------------------------------------------------- simulate --

struct SimulateCfg {
  double t_end = 0;
  std::string initial;
  uint64_t seed = 1;
  size_t trajectories = 1;
  double burn_in = 0.2;
  uint64_t max_events = 100000000;
  size_t batches = 16;
  size_t axis = 0;  // 1-based; 0 = full state
  bool log_traj = false;
};

int cmd_simulate(const ReactionNetwork& net, const Common& cm, const SimulateCfg& sc, Ctx& ctx) {
  State x0(net.n(), 0);
  if (!sc.initial.empty()) {
    auto parts = split(sc.initial, ',');
    if (parts.size() != net.n()) die(2, "--initial needs one count per species");
    for (size_t i = 0; i < parts.size(); ++i) {
      try {
        x0[i] = std::stoll(parts[i]);
      } catch (...) {
        die(2, "--initial: bad count '" + parts[i] + "'");
      }
    }
  }
  SimConfig cfg = SimConfig::point(x0, sc.t_end, sc.seed);
  cfg.burn_in = sc.burn_in;
  cfg.max_events = sc.max_events;

  std::function<State(const State&)> partition;
  std::vector<std::string> columns = net.species();
  if (sc.axis > 0) {
    if (sc.axis > net.n()) die(2, "--axis out of range");
    size_t ax = sc.axis - 1;
    partition = [ax](const State& x) { return State{x[ax]}; };
    columns = {net.species()[ax]};
  }

  auto h = occupation_histogram(net, cfg, partition, sc.trajectories, cm.threads, sc.batches);
  std::ostringstream csv;
  write_histogram_csv(csv, h, columns);
  ctx.write_file("histogram.csv", csv.str());

  if (sc.log_traj) {
    auto tr = simulate(net, cfg);
    std::ostringstream bin(std::ios::binary);
    write_trajectory_log(bin, tr);
    ctx.write_file("trajectory.bin", bin.str());
  }

  json opts_j;
  opts_j["t_end"] = sc.t_end;
  opts_j["initial"] = x0;
  opts_j["seed"] = sc.seed;
  opts_j["trajectories"] = sc.trajectories;
  opts_j["burn_in"] = sc.burn_in;
  opts_j["max_events"] = sc.max_events;
  opts_j["batches"] = sc.batches;
  if (sc.axis > 0) opts_j["axis"] = sc.axis;
  ctx.manifest["options"] = opts_j;
  ctx.manifest["result"] = {{"events", h.events},
                            {"total_time", h.total_time},
                            {"capped", h.capped}};
  return 0;
}

// -------------------------------------------------------------------- drift --

struct DriftCfg {
  std::string w_expr;
  std::string k2 = "1";
  int64_t box = 50;
};

int cmd_drift(const ReactionNetwork& net, const Common& cm, const DriftCfg& dc, Ctx& ctx) {
  if (dc.w_expr.empty()) die(2, "--w is required");
  Polynomial w = parse_expr_arg(dc.w_expr, net.n(), "--w");
  Rational k2;
  try {
    k2 = parse_rational(dc.k2);
  } catch (const std::exception& e) {
    die(2, std::string("--k2: ") + e.what());
  }
  auto rep = drift_report(net, w, k2, dc.box, cm.threads);
  ctx.write_file("drift.json", rep.to_json() + "\n");

  json opts_j;
  opts_j["w"] = dc.w_expr;
  opts_j["k2"] = dc.k2;
  opts_j["box"] = dc.box;
  ctx.manifest["options"] = opts_j;
  return 0;
}

// ------------------------------------------------------------------- export --

struct ExportCfg {
  bool sdpa = false;
  bool mps = false;
  std::vector<uint32_t> ds;
  std::vector<std::string> alphas{"1"};
  WeightCfg weight;
  std::vector<double> r;
};

int cmd_export(const ReactionNetwork& net, const Common& cm, const ExportCfg& ec, Ctx& ctx) {
  if (!ec.sdpa && !ec.mps) die(2, "nothing to export; pass --sdpa and/or --mps");
  json opts_j;
  if (ec.sdpa) {
    std::vector<MultiIndex> targets;
    for (const auto& s : ec.alphas) targets.push_back(parse_alpha(s, net.n()));
    check_orders(net, ec.ds, targets);
    write_sdpa_exports(net, ec.ds, targets, ctx);
    opts_j["d"] = ec.ds;
    for (const auto& a : targets) opts_j["alpha"].push_back(a.e);
  }
  if (ec.mps) {
    require_increasing(ec.r, "--r");
    json source;
    WeightSpec ws = resolve_weight(net, ec.weight, cm, source);
    for (size_t ri = 0; ri < ec.r.size(); ++ri) {
      Truncation trunc = build_truncation(net, ws, ec.r[ri]);
      TruncationPolytope tp = build_polytope(net, trunc, ws);
      ctx.write_file("exports/dist_r" + rtag(ec.r[ri]) + ".mps",
                     to_mps(tp.lp, "CMEBDIST"));
    }
    opts_j["w"] = ec.weight.w_expr;
    opts_j["c"] = ws.c;
    opts_j["r"] = ec.r;
  }
  ctx.manifest["options"] = opts_j;
  return 0;
}

// ----------------------------------------------------------------- plumbing --

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) die(2, "cannot read network file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string substitute(const std::string& text, const std::string& name,
                       const std::string& value) {
  std::string token = "${" + name + "}";
  std::string out = text;
  size_t pos = 0, hits = 0;
  while ((pos = out.find(token, pos)) != std::string::npos) {
    out.replace(pos, token.size(), value);
    pos += value.size();
    ++hits;
  }
  if (hits == 0) die(2, "sweep parameter '" + name + "' does not appear as ${" + name +
                            "} in the network file");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified stationary analysis of stochastic reaction networks"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "key=value file; keys match long option names");
  app.get_config_formatter_base()->valueSeparator('=');

  Common cm;
  app.add_option("--network", cm.network_path, "reaction network file (DSL)")->required();
  app.add_option("--out", cm.out_dir, "output directory")->capture_default_str();
  app.add_option("--threads", cm.threads, "worker threads")->capture_default_str();
  app.add_option("--tol-feas", cm.tol_feas, "feasibility tolerance")
      ->envname("CMEB_TOL_FEAS")
      ->capture_default_str();
  app.add_option("--tol-opt", cm.tol_opt, "optimality tolerance")
      ->envname("CMEB_TOL_OPT")
      ->capture_default_str();
  app.add_option("--tol-gap", cm.tol_gap, "conic duality-gap tolerance")
      ->envname("CMEB_TOL_GAP")
      ->capture_default_str();
  app.add_option("--sweep", cm.sweep,
                 "name=v1,v2,...: substitute ${name} in the network file and fan out runs");

  MomentsCfg mc;
  auto* sub_m = app.add_subcommand("moments", "moment bounds from the relaxation hierarchy");
  sub_m->add_option("--d", mc.ds, "relaxation orders, strictly increasing")
      ->delimiter(',')
      ->required();
  sub_m->add_option("--alpha", mc.alphas, "target power moments (comma-separated exponents)")
      ->capture_default_str();
  sub_m->add_flag("--stats", mc.stats, "emit variance/cv/skewness intervals");
  sub_m->add_option("--species", mc.stats_species, "1-based species for --stats")
      ->capture_default_str();
  sub_m->add_flag("--export-sdpa", mc.export_sdpa, "write SDPA files instead of solving");
  sub_m->add_flag("--no-scale", mc.no_scale, "disable the automatic moment scaling probe");
  sub_m->add_option("--sigma", mc.sigma, "manual per-species scale override")->delimiter(',');

  DistCfg dc;
  auto* sub_d = app.add_subcommand("dist", "stationary distribution bounds on a truncation");
  sub_d->add_option("--w", dc.weight.w_expr, "truncation weight polynomial")->required();
  auto* dc_user = sub_d->add_option("--c", dc.weight.c_user, "tail constant: certified <w> <= c");
  sub_d->add_option("--c-sdp", dc.weight.c_sdp,
                    "derive the tail constant at order D (syntax D or D:expr)")
      ->excludes(dc_user);
  sub_d->add_option("--r", dc.r, "truncation radii, strictly increasing")
      ->delimiter(',')
      ->required();
  sub_d->add_option("--scaling", dc.scaling, "decision scaling: none|exit|weight")
      ->capture_default_str();
  sub_d->add_flag("--force-lp", dc.force_lp, "LP even when the closed form applies");
  sub_d->add_option("--avg", dc.avgs, "bound the stationary average of these polynomials");
  auto* dc_sup = sub_d->add_option("--sup-ratio", dc.sup_ratio,
                                   "caller-supplied sup |f|/w outside the truncation");

  MarginalCfg mgc;
  auto* sub_g = app.add_subcommand("marginal", "marginal bounds over a state partition");
  sub_g->add_option("--w", mgc.weight.w_expr, "truncation weight polynomial")->required();
  auto* mg_user = sub_g->add_option("--c", mgc.weight.c_user, "tail constant");
  sub_g->add_option("--c-sdp", mgc.weight.c_sdp, "derive the tail constant (D or D:expr)")
      ->excludes(mg_user);
  sub_g->add_option("--r", mgc.r, "truncation radii, strictly increasing")
      ->delimiter(',')
      ->required();
  sub_g->add_option("--axis", mgc.axis, "1-based species axis to marginalize onto")
      ->capture_default_str();
  sub_g->add_option("--label", mgc.label, "integer coefficients of a linear cell label")
      ->delimiter(',');
  sub_g->add_option("--scaling", mgc.scaling, "decision scaling: none|exit|weight")
      ->capture_default_str();

  SimulateCfg sc;
  auto* sub_s = app.add_subcommand("simulate", "stochastic simulation / occupation measure");
  sub_s->add_option("--t-end", sc.t_end, "simulated time horizon")->required();
  sub_s->add_option("--initial", sc.initial, "initial state, comma-separated counts");
  sub_s->add_option("--seed", sc.seed, "PRNG seed")->capture_default_str();
  sub_s->add_option("--trajectories", sc.trajectories, "independent trajectories")
      ->capture_default_str();
  sub_s->add_option("--burn-in", sc.burn_in, "discarded fraction of the horizon")
      ->capture_default_str();
  sub_s->add_option("--max-events", sc.max_events, "event cap per trajectory")
      ->capture_default_str();
  sub_s->add_option("--batches", sc.batches, "batch count for standard errors")
      ->capture_default_str();
  sub_s->add_option("--axis", sc.axis, "1-based axis: histogram the marginal only");
  sub_s->add_flag("--log-traj", sc.log_traj, "write a binary trajectory log");

  DriftCfg drc;
  auto* sub_f = app.add_subcommand("drift", "drift diagnostics for a candidate weight");
  sub_f->add_option("--w", drc.w_expr, "weight polynomial")->required();
  sub_f->add_option("--k2", drc.k2, "drift coefficient K_2 (rational)")->capture_default_str();
  sub_f->add_option("--box", drc.box, "verification box radius per axis")->capture_default_str();

  ExportCfg ec;
  auto* sub_e = app.add_subcommand("export", "write solver-ready problem files, no solving");
  sub_e->add_flag("--sdpa", ec.sdpa, "SDPA files for the moment programs");
  sub_e->add_flag("--mps", ec.mps, "MPS files for the truncation polytopes");
  sub_e->add_option("--d", ec.ds, "relaxation orders for --sdpa")->delimiter(',');
  sub_e->add_option("--alpha", ec.alphas, "target power moments for --sdpa")
      ->capture_default_str();
  sub_e->add_option("--w", ec.weight.w_expr, "truncation weight for --mps");
  auto* ec_user = sub_e->add_option("--c", ec.weight.c_user, "tail constant for --mps");
  sub_e->add_option("--c-sdp", ec.weight.c_sdp, "derive the tail constant (D or D:expr)")
      ->excludes(ec_user);
  sub_e->add_option("--r", ec.r, "truncation radii for --mps")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  dc.weight.have_c_user = dc_user->count() > 0;
  mgc.weight.have_c_user = mg_user->count() > 0;
  ec.weight.have_c_user = ec_user->count() > 0;
  dc.have_sup_ratio = dc_sup->count() > 0;

  try {
    std::string text = read_file(cm.network_path);
    auto run_one = [&](const ReactionNetwork& net, const std::string& net_text,
                       const fs::path& out) {
      Ctx ctx;
      ctx.out = out;
      ctx.manifest["tool"] = "cmeb";
      ctx.manifest["version"] = kVersion;
      ctx.manifest["network"] = {{"path", cm.network_path}, {"text", net_text}};
      ctx.manifest["tolerances"] = {
          {"feas", cm.tol_feas}, {"opt", cm.tol_opt}, {"gap", cm.tol_gap}};
      ctx.manifest["threads"] = cm.threads;
      int rc = 0;
      if (sub_m->parsed()) {
        ctx.manifest["subcommand"] = "moments";
        rc = cmd_moments(net, cm, mc, ctx);
      } else if (sub_d->parsed()) {
        ctx.manifest["subcommand"] = "dist";
        rc = cmd_dist(net, cm, dc, ctx);
      } else if (sub_g->parsed()) {
        ctx.manifest["subcommand"] = "marginal";
        rc = cmd_marginal(net, cm, mgc, ctx);
      } else if (sub_s->parsed()) {
        ctx.manifest["subcommand"] = "simulate";
        rc = cmd_simulate(net, cm, sc, ctx);
      } else if (sub_f->parsed()) {
        ctx.manifest["subcommand"] = "drift";
        rc = cmd_drift(net, cm, drc, ctx);
      } else if (sub_e->parsed()) {
        ctx.manifest["subcommand"] = "export";
        rc = cmd_export(net, cm, ec, ctx);
      }
      ctx.finish();
      return rc;
    };

    if (cm.sweep.empty()) {
      return run_one(parse_network(text), text, cm.out_dir);
    }

    auto eq = cm.sweep.find('=');
    if (eq == std::string::npos || eq == 0) die(2, "--sweep expects name=v1,v2,...");
    std::string name = cm.sweep.substr(0, eq);
    auto values = split(cm.sweep.substr(eq + 1), ',');
    if (values.empty()) die(2, "--sweep needs at least one value");

    std::map<std::string, ReactionNetwork> cache;
    json sweep_idx;
    sweep_idx["parameter"] = name;
    int rc = 0;
    for (const auto& v : values) {
      std::string sub_text = substitute(text, name, v);
      auto it = cache.find(sub_text);
      if (it == cache.end()) it = cache.emplace(sub_text, parse_network(sub_text)).first;
      std::string dir = name + "=" + v;
      rc = std::max(rc, run_one(it->second, sub_text, fs::path(cm.out_dir) / dir));
      sweep_idx["values"].push_back(v);
      sweep_idx["runs"].push_back(dir);
    }
    fs::create_directories(cm.out_dir);
    std::ofstream f(fs::path(cm.out_dir) / "sweep.json", std::ios::binary);
    f << sweep_idx.dump(2) << "\n";
    return rc;
  } catch (const ExitError& e) {
    std::cerr << "cmeb: " << e.msg << "\n";
    return e.code;
  } catch (const ParseError& e) {
    std::cerr << "cmeb: network: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "cmeb: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "cmeb: " << e.what() << "\n";
    return 3;
  }
}
