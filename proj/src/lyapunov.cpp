#include "cmeb/lyapunov.hpp"

#include <algorithm>
#include <thread>

#include "cmeb/polyalg.hpp"
#include "json.hpp"

namespace cmeb {

namespace {

struct RayPoly {
  std::string direction;
  std::vector<Rational> h;  // numerator restriction
  std::vector<Rational> d;  // denominator restriction
};

int64_t top_degree(const std::vector<Rational>& c) {
  for (size_t k = c.size(); k-- > 0;)
    if (c[k] != 0) return (int64_t)k;
  return -1;
}

RayLeading classify_ray(const RayPoly& rp) {
  RayLeading out;
  out.direction = rp.direction;
  out.degree = top_degree(rp.h);
  if (out.degree < 0) {
    out.coeff = 0;
    out.behavior = "vanishes";
    return out;
  }
  out.coeff = rp.h[(size_t)out.degree];
  if (out.coeff < 0)
    out.behavior = "negative";
  else if (out.degree > top_degree(rp.d))
    out.behavior = "growing";
  else
    out.behavior = "bounded";
  return out;
}

DriftReport fail(DriftReport rep, std::string why) {
  rep.verdict = DriftVerdict::Failed;
  rep.reason = std::move(why);
  return rep;
}

}  // namespace

DriftReport drift_report(const ReactionNetwork& net, const Polynomial& w,
                         const Rational& k2, int64_t box_radius, size_t threads,
                         size_t state_cap) {
  DriftReport rep;
  rep.w = w;
  rep.k2 = k2;
  rep.box_radius = box_radius;

  if (w.vars() != net.n()) return fail(rep, "weight arity does not match the network");
  if (k2 <= 0) return fail(rep, "K_2 must be positive");
  if (box_radius < 0) return fail(rep, "box radius must be nonnegative");
  if (w.is_zero() || w.degree() == 0)
    return fail(rep, "weight must be nonconstant to have finite sublevel sets");

  // norm-like candidate: w must grow with positive leading coefficient along
  // every axis and the diagonal
  const size_t n = net.n();
  for (size_t i = 0; i <= n; ++i) {
    auto c = i < n ? w.restrict_axis(i) : w.restrict_diagonal();
    int64_t deg = top_degree(c);
    std::string where = i < n ? "axis " + net.species()[i] : "the diagonal";
    if (deg <= 0) return fail(rep, "weight does not grow along " + where);
    if (c[(size_t)deg] < 0)
      return fail(rep, "weight has negative leading coefficient along " + where);
  }

  GeneratorImage g = apply_generator_rational(net, w);
  Polynomial h = g.num + w * g.den * k2;

  for (size_t i = 0; i <= n; ++i) {
    RayPoly rp;
    rp.direction = i < n ? net.species()[i] : "diagonal";
    rp.h = i < n ? h.restrict_axis(i) : h.restrict_diagonal();
    rp.d = i < n ? g.den.restrict_axis(i) : g.den.restrict_diagonal();
    rep.rays.push_back(classify_ray(rp));
  }
  bool all_negative = true, any_growing = false;
  for (const auto& r : rep.rays) {
    all_negative = all_negative && r.behavior == "negative";
    any_growing = any_growing || r.behavior == "growing";
  }

  double cells = 1;
  for (size_t i = 0; i < n; ++i) cells *= (double)(box_radius + 1);
  if (cells > (double)state_cap)
    return fail(rep, "box exceeds the state cap");

  std::vector<State> box;
  State x(n, 0);
  for (;;) {
    if (net.state_valid(x)) box.push_back(x);
    size_t i = 0;
    while (i < n && ++x[i] > box_radius) x[i++] = 0;
    if (i == n) break;
  }
  if (box.empty()) return fail(rep, "no valid states in the box");

  struct Best {
    Rational value;
    size_t index = SIZE_MAX;
  };
  auto scan = [&](size_t lo, size_t hi, Best& best) {
    for (size_t k = lo; k < hi; ++k) {
      Rational den = g.den.eval(box[k]);
      if (den <= 0) return false;
      Rational v = g.num.eval(box[k]) / den + k2 * w.eval(box[k]);
      if (best.index == SIZE_MAX || v > best.value) best = {v, k};
    }
    return true;
  };

  size_t nt = std::max<size_t>(1, std::min(threads, box.size()));
  std::vector<Best> part(nt);
  std::vector<char> ok(nt, 1);
  if (nt == 1) {
    ok[0] = scan(0, box.size(), part[0]);
  } else {
    std::vector<std::thread> pool;
    size_t chunk = (box.size() + nt - 1) / nt;
    for (size_t t = 0; t < nt; ++t)
      pool.emplace_back([&, t] {
        ok[t] = scan(t * chunk, std::min(box.size(), (t + 1) * chunk), part[t]);
      });
    for (auto& th : pool) th.join();
  }
  Best best;
  for (size_t t = 0; t < nt; ++t) {
    if (!ok[t]) return fail(rep, "propensity denominator nonpositive inside the box");
    if (part[t].index == SIZE_MAX) continue;
    if (best.index == SIZE_MAX || part[t].value > best.value) best = part[t];
  }

  rep.k1 = best.value;
  rep.argmax = box[best.index];
  rep.states_checked = box.size();
  if (any_growing)
    return fail(rep, "drift grows along at least one ray; no K_1 can close the bound");
  rep.verdict = all_negative ? DriftVerdict::VerifiedOnBoxLeadingNegative
                             : DriftVerdict::BoxOnly;
  if (rep.verdict == DriftVerdict::VerifiedOnBoxLeadingNegative && rep.k1 > 0)
    rep.tail_constant_heuristic = to_double(rep.k1 / k2);
  return rep;
}

std::string DriftReport::to_json() const {
  nlohmann::json j;
  j["w"] = w.to_string();
  j["k2"] = to_double(k2);
  j["k2_exact"] = rational_to_string(k2);
  j["box_radius"] = box_radius;
  j["states_checked"] = states_checked;
  switch (verdict) {
    case DriftVerdict::VerifiedOnBoxLeadingNegative:
      j["verdict"] = "verified_on_box_leading_negative";
      break;
    case DriftVerdict::BoxOnly:
      j["verdict"] = "box_only";
      break;
    case DriftVerdict::Failed:
      j["verdict"] = "failed";
      break;
  }
  if (!reason.empty()) j["reason"] = reason;
  if (states_checked > 0) {
    j["k1"] = to_double(k1);
    j["k1_exact"] = rational_to_string(k1);
    j["argmax"] = argmax;
  }
  auto rays_json = nlohmann::json::array();
  for (const auto& r : rays)
    rays_json.push_back({{"direction", r.direction},
                         {"degree", r.degree},
                         {"leading_coefficient", to_double(r.coeff)},
                         {"behavior", r.behavior}});
  if (!rays_json.empty()) j["rays"] = rays_json;
  if (tail_constant_heuristic) {
    j["tail_constant_heuristic"] = *tail_constant_heuristic;
    j["tail_constant_note"] = "K_1/K_2; convenience value, not a certified bound";
  }
  return j.dump(2);
}

}  // namespace cmeb
