#include "taut/descent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "taut/io.hpp"
#include "taut/roundout.hpp"

namespace taut {

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("RunConfig: " + m); };
  if (!(tau > 0)) fail("tau must be positive");
  if (!(max_err > 0 && max_err < 0.01)) fail("max_err must lie in (0, 0.01)");
  if (!(min_step > 0 && min_step <= max_step)) fail("need 0 < min_step <= max_step");
  if (!(euler_cap > 0)) fail("euler_cap must be positive");
  if (!(residual_target > 0)) fail("residual_target must be positive");
  if (schedule.empty()) fail("schedule is empty");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] > 0)) fail("schedule entries must be positive");
    if (i > 0 && !(schedule[i] > schedule[i - 1])) fail("schedule must be strictly increasing");
  }
  if (!(eq_stiffness >= 0)) fail("eq_stiffness must be nonnegative");
  if (!(jitter >= 0)) fail("jitter must be nonnegative");
  if (max_steps == 0) fail("max_steps must be positive");
  if (!(strut_tol > 0 && kink_tol > 0)) fail("activation tolerances must be positive");
  if (!(search_tol > 0 && search_tol < 1)) fail("search_tol must lie in (0, 1)");
  if (!(accept_increase >= 0)) fail("accept_increase must be nonnegative");
  if (!(plateau_gain >= 0 && plateau_gain < 1)) fail("plateau_gain must lie in [0, 1)");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw std::invalid_argument(fmt::format("config: bad number for {}: '{}'", key, v));
  return x;
}

std::size_t to_count(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x < 0 || x != std::floor(x)) throw std::invalid_argument(fmt::format("config: {} must be a nonnegative integer", key));
  return static_cast<std::size_t>(x);
}

}  // namespace

RunConfig parse_config(std::istream& in, RunConfig cfg) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument(fmt::format("config line {}: expected key = value", lineno));
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key == "tau") cfg.tau = to_double(key, value);
    else if (key == "max_err") cfg.max_err = to_double(key, value);
    else if (key == "min_step") cfg.min_step = to_double(key, value);
    else if (key == "max_step") cfg.max_step = to_double(key, value);
    else if (key == "euler_cap") cfg.euler_cap = to_double(key, value);
    else if (key == "residual_target") cfg.residual_target = to_double(key, value);
    else if (key == "eq_stiffness") cfg.eq_stiffness = to_double(key, value);
    else if (key == "seed") cfg.seed = to_count(key, value);
    else if (key == "jitter") cfg.jitter = to_double(key, value);
    else if (key == "max_steps") cfg.max_steps = to_count(key, value);
    else if (key == "sticky_struts") cfg.sticky_struts = to_count(key, value) != 0;
    else if (key == "plateau_steps") cfg.plateau_steps = to_count(key, value);
    else if (key == "plateau_gain") cfg.plateau_gain = to_double(key, value);
    else if (key == "max_newton") cfg.max_newton = to_count(key, value);
    else if (key == "strut_tol") cfg.strut_tol = to_double(key, value);
    else if (key == "kink_tol") cfg.kink_tol = to_double(key, value);
    else if (key == "search_tol") cfg.search_tol = to_double(key, value);
    else if (key == "accept_increase") cfg.accept_increase = to_double(key, value);
    else if (key == "stall_steps") cfg.stall_steps = to_count(key, value);
    else if (key == "stall_change") cfg.stall_change = to_double(key, value);
    else if (key == "checkpoint_every") cfg.checkpoint_every = to_count(key, value);
    else if (key == "checkpoint_prefix") cfg.checkpoint_prefix = value;
    else if (key == "schedule") {
      cfg.schedule.clear();
      std::string item;
      std::stringstream ss(value);
      while (std::getline(ss, item, ',')) cfg.schedule.push_back(to_double(key, trim(item)));
    } else {
      throw std::invalid_argument(fmt::format("config line {}: unknown key '{}'", lineno, key));
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  return parse_config(in, std::move(base));
}

namespace {

ActiveSetOptions active_options(const RunConfig& cfg) {
  ActiveSetOptions o;
  o.tau = cfg.tau;
  o.strut_tol = cfg.strut_tol;
  o.kink_tol = cfg.kink_tol;
  o.target = 1.0;
  return o;
}

Variation descent_direction(const Polygon& poly, const RunConfig& cfg) {
  Variation b = grad_length(poly);
  if (cfg.eq_stiffness > 0) b -= grad_eq_penalty(poly, cfg.eq_stiffness);
  return b;
}

double objective(const Polygon& poly, const RunConfig& cfg) {
  return polygon_length(poly) + (cfg.eq_stiffness > 0 ? eq_penalty(poly, cfg.eq_stiffness) : 0.0);
}

EdgePoint edge_point(const Polygon& poly, std::size_t edge, double s) {
  constexpr double kSnap = 1e-12;
  if (s <= kSnap) return {edge, 1.0};
  if (s >= 1.0 - kSnap) return {poly.next(edge), 1.0};
  return {edge, 1.0 - s};
}

// Struts of the previous step whose edge pair is still inside the band.
// A contact along two strands is realized by alternating vertex-edge
// minima; keeping the last one stops the active set from flickering
// between neighbours from one step to the next.
void keep_recent_struts(const Polygon& poly, const std::vector<Strut>& previous, const RunConfig& cfg,
                        ActiveSets& active) {
  if (previous.empty()) return;
  auto edges_of = [](const Strut& s) { return std::pair(s.p.edge, s.q.edge); };
  std::set<std::pair<std::size_t, std::size_t>> present;
  for (const Strut& s : active.struts) present.insert(edges_of(s));
  const double band = 2.0 * (1.0 + cfg.strut_tol);
  bool added = false;
  for (const Strut& s : previous) {
    if (present.count(edges_of(s))) continue;
    const std::size_t i = s.p.edge, j = s.q.edge;
    if (i == j || poly.next(i) == j || poly.next(j) == i) continue;
    const auto c = detail::closest_segment_segment(poly.vertex(i), poly.vertex(poly.next(i)), poly.vertex(j),
                                                   poly.vertex(poly.next(j)));
    if (!(c.distance <= band) || c.parallel) continue;
    Strut k{edge_point(poly, i, c.s), edge_point(poly, j, c.t), c.distance, StrutKind::EdgeEdge};
    const bool pv = k.p.alpha == 1.0, qv = k.q.alpha == 1.0;
    if (pv && qv && (k.p.edge == k.q.edge)) continue;
    k.kind = pv && qv ? StrutKind::VertexVertex : (pv || qv ? StrutKind::VertexEdge : StrutKind::EdgeEdge);
    active.struts.push_back(k);
    present.insert(edges_of(s));
    added = true;
  }
  if (!added) return;
  std::sort(active.struts.begin(), active.struts.end(), strut_less);
  auto same = [](const Strut& a, const Strut& b) {
    return a.p.edge == b.p.edge && a.q.edge == b.q.edge && a.p.alpha == b.p.alpha && a.q.alpha == b.q.alpha;
  };
  active.struts.erase(std::unique(active.struts.begin(), active.struts.end(), same), active.struts.end());
}

// Free set of the previous solve carried over to matching columns.
std::vector<char> carried_free_set(const ActiveSets& before, const std::vector<char>& free_before,
                                   const ActiveSets& now) {
  std::vector<char> out(now.struts.size() + now.kinks.size(), 0);
  if (free_before.size() != before.struts.size() + before.kinks.size()) return out;
  std::set<std::pair<std::size_t, std::size_t>> struts;
  std::set<std::pair<std::size_t, int>> kinks;
  for (std::size_t j = 0; j < before.struts.size(); ++j)
    if (free_before[j]) struts.insert({before.struts[j].p.edge, before.struts[j].q.edge});
  for (std::size_t j = 0; j < before.kinks.size(); ++j)
    if (free_before[before.struts.size() + j]) kinks.insert({before.kinks[j].vertex, static_cast<int>(before.kinks[j].side)});
  for (std::size_t j = 0; j < now.struts.size(); ++j) out[j] = struts.count({now.struts[j].p.edge, now.struts[j].q.edge}) > 0;
  for (std::size_t j = 0; j < now.kinks.size(); ++j)
    out[now.struts.size() + j] = kinks.count({now.kinks[j].vertex, static_cast<int>(now.kinks[j].side)}) > 0;
  return out;
}

void refresh(DescentState& st, const RunConfig& cfg, bool allow_regularized) {
  const ActiveSets before = std::move(st.active);
  st.active = find_active_sets(st.poly, active_options(cfg));
  if (cfg.sticky_struts) keep_recent_struts(st.poly, before.struts, cfg, st.active);
  st.cthi = st.active.cthi;
  const SparseMatrix a = build_rigidity_matrix(st.poly, st.active);
  const Variation b = descent_direction(st.poly, cfg);
  const std::vector<char> warm = carried_free_set(before, st.resolution.solve.free_set, st.active);
  st.regularized = false;
  try {
    st.resolution = resolve(b, a, &warm);
  } catch (const SingularMatrixError&) {
    if (!allow_regularized) throw;
    st.resolution = resolve_regularized(b, a);
    st.regularized = true;
  }
  if (cfg.on_resolve) cfg.on_resolve(a, b, st.resolution);
  st.residual = st.resolution.residual_ratio;
  st.fresh = true;
}

double current_cthi(const DescentState& st, const RunConfig& cfg) {
  return st.fresh ? st.cthi : cthi(st.poly, cfg.tau, 0.0);
}

}  // namespace

DescentState make_state(const Polygon& poly) {
  DescentState st;
  st.poly = poly;
  return st;
}

DescentState analyze(const Polygon& poly, const RunConfig& cfg) {
  DescentState st = make_state(poly);
  refresh(st, cfg, true);
  return st;
}

DescentState descend_step(DescentState st, const RunConfig& cfg) {
  if (!st.fresh) refresh(st, cfg, true);
  StepRecord rec;
  rec.residual = st.residual;
  rec.struts = st.active.struts.size();
  rec.kinks = st.active.kinks.size();

  if (st.active.empty()) {
    // Nothing is in contact yet: plain shrinking flow, moving at most half
    // the remaining thickness slack.
    double alpha = cfg.euler_cap;
    if (std::isfinite(st.cthi)) alpha = std::min(alpha, 0.5 * (st.cthi - 1.0));
    alpha = std::max(alpha, cfg.min_step);
    st.poly = displaced(st.poly, descent_direction(st.poly, cfg), alpha);
    st.fresh = false;
    st.converged = false;
    rec.alpha = alpha;
    rec.event = "euler";
  } else {
    if (st.residual <= cfg.residual_target) {
      st.converged = true;
      return st;
    }
    const Variation d = st.resolution.constrained_gradient;
    const double floor_cthi = 1.0 - 2.0 * cfg.max_err;
    auto probe = [&](double alpha) {
      const Polygon cand = displaced(st.poly, d, alpha);
      try {
        const PthiCthi t = thicknesses(cand, cfg.tau, 0.0);
        if (t.cthi < floor_cthi || !(t.pthi > 0)) return kInfinity;
        return polygon_length(cand) / t.pthi;
      } catch (const SelfIntersectionError&) {
        return kInfinity;
      }
    };
    const double f0 = polygon_length(st.poly) / thicknesses(st.poly, cfg.tau, 0.0).pthi;
    const int bits = std::max(4, static_cast<int>(std::ceil(1.0 - std::log2(cfg.search_tol))));
    std::uintmax_t iters = 60;
    const auto best = boost::math::tools::brent_find_minima(
        [&](double u) { return probe(std::exp(u)); }, std::log(cfg.min_step), std::log(cfg.max_step), bits, iters);
    double alpha = std::clamp(std::exp(best.first), cfg.min_step, cfg.max_step);
    double f = best.second;
    std::string event = "step";
    if (!(f <= f0)) {
      const double f_floor = probe(cfg.min_step);
      if (f_floor <= f0 * (1.0 + cfg.accept_increase)) {
        alpha = cfg.min_step;
        f = f_floor;
        event = "accepted_increase";
      } else {
        throw StallError(fmt::format(
            "stalled: no acceptable step at step {} (PRop {:.10g}, best probe {:.10g} at alpha {:.3g}, floor probe {:.10g}, "
            "residual {:.4g})",
            st.step, f0, f, alpha, f_floor, st.residual));
      }
    }
    // Look ahead: the next position must admit a solvable resolution. A few
    // shorter steps are tried before settling for the regularized solve.
    DescentState next = st;
    const double alpha0 = alpha;
    bool solved = false;
    for (int attempt = 0; attempt < 4 && !solved; ++attempt) {
      next.poly = displaced(st.poly, d, alpha);
      try {
        refresh(next, cfg, false);
        solved = true;
      } catch (const SingularMatrixError&) {
        if (alpha <= cfg.min_step) break;
        alpha = std::max(cfg.min_step, 0.5 * alpha);
      }
    }
    if (!solved) {
      alpha = alpha0;
      next.poly = displaced(st.poly, d, alpha);
      refresh(next, cfg, true);
      event += "+regularized";
    } else if (alpha < alpha0) {
      event += "+shrunk";
    }
    next.converged = false;
    st = std::move(next);
    rec.alpha = alpha;
    rec.event = event;
  }
  ++st.step;
  rec.step = st.step;
  st.log.push_back(rec);
  return st;
}

DescentState correct(DescentState st, const RunConfig& cfg) {
  const double floor_cthi = 1.0 - cfg.max_err;
  const double aim = 1.0 - 0.5 * cfg.max_err;
  double c = current_cthi(st, cfg);
  if (c >= floor_cthi) return st;

  Polygon cur = st.poly;
  std::size_t newton = 0;
  for (std::size_t it = 0; it < cfg.max_newton; ++it) {
    const ActiveSets act = find_active_sets(cur, active_options(cfg));
    c = act.cthi;
    if (c >= floor_cthi) break;
    const SparseMatrix a = build_rigidity_matrix(cur, act);
    Eigen::VectorXd rhs(a.cols());
    Eigen::Index j = 0;
    for (const Strut& s : act.struts) rhs[j++] = -(aim - 0.5 * s.length);
    for (const Kink& k : act.kinks) rhs[j++] = -cfg.tau * (aim - k.minrad / cfg.tau);
    const MinNormResult w = minnorm_solve(SparseMatrix(a.transpose()), rhs);
    const Variation dw(w.w);
    bool improved = false;
    for (double s = 1.0; s >= 1.0 / 32; s *= 0.5) {
      const Polygon cand = displaced(cur, dw, s);
      double cc = 0.0;
      try {
        cc = cthi(cand, cfg.tau, 0.0);
      } catch (const SelfIntersectionError&) {
        continue;
      }
      if (cc > c) {
        cur = cand;
        c = cc;
        improved = true;
        break;
      }
    }
    if (!improved) break;
    ++newton;
  }
  c = cthi(cur, cfg.tau, 0.0);
  std::string event;
  if (c >= floor_cthi) {
    event = fmt::format("newton{}", newton);
  } else {
    cur = normalize_thickness(cur, cfg.tau);
    event = "rescale";
  }
  st.poly = cur;
  st.fresh = false;
  if (!st.log.empty()) {
    std::string& e = st.log.back().event;
    e += (e.empty() ? "" : "+") + event;
  }
  return st;
}

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged:
      return "converged";
    case RunStatus::Stalled:
      return "stalled";
    case RunStatus::BudgetExhausted:
      return "budget_exhausted";
  }
  return "unknown";
}

Polygon resample(const Polygon& poly, const std::vector<std::size_t>& counts) {
  if (counts.size() != poly.num_components()) throw std::invalid_argument("resample: one count per component required");
  const SmoothCurve curve = splice(poly);
  std::vector<std::vector<Vec3>> comps;
  for (std::size_t c = 0; c < poly.num_components(); ++c) {
    if (counts[c] < 3) throw std::invalid_argument("resample: components need at least 3 vertices");
    comps.push_back(curve.sample(c, counts[c]));
  }
  return Polygon(comps);
}

Polygon refine(const Polygon& poly, std::size_t factor) {
  if (factor == 0) throw std::invalid_argument("refine: factor must be positive");
  if (factor == 1) return poly;
  std::vector<std::size_t> counts;
  for (std::size_t c = 0; c < poly.num_components(); ++c) counts.push_back(factor * poly.component_size(c));
  return resample(poly, counts);
}

std::vector<std::size_t> schedule_counts(const Polygon& poly, double per_unit) {
  const double t = pthi(poly);
  std::vector<std::size_t> counts;
  for (std::size_t c = 0; c < poly.num_components(); ++c)
    counts.push_back(std::max<std::size_t>(4, static_cast<std::size_t>(std::lround(per_unit * component_length(poly, c) / t))));
  return counts;
}

Polygon normalize_thickness(const Polygon& poly, double tau) {
  auto h = [&](double u) {
    const double c = cthi(poly.with_coords(std::exp(u) * poly.coords()), tau, 0.0);
    if (!(c > 0) || !std::isfinite(c)) throw GeometryError("cannot normalize thickness");
    return std::log(c);
  };
  double u0 = 0.0, h0 = h(u0);
  double u1 = -h0, h1 = h(u1);
  for (int it = 0; it < 100 && std::abs(h1) > 1e-14; ++it) {
    double u2 = u1 - h1;
    if (h1 != h0) {
      const double secant = u1 - h1 * (u1 - u0) / (h1 - h0);
      if (std::isfinite(secant) && std::abs(secant - u1) <= 4.0 * std::abs(h1) + 1e-300) u2 = secant;
    }
    u0 = u1;
    h0 = h1;
    u1 = u2;
    h1 = h(u1);
  }
  return poly.with_coords(std::exp(u1) * poly.coords());
}

void write_log_header(std::ostream& out) {
  out << "step\tvertices\tlength\tobjective\tpthi\tcthi\tresidual\tstruts\tkinks\talpha\tevent\n";
}

void write_log_record(std::ostream& out, const StepRecord& r) {
  fmt::print(out, "{}\t{}\t{:.17g}\t{:.17g}\t{:.17g}\t{:.17g}\t{:.17g}\t{}\t{}\t{:.17g}\t{}\n", r.step, r.vertices, r.length,
             r.objective, r.pthi, r.cthi, r.residual, r.struts, r.kinks, r.alpha, r.event);
}

namespace {

StepRecord measure_record(const Polygon& poly, const RunConfig& cfg) {
  StepRecord r;
  r.vertices = poly.num_vertices();
  r.length = polygon_length(poly);
  r.objective = objective(poly, cfg);
  const PthiCthi t = thicknesses(poly, cfg.tau, 0.0);
  r.pthi = t.pthi;
  r.cthi = t.cthi;
  return r;
}

Polygon jittered(const Polygon& poly, const RunConfig& cfg) {
  if (cfg.jitter <= 0) return poly;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd x = poly.coords();
  const double scale = cfg.jitter * mean_edge_length(poly);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += scale * g(rng);
  return poly.with_coords(std::move(x));
}

}  // namespace

RunResult run(const Polygon& input, const RunConfig& cfg, std::ostream* log) {
  cfg.validate();
  input.validate();
  RunResult out;
  if (log) write_log_header(*log);
  auto emit = [&](StepRecord r) {
    out.trace.push_back(r);
    if (log) {
      write_log_record(*log, r);
      log->flush();
    }
  };

  Polygon p = normalize_thickness(jittered(input, cfg), cfg.tau);
  std::size_t step = 0;
  for (std::size_t level = 0; level < cfg.schedule.size(); ++level) {
    p = normalize_thickness(resample(p, schedule_counts(p, cfg.schedule[level])), cfg.tau);
    DescentState st = make_state(p);
    st.step = step;
    StepRecord head = measure_record(p, cfg);
    head.step = step;
    head.event = fmt::format("level{}:{:g}", level, cfg.schedule[level]);
    emit(head);

    Polygon best = p;
    double best_prop = head.length / head.pthi;
    RunStatus status = RunStatus::BudgetExhausted;
    std::size_t floor_run = 0;
    double last_len = head.length;
    const bool final_level = level + 1 == cfg.schedule.size();
    double mark_prop = best_prop;
    std::size_t mark_step = 0;
    std::size_t taken = 0;
    for (; taken < cfg.max_steps; ++taken) {
      try {
        st = descend_step(std::move(st), cfg);
      } catch (const StallError& e) {
        status = RunStatus::Stalled;
        out.message = e.what();
        break;
      }
      if (st.converged) {
        status = RunStatus::Converged;
        StepRecord r = measure_record(st.poly, cfg);
        r.step = st.step;
        r.residual = st.residual;
        r.struts = st.active.struts.size();
        r.kinks = st.active.kinks.size();
        r.event = "converged";
        emit(r);
        break;
      }
      if (current_cthi(st, cfg) < 1.0 - cfg.max_err) st = correct(std::move(st), cfg);
      StepRecord r = st.log.back();
      const StepRecord m = measure_record(st.poly, cfg);
      r.vertices = m.vertices;
      r.length = m.length;
      r.objective = m.objective;
      r.pthi = m.pthi;
      r.cthi = m.cthi;
      emit(r);

      const double prop = m.length / m.pthi;
      if (m.cthi >= 1.0 - cfg.max_err && prop < best_prop) {
        best_prop = prop;
        best = st.poly;
      }
      if (cfg.checkpoint_every > 0 && st.step % cfg.checkpoint_every == 0 && !cfg.checkpoint_prefix.empty())
        write_vect_file(st.poly, fmt::format("{}{:06d}.vect", cfg.checkpoint_prefix, st.step));

      const bool at_floor = r.alpha <= cfg.min_step * (1.0 + 1e-12);
      const bool flat = std::abs(m.length - last_len) <= cfg.stall_change * last_len;
      floor_run = (at_floor && flat) ? floor_run + 1 : 0;
      last_len = m.length;
      if (floor_run >= cfg.stall_steps) {
        status = RunStatus::Stalled;
        out.message = fmt::format("stalled: {} consecutive steps at the step floor without length change", floor_run);
        break;
      }
      // Coarse levels only need to hand a reasonable shape to the next one.
      if (best_prop < mark_prop * (1.0 - cfg.plateau_gain)) {
        mark_prop = best_prop;
        mark_step = taken;
      }
      if (!final_level && cfg.plateau_steps > 0 && taken - mark_step >= cfg.plateau_steps) {
        status = RunStatus::Converged;
        StepRecord rp = m;
        rp.step = st.step;
        rp.residual = st.residual;
        rp.event = "plateau";
        emit(rp);
        break;
      }
    }
    step = st.step;
    if (status == RunStatus::Converged && st.converged) {
      p = st.poly;
      out.message.clear();
    } else if (status == RunStatus::Converged) {
      p = best;
    } else {
      p = best;
      if (status == RunStatus::BudgetExhausted)
        out.message = fmt::format("step budget of {} exhausted at level {}", cfg.max_steps, level);
    }
    out.status = status;
    if (level + 1 == cfg.schedule.size()) {
      out.state = status == RunStatus::Converged ? std::move(st) : make_state(best);
      out.state.step = step;
    }
  }
  if (!out.state.fresh) {
    out.state.active = find_active_sets(out.state.poly, active_options(cfg));
    out.state.cthi = out.state.active.cthi;
    try {
      refresh(out.state, cfg, true);
    } catch (const SingularMatrixError&) {
      out.state.residual = 1.0;
    }
  }
  return out;
}

}  // namespace taut
