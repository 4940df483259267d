// Acceptance run: one PASS/FAIL line per criterion. `--slow` adds the
// Borromean rings run.
#include <fmt/core.h>

#include <Eigen/Geometry>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nnls_oracle.hpp"
#include "support.hpp"
#include "taut/descent.hpp"
#include "taut/io.hpp"
#include "taut/knots.hpp"
#include "taut/roundout.hpp"

using namespace taut;

namespace {

constexpr double kPi = std::numbers::pi;

// Pinned tolerances.
constexpr double kHopfTarget = 8 * kPi;
constexpr double kChainTarget = 12 * kPi + 4;
constexpr double kRopTol = 0.003;
constexpr double kTrefoilProp = 33.1;
constexpr double kTrefoilResidual = 0.01;
constexpr double kUnknotTarget = 4 * kPi;
constexpr double kUnknotTol = 0.005;
constexpr double kGradTol = 1e-4;
constexpr double kEnumTol = 1e-8;
constexpr double kKktTol = 1e-8;
constexpr double kRoundoutSlack = 1e-3;
constexpr double kBorromeanTarget = 58.0070;
constexpr double kBorromeanTol = 0.001;

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Line {
  int id;
  std::string text;
};
std::vector<Line> lines;
bool all_pass = true;

std::vector<int> only;  // --only=1,5,6 restricts the run

void report(int id, const std::string& name, const std::function<Verdict()>& check) {
  if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) return;
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  all_pass &= v.pass;
  lines.push_back({id, fmt::format("criterion {:>2}: {}  {}  [{}] ({:.1f} s)", id, v.pass ? "PASS" : "FAIL", name, v.detail, secs)});
  fmt::print(stderr, "{}\n", lines.back().text);  // progress
}

// KKT certificate of every rigidity solve seen through RunConfig::on_resolve,
// rebuilt here from A and the direction alone.
struct KktAudit {
  std::size_t solves = 0;
  std::size_t failures = 0;
  double worst = 0.0;

  void check(const SparseMatrix& a, const Variation& direction, const Resolution& r) {
    ++solves;
    const Eigen::Index cols = a.cols();
    if (cols == 0) return;
    Eigen::VectorXd scale(cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double n = a.col(j).norm();
      scale[j] = n > 0 ? 1.0 / n : 1.0;
    }
    const Eigen::VectorXd x = r.multipliers.cwiseQuotient(scale);
    const Eigen::MatrixXd as = Eigen::MatrixXd(a) * scale.asDiagonal();
    const Eigen::VectorXd& b = direction.data();
    const Eigen::VectorXd res = b - as * x;
    // Gradient of the (possibly regularized) objective, negated.
    const Eigen::VectorXd g = as.transpose() * res - r.mu * x;
    const double ref = std::max((as.transpose() * b).cwiseAbs().maxCoeff(), 1e-300);
    double bad = 0.0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (x[j] < 0) bad = std::max(bad, -x[j]);
      bad = std::max(bad, g[j] / ref);                            // no descent into the bound set
      if (x[j] > 0) bad = std::max(bad, std::abs(g[j]) / ref);    // stationary on the free set
    }
    worst = std::max(worst, bad);
    if (bad > kKktTol) ++failures;
  }
};

KktAudit audit;

RunConfig audited(RunConfig cfg) {
  cfg.on_resolve = [](const SparseMatrix& a, const Variation& b, const Resolution& r) { audit.check(a, b, r); };
  return cfg;
}

struct Tightened {
  RunResult run;
  double prop = 0.0;
};

Tightened tighten(const Polygon& start, const RunConfig& cfg) {
  Tightened t;
  t.run = run(start, audited(cfg));
  t.prop = prop_len(t.run.state.poly);
  return t;
}

std::string run_summary(const Tightened& t) {
  return fmt::format("status {} after {} steps, {} vertices, PRop {:.6f}, residual {:.4g}", to_string(t.run.status),
                     t.run.state.step, t.run.state.poly.num_vertices(), t.prop, t.run.state.residual);
}

Verdict rop_within(const Tightened& t, double target, double tol, std::size_t max_vertices) {
  const RopBound b = rop_upper_bound(t.run.state.poly);
  const double rel = std::abs(b.rop - target) / target;
  const bool ok = rel <= tol && t.run.state.poly.num_vertices() <= max_vertices;
  return {ok, fmt::format("Rop bound {:.6f} vs {:.6f} ({:.3f}%), {}", b.rop, target, 100 * rel, run_summary(t))};
}

std::vector<Polygon> converged_shapes;

double fd_relative_error(const Eigen::VectorXd& g, const Polygon& p, const std::function<double(const Polygon&)>& f,
                         double h) {
  Eigen::VectorXd fd(g.size());
  for (Eigen::Index k = 0; k < g.size(); ++k) fd[k] = testing_support::central_difference(p, static_cast<std::size_t>(k), h, f);
  return (g - fd).norm() / std::max(fd.norm(), 1e-300);
}

Verdict gradient_suite() {
  std::mt19937_64 rng(515);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  double worst_len = 0, worst_chord = 0, worst_minrad = 0;
  std::size_t failures = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t n = 8 + seed % 13;
    const Polygon p = testing_support::random_curve(n, 9000 + seed);
    // Length, whose gradient is returned negated.
    const double e1 = fd_relative_error(-grad_length(p).data(), p, polygon_length, 1e-6);
    // Half chord length between two points at fixed barycentric positions.
    const EdgePoint a{seed % n, u(rng)}, b{(seed + n / 2) % n, u(rng)};
    const double e2 = fd_relative_error(grad_chord(p, a, b).dense(n).data(), p,
                                        [&](const Polygon& q) { return 0.5 * (point_on(q, a) - point_on(q, b)).norm(); },
                                        1e-6);
    double e3 = 0;
    const std::size_t i = (3 * seed) % n;
    for (Side s : {Side::Minus, Side::Plus})
      e3 = std::max(e3, fd_relative_error(grad_minrad(p, i, s).dense(n).data(), p,
                                          [&](const Polygon& q) { return minrad_pm(q, i).get(s); }, 1e-7));
    worst_len = std::max(worst_len, e1);
    worst_chord = std::max(worst_chord, e2);
    worst_minrad = std::max(worst_minrad, e3);
    failures += (e1 > kGradTol) + (e2 > kGradTol) + (e3 > kGradTol);
  }
  // Norm bound at unit-MinRad equilateral corners.
  std::uniform_real_distribution<double> ell_dist(0.02, 1.9);
  std::normal_distribution<double> g(0.0, 1.0);
  std::size_t bound_failures = 0;
  double tightest = kInfinity;
  for (int trial = 0; trial < 1000; ++trial) {
    const double ell = ell_dist(rng);
    const double theta = 2.0 * std::atan(ell / 2.0);  // (ell/2) / tan(theta/2) = 1
    const Eigen::Matrix3d rot = Eigen::Quaterniond(g(rng), g(rng), g(rng), g(rng)).normalized().toRotationMatrix();
    const Vec3 prev = rot * Vec3(-ell, 0, 0);
    const Vec3 next = rot * Vec3(ell * std::cos(theta), ell * std::sin(theta), 0);
    const Vec3 far = rot * Vec3(0.3 * ell, -2.5 * ell, 0.7 * ell);
    const Polygon corner({{prev, Vec3::Zero(), next, far}});
    for (Side s : {Side::Minus, Side::Plus}) {
      const double ratio = grad_minrad(corner, 1, s).dense(4).norm() / (2.0 / (ell * ell));
      tightest = std::min(tightest, ratio);
      if (ratio < 1.0 - 1e-12) ++bound_failures;
    }
  }
  return {failures == 0 && bound_failures == 0,
          fmt::format("worst relative FD error: length {:.2e}, chord {:.2e}, minrad {:.2e}; norm bound min ratio {:.6f}, {} "
                      "violations",
                      worst_len, worst_chord, worst_minrad, tightest, bound_failures)};
}

Verdict snnls_oracle() {
  std::mt19937_64 rng(606);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  std::size_t failures = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int cols = 1 + trial % 18;
    const int rows = cols + 1 + static_cast<int>(rng() % 40);
    const SparseMatrix a = testing_support::random_sparse(rows, cols, 6, rng);
    Eigen::VectorXd b(rows);
    for (int i = 0; i < rows; ++i) b[i] = g(rng);
    const SnnlsResult r = snnls_solve(a, b);
    const Eigen::MatrixXd d(a);
    const double err =
        std::abs(testing_support::objective(d, b, r.lambda) - testing_support::nnls_by_enumeration(d, b)) /
        std::max(1.0, b.squaredNorm());
    worst = std::max(worst, err);
    if (err > kEnumTol || !r.converged) ++failures;
  }
  const bool runs_ok = audit.solves > 0 && audit.failures == 0;
  return {failures == 0 && runs_ok,
          fmt::format("enumeration: worst objective gap {:.2e}, {} failures; integration runs: {} solves, {} KKT "
                      "failures, worst violation {:.2e}",
                      worst, failures, audit.solves, audit.failures, audit.worst)};
}

Verdict thickness_oracle() {
  std::size_t mismatches = 0, struts = 0, kinks = 0;
  std::string first;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t n = 10 + (seed * 37) % 191;  // 10 .. 200 edges
    const Polygon p = seed % 4 == 0 ? testing_support::random_link(2, n / 2, 700 + seed)
                                    : testing_support::random_curve(n, 800 + seed);
    const double ell = mean_edge_length(p);
    ActiveSetOptions opt;
    opt.target = 2.5 * ell;
    opt.strut_tol = 0.2;
    opt.kink_tol = 0.2;
    const ActiveSets got = find_active_sets(p, opt);
    const auto want = testing_support::exhaustive_minima(p, true, vb_threshold(opt.tau, ell),
                                                         2.0 * opt.target * (1.0 + opt.strut_tol));
    bool same = got.struts.size() == want.size();
    for (std::size_t k = 0; same && k < want.size(); ++k) {
      const Strut& s = got.struts[k];
      same = s.p.edge == want[k].pe && s.q.edge == want[k].qe && std::abs(s.p.alpha - want[k].pa) < 1e-7 &&
             std::abs(s.q.alpha - want[k].qa) < 1e-7;
    }
    // Kinks: every vertex side whose MinRad sits under the band.
    std::vector<std::pair<std::size_t, int>> want_kinks, got_kinks;
    for (std::size_t i = 0; i < p.num_vertices(); ++i) {
      const MinRadPair m = minrad_pm(p, i);
      if (m.minus <= opt.target * opt.tau * (1 + opt.kink_tol)) want_kinks.emplace_back(i, 0);
      if (m.plus <= opt.target * opt.tau * (1 + opt.kink_tol)) want_kinks.emplace_back(i, 1);
    }
    for (const Kink& k : got.kinks) got_kinks.emplace_back(k.vertex, k.side == Side::Plus ? 1 : 0);
    std::sort(got_kinks.begin(), got_kinks.end());
    same = same && got_kinks == want_kinks;
    struts += want.size();
    kinks += want_kinks.size();
    if (!same) {
      ++mismatches;
      if (first.empty())
        first = fmt::format(", first mismatch seed {} ({} vs {} struts, {} vs {} kinks)", seed, got.struts.size(),
                            want.size(), got_kinks.size(), want_kinks.size());
    }
  }
  return {mismatches == 0,
          fmt::format("100 polygons, {} struts and {} kinks in the oracle, {} mismatching polygons{}", struts, kinks,
                      mismatches, first)};
}

Verdict roundout_certification() {
  std::vector<std::pair<std::string, Polygon>> shapes;
  for (std::size_t i = 0; i < converged_shapes.size(); ++i) shapes.emplace_back(fmt::format("run{}", i + 1), converged_shapes[i]);
  const std::filesystem::path dir(TAUT_DATA_DIR);
  if (std::filesystem::exists(dir)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
      if (e.path().extension() == ".vect") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) shapes.emplace_back(f.filename().string(), read_vect_file(f.string()));
  }
  if (shapes.empty()) return {false, "no converged shapes"};
  bool ok = true;
  std::string detail;
  for (const auto& [name, p] : shapes) {
    // eps scales with sqrt(gap), so gap / 100 refines eps tenfold.
    const RopBound coarse = rop_upper_bound(p, 1e-6);
    const RopBound fine = rop_upper_bound(p, 1e-8);
    const double prop = prop_len(p);
    const bool monotone = fine.rop <= coarse.rop * (1 + 1e-12);
    const bool below = coarse.rop <= prop + kRoundoutSlack;
    ok &= monotone && below;
    detail += fmt::format("{}{}: {:.6f} -> {:.6f} (PRop {:.6f}){}", detail.empty() ? "" : "; ", name, coarse.rop,
                          fine.rop, prop, monotone && below ? "" : " FAILED");
  }
  return {ok, detail};
}

Verdict determinism() {
  RunConfig cfg;
  cfg.schedule = {2.0};
  cfg.max_steps = 300;
  cfg.jitter = 0.05;
  cfg.seed = 99;
  std::ostringstream a, b;
  run(hopf_link(36, 3.0), audited(cfg), &a);
  run(hopf_link(36, 3.0), audited(cfg), &b);
  const bool same = !a.str().empty() && a.str() == b.str();
  return {same, fmt::format("{} byte logs, {}", a.str().size(), same ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  bool slow = false;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    slow |= arg == "--slow";
    if (arg.rfind("--only=", 0) == 0) {
      std::stringstream ss(arg.substr(7));
      for (std::string item; std::getline(ss, item, ',');) only.push_back(std::stoi(item));
    }
  }

  const RunConfig defaults;
  report(1, "Hopf link Rop bound within 0.3% of 8 pi", [&] {
    const Tightened t = tighten(hopf_link(60, 3.0), defaults);
    converged_shapes.push_back(t.run.state.poly);
    return rop_within(t, kHopfTarget, kRopTol, 250);
  });
  report(2, "simple chain Rop bound within 0.3% of 12 pi + 4", [&] {
    const Tightened t = tighten(simple_chain(60, 3.0), defaults);
    converged_shapes.push_back(t.run.state.poly);
    return rop_within(t, kChainTarget, kRopTol, 400);
  });
  report(3, "trefoil PRop <= 33.1 at 8 vertices per unit, residual <= 0.01", [&] {
    const Tightened t = tighten(torus_knot(2, 3, 120, 3.0, 1.5), defaults);
    converged_shapes.push_back(t.run.state.poly);
    const bool ok = defaults.schedule.back() == 8.0 && t.prop <= kTrefoilProp && t.run.state.residual <= kTrefoilResidual;
    return Verdict{ok, run_summary(t)};
  });
  report(4, "round unknot converges with PRop within 0.5% of 4 pi", [&] {
    const Tightened t = tighten(regular_polygon(64, 5.0), defaults);
    const double rel = std::abs(t.prop - kUnknotTarget) / kUnknotTarget;
    const bool ok = t.run.status == RunStatus::Converged && rel <= kUnknotTol;
    return Verdict{ok, fmt::format("PRop {:.6f} vs 4 pi = {:.6f} ({:.2f}% off), {}", t.prop, kUnknotTarget, 100 * rel,
                                   run_summary(t))};
  });
  report(5, "gradients match central differences; MinRad gradient norm bound", gradient_suite);
  // Runs before the SNNLS criterion so its solves are audited too.
  report(9, "identical config and seed give byte-identical logs", determinism);
  report(6, "SNNLS matches support enumeration; KKT holds in every run solve", snnls_oracle);
  report(7, "accelerated active sets equal the exhaustive search", thickness_oracle);
  report(8, "Rop bound monotone under 10x eps refinement and <= PRop + 1e-3", roundout_certification);
  if (slow) {
    report(10, "Borromean rings Rop bound within 0.1% of 58.0070, no self-contacts", [&] {
      RunConfig cfg = defaults;
      cfg.schedule = {2.0, 4.0, 8.0, 16.0};
      const Tightened t = tighten(borromean_rings(120, 3.0), cfg);
      Verdict v = rop_within(t, kBorromeanTarget, kBorromeanTol, 1000);
      const Polygon& p = t.run.state.poly;
      std::size_t same = 0;
      for (const Strut& s : t.run.state.active.struts) same += p.component_of(s.p.edge) == p.component_of(s.q.edge);
      v.pass = v.pass && same == 0;
      v.detail += fmt::format(", {} same-component struts", same);
      return v;
    });
  } else if (only.empty()) {
    lines.push_back({10, "criterion 10: SKIP  Borromean rings (slow suite, run with --slow)"});
  }
  std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) { return a.id < b.id; });
  for (const Line& l : lines) fmt::print("{}\n", l.text);
  return all_pass ? 0 : 1;
}
