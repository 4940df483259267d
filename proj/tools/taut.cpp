// Command line front end: tighten, measure, roundout, contacts.
#include <CLI11.hpp>
#include <fmt/core.h>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "taut/descent.hpp"
#include "taut/io.hpp"
#include "taut/roundout.hpp"

using namespace taut;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNoConvergence = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TightenArgs {
  std::string input, out, log, config, schedule, checkpoint_prefix;
  std::optional<double> tau, maxerr, residual_target, jitter, eq_stiffness;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_steps, checkpoint_every;
};

std::vector<double> parse_schedule(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(fmt::format("bad --res-schedule entry '{}'", item));
    }
  }
  return out;
}

RunConfig tighten_config(const TightenArgs& a) {
  RunConfig cfg;
  if (!a.config.empty()) cfg = load_config(a.config);  // file problems are data errors
  try {
    if (a.tau) cfg.tau = *a.tau;
    if (a.maxerr) cfg.max_err = *a.maxerr;
    if (a.residual_target) cfg.residual_target = *a.residual_target;
    if (a.jitter) cfg.jitter = *a.jitter;
    if (a.eq_stiffness) cfg.eq_stiffness = *a.eq_stiffness;
    if (a.seed) cfg.seed = *a.seed;
    if (a.max_steps) cfg.max_steps = *a.max_steps;
    if (a.checkpoint_every) cfg.checkpoint_every = *a.checkpoint_every;
    if (!a.checkpoint_prefix.empty()) cfg.checkpoint_prefix = a.checkpoint_prefix;
    if (!a.schedule.empty()) cfg.schedule = parse_schedule(a.schedule);
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (cfg.checkpoint_every > 0 && cfg.checkpoint_prefix.empty())
    throw UsageError("--checkpoint-every needs --checkpoint-prefix");
  return cfg;
}

void row(const char* key, double v) { fmt::print("{:<18}{:.10g}\n", key, v); }
void row(const char* key, std::size_t v) { fmt::print("{:<18}{}\n", key, v); }
void row(const char* key, const std::string& v) { fmt::print("{:<18}{}\n", key, v); }

int tighten(const TightenArgs& a) {
  const RunConfig cfg = tighten_config(a);
  const Polygon p = read_vect_file(a.input);
  std::ofstream log_file;
  if (!a.log.empty()) {
    log_file.open(a.log);
    if (!log_file) throw std::runtime_error("cannot open log file " + a.log);
  }
  const RunResult r = run(p, cfg, a.log.empty() ? nullptr : &log_file);
  write_vect_file(r.state.poly, a.out);
  row("status", to_string(r.status));
  if (!r.message.empty()) row("message", r.message);
  row("steps", r.state.step);
  row("vertices", r.state.poly.num_vertices());
  row("PRop", prop_len(r.state.poly));
  row("residual", r.state.residual);
  row("struts", r.state.active.struts.size());
  row("kinks", r.state.active.kinks.size());
  return r.status == RunStatus::Converged ? kOk : kNoConvergence;
}

int measure(const std::string& input, double tau) {
  const Polygon p = read_vect_file(input);
  const PthiCthi t = thicknesses(p, tau, 0.0);
  RunConfig cfg;
  cfg.tau = tau;
  const DescentState st = analyze(normalize_thickness(p, tau), cfg);
  row("components", p.num_components());
  row("vertices", p.num_vertices());
  row("Len", polygon_length(p));
  row("PThi", t.pthi);
  row("CThi", t.cthi);
  row("PRop", polygon_length(p) / t.pthi);
  row("struts", st.active.struts.size());
  row("kinks", st.active.kinks.size());
  row("residual", st.residual);
  return kOk;
}

int roundout(const std::string& input, double gap) {
  const Polygon p = read_vect_file(input);
  const RopBound b = rop_upper_bound(p, gap);
  row("Rop", b.rop);
  row("PRop", prop_len(p));
  row("smooth_length", b.smooth_length);
  row("polygon_length", b.polygon_length);
  row("min_radius", b.min_radius);
  row("distance_bound", b.distance_bound);
  row("thickness", b.thickness);
  row("controlled_by", b.controlled_by());
  row("squares", b.search.squares);
  return kOk;
}

int contacts(const std::string& input, const std::string& format, const std::string& out, double tau) {
  const Polygon raw = read_vect_file(input);
  RunConfig cfg;
  cfg.tau = tau;
  const Polygon p = normalize_thickness(raw, tau);
  const DescentState st = analyze(p, cfg);
  const std::string text = export_contacts(p, st.active, st.resolution.multipliers,
                                           format == "svg" ? ContactFormat::Svg : ContactFormat::Csv);
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot open " + out);
    f << text;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tighten polygonal knots and links toward minimal ropelength."};
  app.require_subcommand(1);

  TightenArgs ta;
  auto* tight = app.add_subcommand("tighten", "Run constrained gradient descent on a VECT file");
  tight->add_option("input", ta.input, "input VECT file")->required();
  tight->add_option("--out,-o", ta.out, "where to write the tightened VECT")->required();
  tight->add_option("--log", ta.log, "TSV run log");
  tight->add_option("--config", ta.config, "key=value file applied before the flags");
  tight->add_option("--tau", ta.tau, "curvature stiffness");
  tight->add_option("--maxerr", ta.maxerr, "thickness error allowed before a correction");
  tight->add_option("--res-schedule", ta.schedule, "vertices per unit ropelength, e.g. 2,4,8");
  tight->add_option("--residual-target", ta.residual_target, "stop when the residual ratio drops below this");
  tight->add_option("--seed", ta.seed, "seed for --jitter");
  tight->add_option("--jitter", ta.jitter, "initial random displacement in mean edge lengths");
  tight->add_option("--eq-stiffness", ta.eq_stiffness, "equilateral penalty weight");
  tight->add_option("--max-steps", ta.max_steps, "step budget per schedule level");
  tight->add_option("--checkpoint-every", ta.checkpoint_every, "write a VECT checkpoint every N steps");
  tight->add_option("--checkpoint-prefix", ta.checkpoint_prefix, "checkpoint path prefix");

  std::string input, format = "csv", out;
  double tau = 1.0, gap = 1e-6;
  auto* meas = app.add_subcommand("measure", "Print length, thicknesses, ropelength and contact counts");
  meas->add_option("input", input, "input VECT file")->required();
  meas->add_option("--tau", tau, "curvature stiffness");

  auto* round = app.add_subcommand("roundout", "Certified ropelength bound of the rounded-out curve");
  round->add_option("input", input, "input VECT file")->required();
  round->add_option("--gap", gap, "certification slack")->check(CLI::PositiveNumber);

  auto* cont = app.add_subcommand("contacts", "Export the strut contact map");
  cont->add_option("input", input, "input VECT file")->required();
  cont->add_option("--format", format, "csv or svg")->check(CLI::IsMember({"csv", "svg"}));
  cont->add_option("--out,-o", out, "output path (default stdout)");
  cont->add_option("--tau", tau, "curvature stiffness");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*tight) return tighten(ta);
    if (*meas) return measure(input, tau);
    if (*round) return roundout(input, gap);
    if (*cont) return contacts(input, format, out, tau);
  } catch (const UsageError& e) {
    fmt::print(stderr, "usage error: {}\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kData;
  }
  return kUsage;
}
