#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "taut/geometry.hpp"
#include "taut/rigidity.hpp"
#include "taut/thickness.hpp"

namespace taut {

/// No acceptable step length was found.
class StallError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  double tau = 1.0;        ///< curvature stiffness: kinks hold MinRad >= tau
  double max_err = 1e-4;   ///< allowed thickness deficit before a correction
  double min_step = 1e-6;
  double max_step = 1e-2;
  double euler_cap = 1e-2;
  double residual_target = kCriticalThreshold;
  std::vector<double> schedule{2.0, 4.0, 8.0};  ///< vertices per unit ropelength
  double eq_stiffness = 1.0;
  std::uint64_t seed = 0;
  double jitter = 0.0;  ///< initial random displacement, in mean edge lengths
  std::size_t max_steps = 20000;  ///< per schedule level
  /// Below the final level, move on once ropelength has not dropped by a
  /// factor plateau_gain within plateau_steps steps (0 disables).
  std::size_t plateau_steps = 400;
  double plateau_gain = 1e-4;
  std::size_t max_newton = 10;
  double strut_tol = 1e-4;
  /// Keep last step's struts while their edge pair stays inside the band.
  bool sticky_struts = true;
  double kink_tol = 1e-4;
  double search_tol = 1e-3;       ///< relative precision of the line search
  double accept_increase = 1e-3;  ///< relative ropelength increase tolerated at the step floor
  std::size_t stall_steps = 100;
  double stall_change = 1e-9;
  std::size_t checkpoint_every = 0;  ///< 0 disables checkpoints
  std::string checkpoint_prefix;     ///< checkpoints go to <prefix><step>.vect
  /// Called with (A, direction, resolution) after every rigidity solve.
  std::function<void(const SparseMatrix&, const Variation&, const Resolution&)> on_resolve;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// Applies `key = value` lines (blank lines and # comments ignored) on top of
/// `base`. Unknown keys and malformed values throw std::invalid_argument.
RunConfig parse_config(std::istream& in, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

struct StepRecord {
  std::size_t step = 0;
  std::size_t vertices = 0;
  double length = 0.0;
  double objective = 0.0;  ///< length + eq penalty
  double pthi = 0.0;
  double cthi = 0.0;
  double residual = 1.0;
  std::size_t struts = 0;
  std::size_t kinks = 0;
  double alpha = 0.0;
  std::string event;
};

struct DescentState {
  Polygon poly;
  std::size_t step = 0;
  /// Active sets and resolution of the current polygon, when `fresh`.
  ActiveSets active;
  Resolution resolution;
  bool fresh = false;
  bool regularized = false;  ///< resolution came from the regularized fallback
  double cthi = kInfinity;
  double residual = 1.0;
  bool converged = false;
  std::vector<StepRecord> log;
};

/// Fresh state at `poly` (no rescaling).
DescentState make_state(const Polygon& poly);

/// make_state plus active sets and the resolution of the descent direction.
/// Active sets are measured against thickness 1, so normalize first.
DescentState analyze(const Polygon& poly, const RunConfig& cfg);

/// One step: an Euler step while no constraint is active, otherwise a line
/// search on ropelength along the constrained gradient. Marks the state
/// converged instead of stepping once the residual reaches the target.
DescentState descend_step(DescentState state, const RunConfig& cfg);

/// Newton correction pulling CThi back toward 1 - max_err / 2, falling back
/// to a uniform rescale when it does not reach 1 - max_err.
DescentState correct(DescentState state, const RunConfig& cfg);

enum class RunStatus { Converged, Stalled, BudgetExhausted };
std::string to_string(RunStatus s);

struct RunResult {
  DescentState state;  ///< best state of the final level
  RunStatus status = RunStatus::BudgetExhausted;
  std::vector<StepRecord> trace;
  std::string message;
};

/// Rescales to CThi = 1, then tightens through every schedule level,
/// resampling the curve between levels. Writes the TSV log to `log` when
/// non-null and VECT checkpoints per the config.
RunResult run(const Polygon& poly, const RunConfig& cfg, std::ostream* log = nullptr);

/// Polygon sampled at equal arclength from the rounded-out curve, with
/// counts[c] vertices on component c.
Polygon resample(const Polygon& poly, const std::vector<std::size_t>& counts);
/// resample with factor times as many vertices per component.
Polygon refine(const Polygon& poly, std::size_t factor);

/// Vertex counts giving `per_unit` vertices per unit of ropelength.
std::vector<std::size_t> schedule_counts(const Polygon& poly, double per_unit);

/// Uniform scaling making CThi(tau, mean edge) equal to one. CThi is not
/// homogeneous (the VB window depends on the edge length), so the scale is
/// found by a secant iteration on log CThi.
Polygon normalize_thickness(const Polygon& poly, double tau);

void write_log_header(std::ostream& out);
void write_log_record(std::ostream& out, const StepRecord& r);

}  // namespace taut
