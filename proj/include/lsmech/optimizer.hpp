#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lsmech/fem.hpp"
#include "lsmech/levelset.hpp"
#include "lsmech/mesh.hpp"
#include "lsmech/objective.hpp"
#include "lsmech/sensitivity.hpp"
#include "lsmech/stress.hpp"

namespace lsmech {

enum class ObjectiveMode { EffectiveEnergy, PNorm, Compliance };
enum class RunStatus { Converged, MaxIters, Degenerate };

std::string_view to_string(ObjectiveMode mode);
std::string_view to_string(RunStatus status);
ObjectiveMode parse_objective_mode(std::string_view text);

struct ConvergenceParams {
  int window = 5;
  double tolerance = 1.0e-3;
  // Allowed volume excess over V_max for a converged design.
  double volume_tolerance = 0.005;
  bool operator==(const ConvergenceParams&) const = default;
};

struct ProblemSpec {
  std::string name = "inverter";
  ObjectiveMode mode = ObjectiveMode::EffectiveEnergy;
  RectDomain domain;
  std::vector<Port> ports;
  Material material;
  LoadSpec loads;
  ObjectiveParams objective;
  StressParams stress;
  HeavisideParams heaviside;
  RdeParams rde;
  PortMeasure port_measure = PortMeasure::Mean;
  double volume_max = 0.3;
  // Largest volume-fraction decrease the multiplier search targets per
  // iteration while the design is above V_max; 0 targets V_max directly.
  double volume_step = 0.02;
  double mu = 0.0;
  // When true, mu is relative: it is multiplied by the ratio of mean
  // objective to mean stress sensitivity magnitude on the initial design,
  // frozen for the run. When false, mu multiplies the raw stress terms.
  bool relative_mu = true;
  double smoothing_weight = 0.9;
  int max_iters = 500;
  ConvergenceParams convergence;
  // Degenerate when U_i exceeds this multiple of the initial U_i ...
  double degenerate_ratio = 1.0e3;
  // ... or the input port stays disconnected from the support this long.
  int degenerate_patience = 10;
  // Element density at or above which an element counts as material in the
  // connectivity test.
  double connectivity_threshold = 0.1;
  int checkpoint_every = 0;

  void validate() const;
  // 2 for a symmetric half model (any Symmetry port), else 1.
  double mirror() const;
  bool operator==(const ProblemSpec&) const = default;
};

// Benchmark geometries. `divisions_per_length` sets the element size
// L / n; the inverter and magnifier use the symmetric upper half.
ProblemSpec inverter_problem(int divisions_per_length = 400);
ProblemSpec magnifier_problem(int divisions_per_length = 200);
ProblemSpec lbeam_problem(int divisions_per_length = 200);

Mesh build_problem_mesh(const ProblemSpec& spec);

struct HistoryRow {
  int iter = 0;
  double objective = 0.0;  // J, sigma_pn or compliance depending on mode
  double W = 0.0;
  double E = 0.0;
  double volume = 0.0;
  double sigma_pn = 0.0;
  double max_stress_ratio = 0.0;
  double U_o = 0.0;
  double U_i = 0.0;
  double lambda = 0.0;
  double max_von_mises = 0.0;
};

class RunHistory {
 public:
  // Rows must arrive with consecutive iteration numbers.
  void append(const HistoryRow& row);
  const std::vector<HistoryRow>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const HistoryRow& back() const { return rows_.back(); }
  HistoryRow& back() { return rows_.back(); }

 private:
  std::vector<HistoryRow> rows_;
};

// Relative objective change over the last `window` rows below tolerance and
// the last design volume-feasible.
bool check_convergence(const RunHistory& history, int window, double tolerance, double volume_max,
                       double volume_tolerance);

struct MultiplierSearch {
  double lambda = 0.0;  // offset in normalized reaction units (>= 0)
  double volume = 0.0;  // trial volume at lambda
  LevelSetField phi;    // trial update at lambda
  bool monotone = true; // trial volumes were non-increasing in lambda
  int evaluations = 0;
};

// Finds the smallest lambda >= 0 such that the trial update
// step(phi, dtF, -lambda) has volume <= target (to within `tolerance`).
MultiplierSearch bisect_volume_multiplier(const ReactionDiffusion& rde, const Mesh& mesh,
                                          const HeavisideParams& heaviside, const LevelSetField& phi,
                                          std::span<const double> dtF, double target,
                                          double tolerance = 1.0e-3);

// Everything needed to continue a run exactly where it stopped.
struct OptimizerState {
  int next_iter = 0;
  LevelSetField phi;
  std::optional<Normalization> normalization;
  double initial_U_i = 0.0;
  // Frozen factor converting the relative mu to the raw multiplier.
  std::optional<double> stress_scale;
  std::optional<std::vector<double>> smoothed_stress;
  RunHistory history;
  int disconnected_streak = 0;
};

struct RunResult {
  LevelSetField phi;
  RunHistory history;
  RunStatus status = RunStatus::MaxIters;
  std::string message;
  FieldVector u;
  StressField stress;
  std::vector<double> dtL;  // last nodal topological derivative (empty if none)
  std::vector<double> stress_term;
  std::vector<double> wall_time;  // seconds per recorded iteration
  // State that re-evaluates the final design as its next iteration.
  OptimizerState state;
};

struct RunObserver {
  std::function<void(const HistoryRow&)> on_iteration;
  // Called every spec.checkpoint_every iterations with the state to resume
  // from.
  std::function<void(const OptimizerState&)> on_checkpoint;
};

RunResult run(const ProblemSpec& spec, const RunObserver& observer = {});
RunResult resume(const ProblemSpec& spec, OptimizerState state, const RunObserver& observer = {});

struct SweepRow {
  std::string condition;
  double alpha = 0.0;
  double beta = 0.0;
  double mu = 0.0;
  double p = 0.0;
  std::string mode;
  double U_o = 0.0;
  double U_i = 0.0;
  double ratio = 0.0;
  double max_von_mises = 0.0;
  double volume = 0.0;
  int iterations = 0;
  RunStatus status = RunStatus::MaxIters;
  std::string error;  // non-empty when the run threw
};

// Runs every condition, `jobs` at a time; failures become rows with an error.
std::vector<SweepRow> sweep(const std::vector<ProblemSpec>& grid, int jobs = 1,
                            const std::function<void(std::size_t, const SweepRow&, const RunResult*)>& done = {});

}  // namespace lsmech
