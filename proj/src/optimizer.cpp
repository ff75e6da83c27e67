#include "lsmech/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "lsmech/error.hpp"

namespace lsmech {

std::string_view to_string(ObjectiveMode mode) {
  switch (mode) {
    case ObjectiveMode::EffectiveEnergy: return "effective_energy";
    case ObjectiveMode::PNorm: return "pnorm";
    case ObjectiveMode::Compliance: return "compliance";
  }
  return "unknown";
}

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Converged: return "Converged";
    case RunStatus::MaxIters: return "MaxIters";
    case RunStatus::Degenerate: return "Degenerate";
  }
  return "unknown";
}

ObjectiveMode parse_objective_mode(std::string_view text) {
  if (text == "effective_energy") return ObjectiveMode::EffectiveEnergy;
  if (text == "pnorm") return ObjectiveMode::PNorm;
  if (text == "compliance") return ObjectiveMode::Compliance;
  throw Error("unknown objective '" + std::string(text) + "' (effective_energy|pnorm|compliance)");
}

void ProblemSpec::validate() const {
  domain.validate();
  material.validate();
  loads.validate();
  objective.validate();
  stress.validate();
  heaviside.validate();
  rde.validate();
  if (!(volume_max > 0.0 && volume_max <= 1.0)) throw Error("volume_max must lie in (0, 1]");
  if (!(volume_step >= 0.0 && volume_step <= 1.0)) throw Error("volume_step must lie in [0, 1]");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw Error("mu must be finite and >= 0");
  if (!(smoothing_weight >= 0.0 && smoothing_weight < 1.0)) throw Error("smoothing_weight must lie in [0, 1)");
  if (max_iters < 1) throw Error("max_iters must be >= 1");
  if (convergence.window < 2) throw Error("convergence window must be >= 2");
  if (!(convergence.tolerance > 0.0)) throw Error("convergence tolerance must be > 0");
  if (!(convergence.volume_tolerance >= 0.0)) throw Error("volume tolerance must be >= 0");
  if (!(degenerate_ratio > 1.0)) throw Error("degenerate_ratio must be > 1");
  if (degenerate_patience < 1) throw Error("degenerate_patience must be >= 1");
  if (!(connectivity_threshold > 0.0 && connectivity_threshold <= 1.0)) {
    throw Error("connectivity_threshold must lie in (0, 1]");
  }
  if (checkpoint_every < 0) throw Error("checkpoint_every must be >= 0");
  auto has = [&](BoundaryTag tag) {
    return std::any_of(ports.begin(), ports.end(), [&](const Port& p) { return p.tag == tag; });
  };
  if (!has(BoundaryTag::Input)) throw Error("problem has no input port");
  if (!has(BoundaryTag::Fixed)) throw Error("problem has no fixed port");
  if (mode == ObjectiveMode::EffectiveEnergy && !has(BoundaryTag::Output)) {
    throw Error("effective_energy objective needs an output port");
  }
}

double ProblemSpec::mirror() const {
  const bool half = std::any_of(ports.begin(), ports.end(),
                                [](const Port& p) { return p.tag == BoundaryTag::Symmetry; });
  return half ? 2.0 : 1.0;
}

ProblemSpec inverter_problem(int n) {
  if (n < 4) throw Error("divisions per length must be >= 4");
  ProblemSpec s;
  s.name = "inverter";
  s.mode = ObjectiveMode::EffectiveEnergy;
  s.domain.length = 1.0;
  s.domain.width_frac = 1.0;
  s.domain.height_frac = 0.5;
  s.domain.divisions_x = n;
  s.domain.divisions_y = n / 2;
  s.ports = {{Side::Left, 0.96, 1.0, BoundaryTag::Fixed},
             {Side::Left, 0.0, 0.1, BoundaryTag::Input},
             {Side::Right, 0.0, 0.1, BoundaryTag::Output},
             {Side::Bottom, 0.0, 1.0, BoundaryTag::Symmetry}};
  s.loads.traction = {1.0e7, 0.0};
  s.loads.output_direction = {-1.0, 0.0};
  s.rde.tau = 5.0e-5;
  s.volume_max = 0.3;
  return s;
}

ProblemSpec magnifier_problem(int n) {
  ProblemSpec s = inverter_problem(n);
  s.name = "magnifier";
  s.loads.output_direction = {1.0, 0.0};
  s.rde.tau = 1.0e-4;
  return s;
}

ProblemSpec lbeam_problem(int n) {
  if (n < 5) throw Error("divisions per length must be >= 5");
  ProblemSpec s;
  s.name = "lbeam";
  s.mode = ObjectiveMode::PNorm;
  s.domain.length = 1.0;
  s.domain.width_frac = 1.0;
  s.domain.height_frac = 1.0;
  s.domain.divisions_x = n;
  s.domain.divisions_y = n;
  s.domain.void_boxes = {{0.4, 0.4, 1.0, 1.0}};
  s.ports = {{Side::Top, 0.0, 0.4, BoundaryTag::Fixed}, {Side::Right, 0.19, 0.21, BoundaryTag::Input}};
  s.loads.traction = {0.0, -1.0e7};
  s.loads.output_direction = {1.0, 0.0};
  s.rde.tau = 5.0e-5;
  s.volume_max = 0.6;
  return s;
}

Mesh build_problem_mesh(const ProblemSpec& spec) {
  spec.validate();
  Mesh mesh = tag_boundaries(build_structured_mesh(spec.domain), spec.ports);
  for (BoundaryTag tag : {BoundaryTag::Input, BoundaryTag::Fixed}) {
    if (!mesh.has_tag(tag)) {
      throw Error("port '" + std::string(to_string(tag)) + "' covers no boundary edge at this resolution");
    }
  }
  if (spec.mode == ObjectiveMode::EffectiveEnergy && !mesh.has_tag(BoundaryTag::Output)) {
    throw Error("port 'output' covers no boundary edge at this resolution");
  }
  return mesh;
}

void RunHistory::append(const HistoryRow& row) {
  if (!rows_.empty() && row.iter != rows_.back().iter + 1) {
    throw Error("history rows must have consecutive iteration numbers");
  }
  rows_.push_back(row);
}

bool check_convergence(const RunHistory& history, int window, double tolerance, double volume_max,
                       double volume_tolerance) {
  if (window < 2 || history.size() < static_cast<std::size_t>(window)) return false;
  const auto& rows = history.rows();
  const HistoryRow& last = rows.back();
  if (last.volume > volume_max + volume_tolerance) return false;
  const double scale = std::max(std::abs(last.objective), 1.0e-12);
  for (std::size_t k = rows.size() - static_cast<std::size_t>(window); k < rows.size(); ++k) {
    if (rows[k].volume > volume_max + volume_tolerance) return false;
    if (std::abs(rows[k].objective - last.objective) / scale >= tolerance) return false;
  }
  return true;
}

MultiplierSearch bisect_volume_multiplier(const ReactionDiffusion& rde, const Mesh& mesh,
                                          const HeavisideParams& heaviside, const LevelSetField& phi,
                                          std::span<const double> dtF, double target, double tolerance) {
  MultiplierSearch out;
  auto trial = [&](double lambda, LevelSetField& next) {
    next = rde.step(phi, dtF, -lambda);
    ++out.evaluations;
    return volume_fraction(mesh, next, heaviside);
  };

  LevelSetField lo_phi;
  const double v0 = trial(0.0, lo_phi);
  if (v0 <= target + tolerance) {
    out.lambda = 0.0;
    out.volume = v0;
    out.phi = std::move(lo_phi);
    return out;
  }

  double lo = 0.0, hi = 1.0, v_lo = v0;
  LevelSetField hi_phi;
  double v_hi = trial(hi, hi_phi);
  for (int k = 0; v_hi > target && k < 60; ++k) {
    if (v_hi > v_lo + 1e-12) out.monotone = false;
    lo = hi;
    v_lo = v_hi;
    hi *= 2.0;
    v_hi = trial(hi, hi_phi);
  }
  if (v_hi > target) throw Error("volume multiplier search failed to bracket the target volume");

  for (int k = 0; k < 60 && hi - lo > 1e-12 * std::max(1.0, hi); ++k) {
    const double mid = 0.5 * (lo + hi);
    LevelSetField mid_phi;
    const double v_mid = trial(mid, mid_phi);
    if (v_mid > v_lo + 1e-12 || v_mid < v_hi - 1e-12) out.monotone = false;
    if (v_mid > target) {
      lo = mid;
      v_lo = v_mid;
    } else {
      hi = mid;
      v_hi = v_mid;
      hi_phi = std::move(mid_phi);
      if (target - v_mid <= tolerance) break;
    }
  }
  out.lambda = hi;
  out.volume = v_hi;
  out.phi = std::move(hi_phi);
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double objective_value(ObjectiveMode mode, double J, double pn, double compliance) {
  switch (mode) {
    case ObjectiveMode::EffectiveEnergy: return J;
    case ObjectiveMode::PNorm: return pn;
    case ObjectiveMode::Compliance: return compliance;
  }
  return 0.0;
}

double mean_abs_design(const Mesh& mesh, std::span<const double> values) {
  double sum = 0.0, area = 0.0;
  for (std::size_t e = 0; e < values.size(); ++e) {
    if (!mesh.is_design(e)) continue;
    sum += mesh.geometry(e).area * std::abs(values[e]);
    area += mesh.geometry(e).area;
  }
  return area > 0.0 ? sum / area : 0.0;
}

// Ratio of mean objective sensitivity to mean stress sensitivity (adjoint plus
// explicit part) on the current design.
double relative_stress_scale(const ElasticSystem& system, const FieldVector& u, double J, const HistoryRow& row,
                             const Normalization& norm, const ProblemSpec& spec, const StressField& field,
                             const TensorA& A) {
  const Mesh& mesh = system.mesh();
  const FieldVector vJ = solve_adjoint(system, build_adjoint_rhs_effective_energy(
                                                  system, u, J, row.W, row.E, norm, spec.loads, field,
                                                  spec.stress, spec.objective, 0.0));
  const std::vector<double> dJ = element_topological_derivative(system, u, vJ, A);
  const FieldVector vs = solve_adjoint(system, -pnorm_gradient(system, u, field, spec.stress));
  std::vector<double> dS = element_topological_derivative(system, u, vs, A);
  const std::vector<double> explicit_term = stress_sensitivity_term(field, spec.stress, mesh);
  for (std::size_t e = 0; e < dS.size(); ++e) dS[e] += explicit_term[e];
  const double objective_scale = mean_abs_design(mesh, dJ);
  const double stress_scale = mean_abs_design(mesh, dS);
  if (!(objective_scale > 0.0) || !(stress_scale > 0.0)) return 1.0;
  return objective_scale / stress_scale;
}

}  // namespace

RunResult resume(const ProblemSpec& spec, OptimizerState state, const RunObserver& observer) {
  const Mesh mesh = build_problem_mesh(spec);
  if (state.phi.size() != mesh.num_nodes()) throw Error("level-set size does not match the mesh");
  for (double x : state.phi.values) {
    if (!std::isfinite(x)) throw Error("level set contains non-finite values");
  }
  const ReactionDiffusion rde(mesh, spec.rde);
  const TensorA A = tensor_A(spec.material);
  const double mirror = spec.mirror();
  const bool has_output = mesh.has_tag(BoundaryTag::Output);

  SensitivitySmoother smoother(spec.smoothing_weight);
  if (state.smoothed_stress) smoother.restore(*state.smoothed_stress);

  if (!spec.relative_mu || spec.mu == 0.0 || spec.mode != ObjectiveMode::EffectiveEnergy) {
    state.stress_scale = 1.0;
  }

  RunResult result;
  result.history = state.history;
  result.status = RunStatus::MaxIters;

  for (int iter = state.next_iter;; ++iter) {
    const auto t0 = Clock::now();
    const ElasticSystem system = assemble_system(mesh, state.phi, spec.material, spec.heaviside);
    const FieldVector u = solve_state(system, spec.loads);
    const StressField field = compute_stress_field(system, u, spec.stress);

    if (!state.normalization) {
      Normalization norm;
      norm.E_bar = port_abs_integral(mesh, BoundaryTag::Input, spec.loads.traction, u);
      norm.W_bar = has_output ? port_abs_integral(mesh, BoundaryTag::Output, spec.loads.output_direction, u) : 1.0;
      if (!(norm.E_bar > 0.0) || !(norm.W_bar > 0.0)) {
        throw Error("degenerate normalization: initial port displacement vanishes");
      }
      state.normalization = norm;
    }
    const Normalization& norm = *state.normalization;
    const PortDisplacements ports = evaluation_displacements(u, mesh, spec.loads, spec.port_measure, mirror);
    if (state.initial_U_i == 0.0) state.initial_U_i = ports.U_i;

    HistoryRow row;
    row.iter = iter;
    row.W = has_output ? compute_W(u, mesh, spec.loads, norm) : 0.0;
    row.E = compute_E(u, mesh, spec.loads, norm);
    const double J = spec.mode == ObjectiveMode::EffectiveEnergy ? compute_J(row.W, row.E, spec.objective) : 0.0;
    row.sigma_pn = pnorm_aggregate(field, spec.stress, mesh);
    row.objective = objective_value(spec.mode, J, row.sigma_pn, mean_compliance(u, mesh, spec.loads));
    row.volume = volume_fraction(mesh, system.element_density());
    row.max_stress_ratio = max_stress_ratio(field, mesh);
    row.U_o = ports.U_o;
    row.U_i = ports.U_i;
    row.max_von_mises = max_relaxed_von_mises(field, mesh);
    if (!std::isfinite(row.objective)) throw Error("objective became non-finite");

    if (input_connected_to_support(mesh, system.element_density(), spec.connectivity_threshold)) {
      state.disconnected_streak = 0;
    } else {
      ++state.disconnected_streak;
    }

    result.u = u;
    result.stress = field;
    result.phi = state.phi;

    auto finish = [&](RunStatus status, std::string message) {
      result.history.append(row);
      result.wall_time.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
      if (observer.on_iteration) observer.on_iteration(row);
      result.status = status;
      result.message = std::move(message);
    };

    if (std::abs(ports.U_i) > spec.degenerate_ratio * std::abs(state.initial_U_i)) {
      finish(RunStatus::Degenerate, "input displacement exceeded the degenerate threshold");
      break;
    }
    if (state.disconnected_streak >= spec.degenerate_patience) {
      finish(RunStatus::Degenerate, "input port disconnected from the support");
      break;
    }
    {
      RunHistory probe = result.history;
      probe.append(row);
      if (check_convergence(probe, spec.convergence.window, spec.convergence.tolerance, spec.volume_max,
                            spec.convergence.volume_tolerance)) {
        finish(RunStatus::Converged, "objective change below tolerance");
        break;
      }
    }
    if (iter + 1 >= spec.max_iters) {
      finish(RunStatus::MaxIters, "iteration limit reached");
      break;
    }

    if (!state.stress_scale) {
      state.stress_scale = relative_stress_scale(system, u, J, row, norm, spec, field, A);
    }
    // Weight of the stress terms in the topological derivative.
    double stress_weight = 0.0;
    if (spec.mode == ObjectiveMode::EffectiveEnergy) stress_weight = spec.mu * *state.stress_scale;
    if (spec.mode == ObjectiveMode::PNorm) stress_weight = 1.0;

    FieldVector rhs;
    switch (spec.mode) {
      case ObjectiveMode::EffectiveEnergy:
        rhs = build_adjoint_rhs_effective_energy(system, u, J, row.W, row.E, norm, spec.loads, field, spec.stress,
                                                 spec.objective, stress_weight);
        break;
      case ObjectiveMode::PNorm: rhs = build_adjoint_rhs_pnorm(system, u, field, spec.stress); break;
      case ObjectiveMode::Compliance: rhs = build_adjoint_rhs_compliance(system, spec.loads); break;
    }
    const FieldVector v = solve_adjoint(system, rhs);

    std::vector<double> stress_term;
    if (stress_weight > 0.0) stress_term = smoother.apply(stress_sensitivity_term(field, spec.stress, mesh));
    const std::vector<double> dtL = topological_derivative(system, u, v, 0.0, stress_weight, stress_term, A);
    std::vector<double> dtF(dtL.size());
    for (std::size_t i = 0; i < dtL.size(); ++i) dtF[i] = -dtL[i];

    const double target = spec.volume_step > 0.0 ? std::max(spec.volume_max, row.volume - spec.volume_step)
                                                 : spec.volume_max;
    MultiplierSearch search = bisect_volume_multiplier(rde, mesh, spec.heaviside, state.phi, dtF, target);
    if (!search.monotone) throw Error("trial volume is not monotone in the volume multiplier");
    const double ctilde = rde.normalization(dtF);
    row.lambda = ctilde > 0.0 ? search.lambda / ctilde : 0.0;

    result.dtL = dtL;
    result.stress_term = std::move(stress_term);
    state.phi = std::move(search.phi);
    finish(RunStatus::MaxIters, "");

    state.next_iter = iter + 1;
    state.history = result.history;
    state.smoothed_stress = smoother.previous();
    if (spec.checkpoint_every > 0 && observer.on_checkpoint && state.next_iter % spec.checkpoint_every == 0) {
      observer.on_checkpoint(state);
    }
  }
  result.state = std::move(state);
  return result;
}

RunResult run(const ProblemSpec& spec, const RunObserver& observer) {
  const Mesh mesh = build_problem_mesh(spec);
  OptimizerState state;
  state.phi = LevelSetField::initial(mesh);
  return resume(spec, std::move(state), observer);
}

std::vector<SweepRow> sweep(const std::vector<ProblemSpec>& grid, int jobs,
                            const std::function<void(std::size_t, const SweepRow&, const RunResult*)>& done) {
  std::vector<SweepRow> rows(grid.size());
  std::atomic<std::size_t> next{0};
  std::mutex report_mutex;

  auto work = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      const ProblemSpec& spec = grid[i];
      SweepRow& row = rows[i];
      row.condition = spec.name;
      row.alpha = spec.objective.alpha;
      row.beta = spec.objective.beta;
      row.mu = spec.mu;
      row.p = spec.stress.p;
      row.mode = std::string(to_string(spec.mode));
      try {
        RunResult r = run(spec);
        const HistoryRow& last = r.history.back();
        row.U_o = last.U_o;
        row.U_i = last.U_i;
        row.ratio = last.U_i != 0.0 ? last.U_o / last.U_i : 0.0;
        row.max_von_mises = last.max_von_mises;
        row.volume = last.volume;
        row.iterations = static_cast<int>(r.history.size());
        row.status = r.status;
        std::lock_guard lock(report_mutex);
        if (done) done(i, row, &r);
      } catch (const std::exception& e) {
        row.error = e.what();
        row.status = RunStatus::Degenerate;
        std::lock_guard lock(report_mutex);
        if (done) done(i, row, nullptr);
      }
    }
  };

  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(grid.size())));
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return rows;
}

}  // namespace lsmech
