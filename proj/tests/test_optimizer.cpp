#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "lsmech/error.hpp"
#include "lsmech/io.hpp"
#include "lsmech/optimizer.hpp"

using namespace lsmech;

namespace {

RunHistory history_of(std::initializer_list<std::pair<double, double>> objective_volume) {
  RunHistory h;
  int i = 0;
  for (const auto& [obj, vol] : objective_volume) {
    HistoryRow r;
    r.iter = i++;
    r.objective = obj;
    r.volume = vol;
    h.append(r);
  }
  return h;
}

ProblemSpec small_inverter() {
  ProblemSpec spec = inverter_problem(50);
  spec.max_iters = 30;
  return spec;
}

}  // namespace

TEST_CASE("convergence check") {
  CHECK_FALSE(check_convergence(history_of({{1, 0.3}, {1, 0.3}}), 5, 1e-3, 0.3, 0.005));
  CHECK(check_convergence(history_of({{2, 0.5}, {1, 0.3}, {1, 0.3}, {1.0005, 0.3}, {1, 0.3}, {1, 0.3}}), 5,
                          1e-3, 0.3, 0.005));
  CHECK_FALSE(check_convergence(history_of({{1, 0.3}, {1, 0.3}, {1.01, 0.3}, {1, 0.3}, {1, 0.3}}), 5, 1e-3,
                                0.3, 0.005));
  // Stationary but infeasible.
  CHECK_FALSE(check_convergence(history_of({{1, 0.4}, {1, 0.4}, {1, 0.4}, {1, 0.4}, {1, 0.4}}), 5, 1e-3,
                                0.3, 0.005));
}

TEST_CASE("history rows must be consecutive") {
  RunHistory h;
  HistoryRow r;
  r.iter = 0;
  h.append(r);
  r.iter = 2;
  CHECK_THROWS_AS(h.append(r), Error);
}

TEST_CASE("volume multiplier bisection") {
  const Mesh m = test::mechanism_mesh(20, 10);
  const ReactionDiffusion rde(m, RdeParams{});
  const HeavisideParams h;
  const LevelSetField phi = LevelSetField::initial(m, 1.0);
  std::vector<double> dtF(m.num_nodes());
  for (std::size_t i = 0; i < dtF.size(); ++i) dtF[i] = std::sin(7.0 * m.node(i).x) + m.node(i).y;

  SUBCASE("target already met needs no offset") {
    const MultiplierSearch s = bisect_volume_multiplier(rde, m, h, phi, dtF, 1.0);
    CHECK(s.lambda == 0.0);
    CHECK(s.evaluations == 1);
  }
  SUBCASE("lower target is reached") {
    const MultiplierSearch s = bisect_volume_multiplier(rde, m, h, phi, dtF, 0.8);
    CHECK(s.lambda > 0.0);
    CHECK(s.volume <= 0.8 + 1e-9);
    CHECK(s.volume >= 0.8 - 1e-3);
    CHECK(s.monotone);
    CHECK(volume_fraction(m, s.phi, h) == doctest::Approx(s.volume));
  }
}

TEST_CASE("problem presets") {
  const ProblemSpec inv = inverter_problem(40);
  CHECK(inv.mirror() == 2.0);
  const Mesh m = build_problem_mesh(inv);
  CHECK(m.num_elements() == 2u * 40 * 20);
  CHECK(m.has_tag(BoundaryTag::Output));
  const ProblemSpec lb = lbeam_problem(20);
  CHECK(lb.mirror() == 1.0);
  CHECK(lb.volume_max == 0.6);
  CHECK(lb.mode == ObjectiveMode::PNorm);
  ProblemSpec no_output = inv;
  no_output.ports.erase(no_output.ports.begin() + 2);
  CHECK_THROWS_AS(build_problem_mesh(no_output), Error);
  CHECK(parse_objective_mode("compliance") == ObjectiveMode::Compliance);
  CHECK_THROWS_AS(parse_objective_mode("stiffness"), Error);
}

TEST_CASE("full-volume compliance run keeps all material") {
  ProblemSpec spec = lbeam_problem(50);
  spec.mode = ObjectiveMode::Compliance;
  spec.volume_max = 1.0;
  spec.max_iters = 15;
  const RunResult r = run(spec);
  for (const auto& row : r.history.rows()) CHECK(row.volume == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.status == RunStatus::Converged);
}

TEST_CASE("volume decreases toward the limit") {
  const RunResult r = run(small_inverter());
  REQUIRE(r.history.size() > 10);
  CHECK(r.history.rows().front().volume == doctest::Approx(1.0));
  for (std::size_t i = 1; i < r.history.size(); ++i) {
    const double prev = r.history.rows()[i - 1].volume;
    const double target = std::max(0.3, prev - 0.02);
    CHECK(r.history.rows()[i].volume <= target + 2e-3);
  }
}

TEST_CASE("resume reproduces an uninterrupted run") {
  ProblemSpec spec = small_inverter();
  spec.mu = 0.3;
  spec.checkpoint_every = 10;
  std::optional<OptimizerState> saved;
  RunObserver obs;
  obs.on_checkpoint = [&](const OptimizerState& s) {
    if (s.next_iter == 20) saved = s;
  };
  const RunResult full = run(spec, obs);
  REQUIRE(saved.has_value());
  const RunResult resumed = resume(spec, *saved);
  CHECK(history_csv(resumed.history) == history_csv(full.history));
  CHECK(resumed.status == full.status);
}

TEST_CASE("runs are deterministic") {
  const ProblemSpec spec = small_inverter();
  CHECK(history_csv(run(spec).history) == history_csv(run(spec).history));
}

TEST_CASE("sweep collects rows and errors") {
  ProblemSpec ok = small_inverter();
  ok.max_iters = 5;
  ProblemSpec bad = ok;
  bad.material.poisson_ratio = 0.7;
  std::size_t calls = 0;
  const auto rows = sweep({ok, bad, ok}, 2, [&](std::size_t, const SweepRow&, const RunResult*) { ++calls; });
  REQUIRE(rows.size() == 3);
  CHECK(calls == 3);
  CHECK(rows[0].error.empty());
  CHECK_FALSE(rows[1].error.empty());
  CHECK(rows[0].iterations == rows[2].iterations);
  CHECK(rows[0].U_o == rows[2].U_o);
}
