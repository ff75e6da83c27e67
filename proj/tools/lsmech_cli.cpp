// Command-line front end: run, sweep, report, export.

#include <CLI11.hpp>
#include <Eigen/Core>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "lsmech/io.hpp"
#include "lsmech/optimizer.hpp"

namespace fs = std::filesystem;
using namespace lsmech;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitDegenerate = 2;

fs::path output_root() {
  const char* env = std::getenv("LSMECH_OUTPUT_ROOT");
  return env && *env ? fs::path(env) : fs::path("runs");
}

struct RunArtifacts {
  bool debug = false;
  int threads = 1;
  std::string command;
};

void write_run_artifacts(const fs::path& dir, const ProblemSpec& spec, const RunResult& result, double wall_time,
                         const RunArtifacts& opts) {
  fs::create_directories(dir);
  const Mesh mesh = build_problem_mesh(spec);
  write_text_file(dir / "config.txt", serialize_config(spec));
  write_history_csv(dir / "history.csv", result.history);
  VtkFields fields;
  fields.phi = &result.phi;
  fields.heaviside = &spec.heaviside;
  fields.u = &result.u;
  fields.stress = &result.stress;
  if (opts.debug) {
    fields.dtL = result.dtL;
    fields.stress_sens = result.stress_term;
  }
  write_vtk(dir / "final.vtk", mesh, fields);
  write_svg(dir / "final.svg", mesh, result.phi, spec.heaviside);
  save_checkpoint(dir / "checkpoint.json", spec, result.state);
  Manifest m;
  m.config_hash = config_hash(spec);
  m.command = opts.command;
  m.status = std::string(to_string(result.status));
  m.iterations = static_cast<int>(result.history.size());
  m.wall_time = wall_time;
  m.threads = opts.threads;
  m.message = result.message;
  write_manifest(dir / "manifest.json", m);
}

int exit_code(RunStatus status) { return status == RunStatus::Degenerate ? kExitDegenerate : kExitOk; }

// "alpha:beta=1:0,1:0.5,mu=0,0.1" -> groups of zipped keys with their values.
struct GridGroup {
  std::vector<std::string> keys;
  std::vector<std::vector<std::string>> values;  // one tuple per grid point
};

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::vector<GridGroup> parse_grid(const std::string& text) {
  std::vector<GridGroup> groups;
  for (const std::string& token : split_on(text, ',')) {
    if (token.empty()) throw Error("malformed grid: empty value in '" + text + "'");
    std::string values = token;
    if (const auto eq = token.find('='); eq != std::string::npos) {
      GridGroup g;
      g.keys = split_on(token.substr(0, eq), ':');
      for (const auto& k : g.keys) {
        if (k.empty()) throw Error("malformed grid: empty key in '" + token + "'");
      }
      groups.push_back(std::move(g));
      values = token.substr(eq + 1);
    }
    if (groups.empty()) throw Error("malformed grid: values before any key in '" + text + "'");
    auto tuple = split_on(values, ':');
    if (tuple.size() != groups.back().keys.size()) {
      throw Error("malformed grid: '" + values + "' does not match keys of its group");
    }
    for (const auto& v : tuple) {
      if (v.empty()) throw Error("malformed grid: empty value in '" + token + "'");
    }
    groups.back().values.push_back(std::move(tuple));
  }
  if (groups.empty()) throw Error("empty grid");
  std::map<std::string, int> seen;
  for (const auto& g : groups) {
    if (g.values.empty()) throw Error("malformed grid: key group without values");
    for (const auto& k : g.keys) {
      if (seen[k]++) throw Error("grid key '" + k + "' appears twice");
      if (k == "mode") throw Error("grid key 'mode' is not supported; use separate sweeps");
    }
  }
  return groups;
}

// Condition labels a, b, ..., z, aa, ab, ...
std::string condition_label(std::size_t index) {
  std::string label;
  std::size_t n = index + 1;
  while (n > 0) {
    --n;
    label.insert(label.begin(), static_cast<char>('a' + n % 26));
    n /= 26;
  }
  return label;
}

// Replaces (or appends) `key = value` in a serialized configuration.
std::string override_key(const std::string& config, const std::string& key, const std::string& value) {
  std::ostringstream out;
  std::istringstream in(config);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) {
      std::string k = line.substr(0, eq);
      k.erase(k.find_last_not_of(" \t") + 1);
      if (k == key) continue;
    }
    out << line << '\n';
  }
  out << key << " = " << value << '\n';
  return out.str();
}

std::vector<ProblemSpec> expand_grid(const ProblemSpec& base, const std::vector<GridGroup>& groups) {
  std::vector<ProblemSpec> out;
  std::vector<std::size_t> index(groups.size(), 0);
  const std::string base_text = serialize_config(base);
  while (true) {
    std::string text = base_text;
    const std::string label = condition_label(out.size());
    text = override_key(text, "name", label);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      for (std::size_t k = 0; k < groups[g].keys.size(); ++k) {
        if (groups[g].keys[k] == "name") throw Error("grid key 'name' is reserved");
        text = override_key(text, groups[g].keys[k], groups[g].values[index[g]][k]);
      }
    }
    out.push_back(parse_config_text(text, "grid point " + label));
    std::size_t g = groups.size();
    while (g > 0) {
      --g;
      if (++index[g] < groups[g].values.size()) break;
      index[g] = 0;
      if (g == 0) return out;
    }
    if (groups.empty()) return out;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Level-set topology optimization of compliant mechanisms"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 1;
  app.add_option("--threads", threads, "Worker threads (sweep concurrency and solver threads)")
      ->check(CLI::PositiveNumber);
  std::string command_line;
  for (int i = 0; i < argc; ++i) command_line += (i ? " " : "") + std::string(argv[i]);

  auto* run_cmd = app.add_subcommand("run", "Run one optimization");
  std::string run_config, run_out, run_resume;
  bool run_debug = false, run_quiet = false;
  run_cmd->add_option("config", run_config, "Configuration file")->required();
  run_cmd->add_option("--out", run_out, "Output directory (default: $LSMECH_OUTPUT_ROOT/<name>-<hash>)");
  run_cmd->add_option("--resume", run_resume, "Checkpoint to continue from");
  run_cmd->add_flag("--debug", run_debug, "Write sensitivity fields to the VTK output");
  run_cmd->add_flag("--quiet", run_quiet, "Suppress per-iteration progress");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter grid");
  std::string sweep_config, sweep_grid, sweep_out;
  sweep_cmd->add_option("config", sweep_config, "Base configuration file")->required();
  sweep_cmd->add_option("--grid", sweep_grid, "Grid, e.g. alpha:beta=1:0,1:1,mu=0,0.3")->required();
  sweep_cmd->add_option("--out", sweep_out, "Sweep directory (default: $LSMECH_OUTPUT_ROOT/sweep-<hash>)");

  auto* report_cmd = app.add_subcommand("report", "Summarize a sweep directory");
  std::string report_dir;
  report_cmd->add_option("sweep_dir", report_dir, "Sweep directory")->required();

  auto* export_cmd = app.add_subcommand("export", "Export a checkpoint as VTK or SVG");
  std::string export_ckpt, export_format = "vtk", export_out;
  export_cmd->add_option("checkpoint", export_ckpt, "Checkpoint file")->required();
  export_cmd->add_option("--format", export_format, "vtk or svg")->check(CLI::IsMember({"vtk", "svg"}));
  export_cmd->add_option("-o,--output", export_out, "Output file (default: next to the checkpoint)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }
  Eigen::setNbThreads(threads);

  try {
    if (*run_cmd) {
      ProblemSpec spec = parse_config(run_config);
      std::optional<OptimizerState> state;
      if (!run_resume.empty()) {
        Checkpoint c = load_checkpoint(run_resume);
        if (config_hash(c.spec) != config_hash(spec)) {
          throw Error("checkpoint was written for a different configuration");
        }
        state = std::move(c.state);
      }
      const fs::path dir = run_out.empty()
                               ? output_root() / (fs::path(run_config).stem().string() + "-" + config_hash(spec).substr(0, 8))
                               : fs::path(run_out);
      fs::create_directories(dir / "checkpoints");
      RunObserver obs;
      if (!run_quiet) {
        obs.on_iteration = [](const HistoryRow& r) {
          std::cerr << "iter " << r.iter << "  obj " << format_double(r.objective) << "  vol "
                    << format_double(r.volume) << "  U_o " << format_double(r.U_o) << "  U_i "
                    << format_double(r.U_i) << '\n';
        };
      }
      obs.on_checkpoint = [&](const OptimizerState& s) {
        char name[32];
        std::snprintf(name, sizeof(name), "ckpt_%05d.json", s.next_iter);
        save_checkpoint(dir / "checkpoints" / name, spec, s);
      };
      const auto t0 = std::chrono::steady_clock::now();
      const RunResult result = state ? resume(spec, std::move(*state), obs) : run(spec, obs);
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      write_run_artifacts(dir, spec, result, wall, {run_debug, threads, command_line});
      std::cout << to_string(result.status) << " after " << result.history.size() << " iterations: "
                << result.message << "\nartifacts: " << dir.string() << '\n';
      return exit_code(result.status);
    }

    if (*sweep_cmd) {
      const ProblemSpec base = parse_config(sweep_config);
      const std::vector<ProblemSpec> grid = expand_grid(base, parse_grid(sweep_grid));
      const fs::path dir = sweep_out.empty()
                               ? output_root() / ("sweep-" + config_hash(base).substr(0, 8))
                               : fs::path(sweep_out);
      fs::create_directories(dir);
      const auto t0 = std::chrono::steady_clock::now();
      auto done = [&](std::size_t i, const SweepRow& row, const RunResult* result) {
        const fs::path child = dir / grid[i].name;
        fs::create_directories(child);
        if (result) {
          double wall = 0.0;
          for (double w : result->wall_time) wall += w;
          write_run_artifacts(child, grid[i], *result, wall, {false, 1, command_line});
        } else {
          write_text_file(child / "config.txt", serialize_config(grid[i]));
          write_text_file(child / "error.txt", row.error + "\n");
        }
        std::cerr << "condition " << row.condition << ": " << sweep_status(row) << '\n';
      };
      const std::vector<SweepRow> rows = sweep(grid, threads, done);
      write_sweep_csv(dir / "sweep.csv", rows);
      Manifest m;
      m.config_hash = config_hash(base);
      m.command = command_line;
      m.status = "complete";
      m.iterations = static_cast<int>(rows.size());
      m.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      m.threads = threads;
      m.message = std::to_string(rows.size()) + " conditions";
      write_manifest(dir / "manifest.json", m);
      std::cout << "sweep of " << rows.size() << " conditions written to " << dir.string() << '\n';
      for (const auto& r : rows) {
        if (!r.error.empty()) return kExitError;
      }
      return kExitOk;
    }

    if (*report_cmd) {
      const fs::path csv = fs::path(report_dir) / "sweep.csv";
      if (!fs::is_regular_file(csv)) throw Error("no sweep.csv in '" + report_dir + "'");
      const std::string table = sweep_report(read_sweep_csv(csv));
      write_text_file(fs::path(report_dir) / "report.md", table);
      std::cout << table;
      return kExitOk;
    }

    if (*export_cmd) {
      const Checkpoint c = load_checkpoint(export_ckpt);
      const Mesh mesh = build_problem_mesh(c.spec);
      if (c.state.phi.size() != mesh.num_nodes()) throw Error("checkpoint level set does not match its mesh");
      fs::path out = export_out.empty() ? fs::path(export_ckpt).replace_extension(export_format) : fs::path(export_out);
      if (export_format == "svg") {
        write_svg(out, mesh, c.state.phi, c.spec.heaviside);
      } else {
        const ElasticSystem system = assemble_system(mesh, c.state.phi, c.spec.material, c.spec.heaviside);
        const FieldVector u = solve_state(system, c.spec.loads);
        const StressField field = compute_stress_field(system, u, c.spec.stress);
        VtkFields fields;
        fields.phi = &c.state.phi;
        fields.heaviside = &c.spec.heaviside;
        fields.u = &u;
        fields.stress = &field;
        write_vtk(out, mesh, fields);
      }
      std::cout << "wrote " << out.string() << '\n';
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
