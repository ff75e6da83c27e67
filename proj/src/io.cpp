#include "lsmech/io.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

namespace lsmech {

namespace fs = std::filesystem;
using nlohmann::json;

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : Error(line > 0 ? source + ":" + std::to_string(line) + ": " + message : source + ": " + message),
      line_(line) {}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string config_hash(const ProblemSpec& spec) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(serialize_config(spec))));
  return buf;
}

void write_text_file(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(std::string_view text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw Error("expected a finite number, got '" + std::string(text) + "'");
  }
  return v;
}

int to_int(std::string_view text) {
  int v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error("expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

bool to_bool(std::string_view text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw Error("expected true or false, got '" + std::string(text) + "'");
}

std::vector<double> to_doubles(std::string_view text, std::size_t count) {
  const auto parts = split(text, ',');
  if (parts.size() != count) {
    throw Error("expected " + std::to_string(count) + " comma-separated numbers, got '" + std::string(text) + "'");
  }
  std::vector<double> out;
  for (auto p : parts) out.push_back(to_double(p));
  return out;
}

Vec2 to_vec2(std::string_view text) {
  const auto v = to_doubles(text, 2);
  return {v[0], v[1]};
}

Box to_box(std::string_view text) {
  const auto v = to_doubles(text, 4);
  return {v[0], v[1], v[2], v[3]};
}

Port to_port(std::string_view text) {
  const auto parts = split(text, ',');
  if (parts.size() != 4) throw Error("port expects side,start,end,tag, got '" + std::string(text) + "'");
  Port p;
  p.side = parse_side(parts[0]);
  p.start = to_double(parts[1]);
  p.end = to_double(parts[2]);
  p.tag = parse_tag(parts[3]);
  if (!(p.start >= 0.0 && p.end <= 1.0 && p.start < p.end)) {
    throw Error("port interval must satisfy 0 <= start < end <= 1");
  }
  return p;
}

std::string_view to_string(VmConvention c) {
  return c == VmConvention::Conventional ? "conventional" : "paper_literal";
}
VmConvention to_convention(std::string_view text) {
  if (text == "conventional") return VmConvention::Conventional;
  if (text == "paper_literal") return VmConvention::PaperLiteral;
  throw Error("vm_convention must be conventional or paper_literal");
}
std::string_view to_string(PortMeasure m) { return m == PortMeasure::Mean ? "mean" : "integral"; }
PortMeasure to_measure(std::string_view text) {
  if (text == "mean") return PortMeasure::Mean;
  if (text == "integral") return PortMeasure::Integral;
  throw Error("port_measure must be mean or integral");
}
std::string_view to_string(NegativeNumerator n) { return n == NegativeNumerator::Product ? "product" : "ratio"; }
NegativeNumerator to_negative_numerator(std::string_view text) {
  if (text == "product") return NegativeNumerator::Product;
  if (text == "ratio") return NegativeNumerator::Ratio;
  throw Error("negative_numerator must be product or ratio");
}

ProblemSpec preset(std::string_view mode) {
  if (mode == "inverter") return inverter_problem(400);
  if (mode == "magnifier") return magnifier_problem(200);
  if (mode == "lbeam") return lbeam_problem(200);
  throw Error("unknown mode '" + std::string(mode) + "' (inverter|magnifier|lbeam)");
}

void validate_problem_scalars(const ProblemSpec& s) {
  if (!(s.volume_max > 0.0 && s.volume_max <= 1.0)) throw Error("volume_max must lie in (0, 1]");
  if (!(s.volume_step >= 0.0 && s.volume_step <= 1.0)) throw Error("volume_step must lie in [0, 1]");
  if (!(s.mu >= 0.0)) throw Error("mu must be >= 0");
  if (!(s.smoothing_weight >= 0.0 && s.smoothing_weight < 1.0)) throw Error("smoothing_weight must lie in [0, 1)");
  if (s.max_iters < 1) throw Error("max_iters must be >= 1");
  if (s.convergence.window < 2) throw Error("convergence_window must be >= 2");
  if (!(s.convergence.tolerance > 0.0)) throw Error("convergence_tol must be > 0");
  if (!(s.convergence.volume_tolerance >= 0.0)) throw Error("volume_tol must be >= 0");
  if (!(s.degenerate_ratio > 1.0)) throw Error("degenerate_ratio must be > 1");
  if (s.degenerate_patience < 1) throw Error("degenerate_patience must be >= 1");
  if (!(s.connectivity_threshold > 0.0 && s.connectivity_threshold <= 1.0)) {
    throw Error("connectivity_threshold must lie in (0, 1]");
  }
  if (s.checkpoint_every < 0) throw Error("checkpoint_every must be >= 0");
}

using Setter = std::function<void(ProblemSpec&, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> t;
    auto num = [&](const char* key, auto member_of) {
      t[key] = [member_of](ProblemSpec& s, std::string_view v) { member_of(s) = to_double(v); };
    };
    auto integer = [&](const char* key, auto member_of) {
      t[key] = [member_of](ProblemSpec& s, std::string_view v) { member_of(s) = to_int(v); };
    };
    t["name"] = [](ProblemSpec& s, std::string_view v) {
      if (v.find_first_of(", \t") != std::string_view::npos) throw Error("name must not contain commas or spaces");
      s.name = std::string(v);
    };
    t["objective"] = [](ProblemSpec& s, std::string_view v) { s.mode = parse_objective_mode(v); };
    num("length", [](ProblemSpec& s) -> double& { return s.domain.length; });
    num("width_frac", [](ProblemSpec& s) -> double& { return s.domain.width_frac; });
    num("height_frac", [](ProblemSpec& s) -> double& { return s.domain.height_frac; });
    integer("divisions_x", [](ProblemSpec& s) -> int& { return s.domain.divisions_x; });
    integer("divisions_y", [](ProblemSpec& s) -> int& { return s.domain.divisions_y; });
    num("youngs_modulus", [](ProblemSpec& s) -> double& { return s.material.youngs_modulus; });
    num("poisson_ratio", [](ProblemSpec& s) -> double& { return s.material.poisson_ratio; });
    t["traction"] = [](ProblemSpec& s, std::string_view v) { s.loads.traction = to_vec2(v); };
    t["output_direction"] = [](ProblemSpec& s, std::string_view v) { s.loads.output_direction = to_vec2(v); };
    num("alpha", [](ProblemSpec& s) -> double& { return s.objective.alpha; });
    num("beta", [](ProblemSpec& s) -> double& { return s.objective.beta; });
    t["negative_numerator"] = [](ProblemSpec& s, std::string_view v) {
      s.objective.negative_numerator = to_negative_numerator(v);
    };
    num("sigma_max", [](ProblemSpec& s) -> double& { return s.stress.sigma_max; });
    num("p", [](ProblemSpec& s) -> double& { return s.stress.p; });
    t["vm_convention"] = [](ProblemSpec& s, std::string_view v) { s.stress.convention = to_convention(v); };
    num("heaviside_w", [](ProblemSpec& s) -> double& { return s.heaviside.w; });
    num("heaviside_d", [](ProblemSpec& s) -> double& { return s.heaviside.d; });
    num("K", [](ProblemSpec& s) -> double& { return s.rde.K; });
    num("C", [](ProblemSpec& s) -> double& { return s.rde.C; });
    num("tau", [](ProblemSpec& s) -> double& { return s.rde.tau; });
    num("dt", [](ProblemSpec& s) -> double& { return s.rde.dt; });
    integer("substeps", [](ProblemSpec& s) -> int& { return s.rde.substeps; });
    t["port_measure"] = [](ProblemSpec& s, std::string_view v) { s.port_measure = to_measure(v); };
    num("volume_max", [](ProblemSpec& s) -> double& { return s.volume_max; });
    num("volume_step", [](ProblemSpec& s) -> double& { return s.volume_step; });
    num("mu", [](ProblemSpec& s) -> double& { return s.mu; });
    t["relative_mu"] = [](ProblemSpec& s, std::string_view v) { s.relative_mu = to_bool(v); };
    num("smoothing_weight", [](ProblemSpec& s) -> double& { return s.smoothing_weight; });
    integer("max_iters", [](ProblemSpec& s) -> int& { return s.max_iters; });
    integer("convergence_window", [](ProblemSpec& s) -> int& { return s.convergence.window; });
    num("convergence_tol", [](ProblemSpec& s) -> double& { return s.convergence.tolerance; });
    num("volume_tol", [](ProblemSpec& s) -> double& { return s.convergence.volume_tolerance; });
    num("degenerate_ratio", [](ProblemSpec& s) -> double& { return s.degenerate_ratio; });
    integer("degenerate_patience", [](ProblemSpec& s) -> int& { return s.degenerate_patience; });
    num("connectivity_threshold", [](ProblemSpec& s) -> double& { return s.connectivity_threshold; });
    integer("checkpoint_every", [](ProblemSpec& s) -> int& { return s.checkpoint_every; });
    return t;
  }();
  return table;
}

enum class Group { Domain, Material, Loads, Objective, Stress, Heaviside, Rde, Problem };

Group group_of(std::string_view key) {
  static const std::map<std::string, Group, std::less<>> groups = {
      {"length", Group::Domain},           {"width_frac", Group::Domain},       {"height_frac", Group::Domain},
      {"divisions_x", Group::Domain},      {"divisions_y", Group::Domain},      {"element_size", Group::Domain},
      {"void_box", Group::Domain},         {"solid_box", Group::Domain},        {"port", Group::Problem},
      {"youngs_modulus", Group::Material}, {"poisson_ratio", Group::Material},  {"traction", Group::Loads},
      {"output_direction", Group::Loads},  {"alpha", Group::Objective},         {"beta", Group::Objective},
      {"negative_numerator", Group::Objective}, {"sigma_max", Group::Stress},   {"p", Group::Stress},
      {"vm_convention", Group::Stress},    {"heaviside_w", Group::Heaviside},   {"heaviside_d", Group::Heaviside},
      {"K", Group::Rde},                   {"C", Group::Rde},                   {"tau", Group::Rde},
      {"dt", Group::Rde},                  {"substeps", Group::Rde}};
  const auto it = groups.find(key);
  return it == groups.end() ? Group::Problem : it->second;
}

void validate_group(const ProblemSpec& s, Group g) {
  switch (g) {
    case Group::Domain: s.domain.validate(); break;
    case Group::Material: s.material.validate(); break;
    case Group::Loads: s.loads.validate(); break;
    case Group::Objective: s.objective.validate(); break;
    case Group::Stress: s.stress.validate(); break;
    case Group::Heaviside: s.heaviside.validate(); break;
    case Group::Rde: s.rde.validate(); break;
    case Group::Problem: validate_problem_scalars(s); break;
  }
}

struct Entry {
  int line;
  std::string key;
  std::string value;
};

}  // namespace

ProblemSpec parse_config_text(std::string_view text, const std::string& source) {
  std::vector<Entry> entries;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(source, line_no, "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(source, line_no, "missing key");
    if (value.empty()) throw ConfigError(source, line_no, "missing value for '" + std::string(key) + "'");
    entries.push_back({line_no, std::string(key), std::string(value)});
  }

  static const std::set<std::string, std::less<>> list_keys = {"port", "void_box", "solid_box"};
  std::set<std::string, std::less<>> seen;
  for (const Entry& e : entries) {
    const bool known = e.key == "mode" || e.key == "element_size" || list_keys.count(e.key) || setters().count(e.key);
    if (!known) throw ConfigError(source, e.line, "unknown key '" + e.key + "'");
    if (!list_keys.count(e.key) && !seen.insert(e.key).second) {
      throw ConfigError(source, e.line, "duplicate key '" + e.key + "'");
    }
  }

  ProblemSpec spec;
  try {
    spec = preset("inverter");
  } catch (const Error& err) {
    throw ConfigError(source, 0, err.what());
  }
  for (const Entry& e : entries) {
    if (e.key != "mode") continue;
    try {
      spec = preset(e.value);
    } catch (const Error& err) {
      throw ConfigError(source, e.line, err.what());
    }
  }

  std::set<std::string> replaced_lists;
  std::optional<Entry> element_size;
  bool divisions_given = false;
  for (const Entry& e : entries) {
    if (e.key == "mode") continue;
    try {
      if (e.key == "element_size") {
        element_size = e;
        continue;
      }
      if (e.key == "divisions_x" || e.key == "divisions_y") divisions_given = true;
      if (list_keys.count(e.key)) {
        if (replaced_lists.insert(e.key).second) {
          if (e.key == "port") spec.ports.clear();
          if (e.key == "void_box") spec.domain.void_boxes.clear();
          if (e.key == "solid_box") spec.domain.solid_boxes.clear();
        }
        if (e.key == "port") spec.ports.push_back(to_port(e.value));
        if (e.key == "void_box") spec.domain.void_boxes.push_back(to_box(e.value));
        if (e.key == "solid_box") spec.domain.solid_boxes.push_back(to_box(e.value));
        continue;
      }
      setters().find(e.key)->second(spec, e.value);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& err) {
      throw ConfigError(source, e.line, err.what());
    }
  }
  if (element_size) {
    try {
      if (divisions_given) throw Error("element_size conflicts with divisions_x/divisions_y");
      const double h = to_double(element_size->value);
      if (!(h > 0.0)) throw Error("element_size must be > 0");
      const double nx = std::round(spec.domain.width() / h);
      const double ny = std::round(spec.domain.height() / h);
      if (nx < 2 || ny < 2 || nx > 1e5 || ny > 1e5) throw Error("element_size gives an unusable mesh");
      spec.domain.divisions_x = static_cast<int>(nx);
      spec.domain.divisions_y = static_cast<int>(ny);
    } catch (const Error& err) {
      throw ConfigError(source, element_size->line, err.what());
    }
  }
  // Group checks run once all keys are applied, so cross-key constraints do
  // not depend on line order; failures cite the group's last line.
  std::map<Group, int> last_line;
  for (const Entry& e : entries) {
    if (e.key != "mode" && e.key != "name" && e.key != "objective") last_line[group_of(e.key)] = e.line;
  }
  for (Group g : {Group::Domain, Group::Material, Group::Loads, Group::Objective, Group::Stress, Group::Heaviside,
                  Group::Rde, Group::Problem}) {
    try {
      validate_group(spec, g);
    } catch (const Error& err) {
      const auto it = last_line.find(g);
      throw ConfigError(source, it == last_line.end() ? 0 : it->second, err.what());
    }
  }
  try {
    spec.validate();
  } catch (const Error& err) {
    throw ConfigError(source, 0, err.what());
  }
  return spec;
}

ProblemSpec parse_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw Error("config file '" + path.string() + "' not found");
  return parse_config_text(read_text_file(path), path.string());
}

std::string serialize_config(const ProblemSpec& s) {
  std::ostringstream o;
  auto kv = [&](std::string_view key, const std::string& value) { o << key << " = " << value << '\n'; };
  auto num = [&](std::string_view key, double v) { kv(key, format_double(v)); };
  auto vec = [&](std::string_view key, const Vec2& v) { kv(key, format_double(v.x) + "," + format_double(v.y)); };
  auto box = [&](std::string_view key, const Box& b) {
    kv(key, format_double(b.x0) + "," + format_double(b.y0) + "," + format_double(b.x1) + "," + format_double(b.y1));
  };
  o << "# lsmech problem configuration\n";
  kv("name", s.name);
  kv("objective", std::string(to_string(s.mode)));
  o << "\n# domain\n";
  num("length", s.domain.length);
  num("width_frac", s.domain.width_frac);
  num("height_frac", s.domain.height_frac);
  kv("divisions_x", std::to_string(s.domain.divisions_x));
  kv("divisions_y", std::to_string(s.domain.divisions_y));
  for (const Box& b : s.domain.void_boxes) box("void_box", b);
  for (const Box& b : s.domain.solid_boxes) box("solid_box", b);
  for (const Port& p : s.ports) {
    kv("port", std::string(to_string(p.side)) + "," + format_double(p.start) + "," + format_double(p.end) + "," +
                   std::string(to_string(p.tag)));
  }
  o << "\n# material and loads\n";
  num("youngs_modulus", s.material.youngs_modulus);
  num("poisson_ratio", s.material.poisson_ratio);
  vec("traction", s.loads.traction);
  vec("output_direction", s.loads.output_direction);
  o << "\n# objective and stress\n";
  num("alpha", s.objective.alpha);
  num("beta", s.objective.beta);
  kv("negative_numerator", std::string(to_string(s.objective.negative_numerator)));
  num("mu", s.mu);
  kv("relative_mu", s.relative_mu ? "true" : "false");
  num("sigma_max", s.stress.sigma_max);
  num("p", s.stress.p);
  kv("vm_convention", std::string(to_string(s.stress.convention)));
  kv("port_measure", std::string(to_string(s.port_measure)));
  o << "\n# level set\n";
  num("heaviside_w", s.heaviside.w);
  num("heaviside_d", s.heaviside.d);
  num("K", s.rde.K);
  num("C", s.rde.C);
  num("tau", s.rde.tau);
  num("dt", s.rde.dt);
  kv("substeps", std::to_string(s.rde.substeps));
  o << "\n# optimizer\n";
  num("volume_max", s.volume_max);
  num("volume_step", s.volume_step);
  num("smoothing_weight", s.smoothing_weight);
  kv("max_iters", std::to_string(s.max_iters));
  kv("convergence_window", std::to_string(s.convergence.window));
  num("convergence_tol", s.convergence.tolerance);
  num("volume_tol", s.convergence.volume_tolerance);
  num("degenerate_ratio", s.degenerate_ratio);
  kv("degenerate_patience", std::to_string(s.degenerate_patience));
  num("connectivity_threshold", s.connectivity_threshold);
  kv("checkpoint_every", std::to_string(s.checkpoint_every));
  return o.str();
}

// ---------------------------------------------------------------------------
// Artifacts

void write_vtk(const fs::path& path, const Mesh& mesh, const VtkFields& f) {
  const std::size_t nn = mesh.num_nodes();
  const std::size_t ne = mesh.num_elements();
  if (f.phi && f.phi->size() != nn) throw Error("vtk: level-set size mismatch");
  if (f.u && static_cast<std::size_t>(f.u->size()) != 2 * nn) throw Error("vtk: displacement size mismatch");
  if (f.stress && f.stress->von_mises.size() != ne) throw Error("vtk: stress size mismatch");
  if (!f.dtL.empty() && f.dtL.size() != nn) throw Error("vtk: dtL size mismatch");
  if (!f.stress_sens.empty() && f.stress_sens.size() != ne) throw Error("vtk: stress_sens size mismatch");

  std::ostringstream o;
  o << "# vtk DataFile Version 3.0\nlsmech level-set design\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  o << "POINTS " << nn << " double\n";
  for (const Vec2& p : mesh.nodes()) o << format_double(p.x) << ' ' << format_double(p.y) << " 0\n";
  o << "CELLS " << ne << ' ' << 4 * ne << '\n';
  for (const auto& t : mesh.triangles()) o << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  o << "CELL_TYPES " << ne << '\n';
  for (std::size_t e = 0; e < ne; ++e) o << "5\n";

  auto scalars = [&](std::string_view name, std::size_t n, auto value) {
    o << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (std::size_t i = 0; i < n; ++i) o << format_double(value(i)) << '\n';
  };
  o << "POINT_DATA " << nn << '\n';
  if (f.phi) {
    scalars("phi", nn, [&](std::size_t i) { return f.phi->values[i]; });
    if (f.heaviside) scalars("density", nn, [&](std::size_t i) { return heaviside(f.phi->values[i], *f.heaviside); });
  }
  if (f.u) {
    scalars("u", nn, [&](std::size_t i) { return (*f.u)[static_cast<Eigen::Index>(2 * i)]; });
    scalars("v", nn, [&](std::size_t i) { return (*f.u)[static_cast<Eigen::Index>(2 * i + 1)]; });
  }
  if (!f.dtL.empty()) scalars("dtL", nn, [&](std::size_t i) { return f.dtL[i]; });
  o << "CELL_DATA " << ne << '\n';
  if (f.stress) {
    scalars("von_mises", ne, [&](std::size_t e) { return mesh.is_design(e) ? f.stress->von_mises[e] : 0.0; });
    scalars("relaxed_von_mises", ne, [&](std::size_t e) { return mesh.is_design(e) ? f.stress->relaxed[e] : 0.0; });
    scalars("stress_ratio", ne, [&](std::size_t e) { return mesh.is_design(e) ? f.stress->ratio[e] : 0.0; });
  }
  if (!f.stress_sens.empty()) scalars("stress_sens", ne, [&](std::size_t e) { return f.stress_sens[e]; });
  write_text_file(path, o.str());
}

std::string history_csv(const RunHistory& history) {
  std::ostringstream o;
  for (std::size_t i = 0; i < kHistoryColumns.size(); ++i) o << (i ? "," : "") << kHistoryColumns[i];
  o << '\n';
  for (const HistoryRow& r : history.rows()) {
    o << r.iter;
    for (double v : {r.objective, r.W, r.E, r.volume, r.sigma_pn, r.max_stress_ratio, r.U_o, r.U_i, r.lambda,
                     r.max_von_mises}) {
      o << ',' << format_double(v);
    }
    o << '\n';
  }
  return o.str();
}

void write_history_csv(const fs::path& path, const RunHistory& history) {
  write_text_file(path, history_csv(history));
}

void write_svg(const fs::path& path, const Mesh& mesh, const LevelSetField& phi, const HeavisideParams& heaviside) {
  if (phi.size() != mesh.num_nodes()) throw Error("svg: level-set size mismatch");
  const std::vector<double> density = element_density(mesh, phi, heaviside);
  const double w = mesh.domain().width();
  const double h = mesh.domain().height();
  const double scale = 1000.0 / std::max(w, h);
  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_double(w * scale) << "\" height=\""
    << format_double(h * scale) << "\" viewBox=\"0 0 " << format_double(w * scale) << ' ' << format_double(h * scale)
    << "\" shape-rendering=\"crispEdges\">\n";
  char buf[32];
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const int g = static_cast<int>(std::lround(255.0 * std::clamp(1.0 - density[e], 0.0, 1.0)));
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", g, g, g);
    o << "<polygon points=\"";
    const auto& t = mesh.triangle(e);
    for (int k = 0; k < 3; ++k) {
      const Vec2& p = mesh.node(static_cast<std::size_t>(t[k]));
      o << (k ? " " : "") << format_double(p.x * scale) << ',' << format_double((h - p.y) * scale);
    }
    o << "\" fill=\"" << buf << "\" stroke=\"" << buf << "\" stroke-width=\"0.2\"/>\n";
  }
  o << "</svg>\n";
  write_text_file(path, o.str());
}

std::string sweep_status(const SweepRow& row) {
  return row.error.empty() ? std::string(to_string(row.status)) : "Error";
}

void write_sweep_csv(const fs::path& path, std::span<const SweepRow> rows) {
  std::ostringstream o;
  for (std::size_t i = 0; i < kSweepColumns.size(); ++i) o << (i ? "," : "") << kSweepColumns[i];
  o << '\n';
  for (const SweepRow& r : rows) {
    o << r.condition << ',' << format_double(r.alpha) << ',' << format_double(r.beta) << ',' << format_double(r.mu);
    if (r.error.empty()) {
      o << ',' << format_double(r.U_o) << ',' << format_double(r.U_i) << ',' << format_double(r.ratio) << ','
        << format_double(r.max_von_mises);
    } else {
      o << ",,,,";
    }
    o << ',' << sweep_status(r) << '\n';
  }
  write_text_file(path, o.str());
}

std::vector<SweepRecord> read_sweep_csv(const fs::path& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error("sweep CSV '" + path.string() + "' is empty");
  const auto header = split(trim(line), ',');
  if (header.size() != kSweepColumns.size() || !std::equal(header.begin(), header.end(), kSweepColumns.begin())) {
    throw Error("sweep CSV '" + path.string() + "' has an unexpected header");
  }
  std::vector<SweepRecord> out;
  int line_no = 1;
  auto field = [](std::string_view s) {
    return s.empty() ? std::numeric_limits<double>::quiet_NaN() : to_double(s);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto parts = split(trim(line), ',');
    if (parts.size() != kSweepColumns.size()) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": expected 9 columns");
    }
    try {
      SweepRecord r;
      r.condition = std::string(parts[0]);
      r.alpha = to_double(parts[1]);
      r.beta = to_double(parts[2]);
      r.mu = to_double(parts[3]);
      r.U_o = field(parts[4]);
      r.U_i = field(parts[5]);
      r.ratio = field(parts[6]);
      r.max_von_mises = field(parts[7]);
      r.status = std::string(parts[8]);
      out.push_back(std::move(r));
    } catch (const Error& e) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string sweep_report(std::span<const SweepRecord> records) {
  if (records.empty()) throw Error("no runs to report");
  std::ostringstream o;
  o << "| condition | alpha | beta | mu | U_o [um] | U_i [um] | U_o/U_i | max von Mises [MPa] | status |\n";
  o << "|---|---|---|---|---|---|---|---|---|\n";
  char buf[64];
  auto fixed = [&](double v, double scale, int digits) {
    if (std::isnan(v)) return std::string("N/A");
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v * scale);
    return std::string(buf);
  };
  for (const SweepRecord& r : records) {
    const bool valid = r.status == "Converged" || r.status == "MaxIters";
    o << "| " << r.condition << " | " << format_double(r.alpha) << " | " << format_double(r.beta) << " | "
      << format_double(r.mu) << " | " << (valid ? fixed(r.U_o, 1e6, 2) : "N/A") << " | "
      << (valid ? fixed(r.U_i, 1e6, 2) : "N/A") << " | " << (valid ? fixed(r.ratio, 1.0, 2) : "N/A") << " | "
      << (valid ? fixed(r.max_von_mises, 1e-6, 1) : "N/A") << " | " << r.status << " |\n";
  }
  return o.str();
}

void write_manifest(const fs::path& path, const Manifest& m) {
  json j;
  j["config_hash"] = m.config_hash;
  j["lsmech_version"] = LSMECH_VERSION;
  j["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                       std::to_string(EIGEN_MINOR_VERSION);
  j["compiler"] = std::string(__VERSION__);
  j["command"] = m.command;
  j["status"] = m.status;
  j["iterations"] = m.iterations;
  j["wall_time_s"] = m.wall_time;
  j["threads"] = m.threads;
  j["message"] = m.message;
  write_text_file(path, j.dump(2) + "\n");
}

void save_checkpoint(const fs::path& path, const ProblemSpec& spec, const OptimizerState& state) {
  json j;
  j["format"] = "lsmech-checkpoint";
  j["version"] = 1;
  j["config"] = serialize_config(spec);
  j["next_iter"] = state.next_iter;
  j["phi"] = state.phi.values;
  if (state.normalization) {
    j["normalization"] = {{"W_bar", state.normalization->W_bar}, {"E_bar", state.normalization->E_bar}};
  } else {
    j["normalization"] = nullptr;
  }
  j["initial_U_i"] = state.initial_U_i;
  j["stress_scale"] = state.stress_scale ? json(*state.stress_scale) : json(nullptr);
  j["smoothed_stress"] = state.smoothed_stress ? json(*state.smoothed_stress) : json(nullptr);
  j["disconnected_streak"] = state.disconnected_streak;
  json rows = json::array();
  for (const HistoryRow& r : state.history.rows()) {
    rows.push_back({r.iter, r.objective, r.W, r.E, r.volume, r.sigma_pn, r.max_stress_ratio, r.U_o, r.U_i, r.lambda,
                    r.max_von_mises});
  }
  j["history"] = rows;
  write_text_file(path, j.dump() + "\n");
}

Checkpoint load_checkpoint(const fs::path& path) {
  const std::string text = read_text_file(path);
  Checkpoint c;
  try {
    const json j = json::parse(text);
    if (j.at("format") != "lsmech-checkpoint" || j.at("version") != 1) {
      throw Error("unsupported checkpoint format");
    }
    c.spec = parse_config_text(j.at("config").get<std::string>(), path.string() + "#config");
    OptimizerState& s = c.state;
    s.next_iter = j.at("next_iter").get<int>();
    s.phi.values = j.at("phi").get<std::vector<double>>();
    if (!j.at("normalization").is_null()) {
      s.normalization = Normalization{j["normalization"].at("W_bar").get<double>(),
                                      j["normalization"].at("E_bar").get<double>()};
    }
    s.initial_U_i = j.at("initial_U_i").get<double>();
    if (!j.at("stress_scale").is_null()) s.stress_scale = j["stress_scale"].get<double>();
    if (!j.at("smoothed_stress").is_null()) s.smoothed_stress = j["smoothed_stress"].get<std::vector<double>>();
    s.disconnected_streak = j.at("disconnected_streak").get<int>();
    for (const json& r : j.at("history")) {
      if (r.size() != kHistoryColumns.size()) throw Error("history row has the wrong length");
      HistoryRow row;
      row.iter = r[0].get<int>();
      row.objective = r[1].get<double>();
      row.W = r[2].get<double>();
      row.E = r[3].get<double>();
      row.volume = r[4].get<double>();
      row.sigma_pn = r[5].get<double>();
      row.max_stress_ratio = r[6].get<double>();
      row.U_o = r[7].get<double>();
      row.U_i = r[8].get<double>();
      row.lambda = r[9].get<double>();
      row.max_von_mises = r[10].get<double>();
      s.history.append(row);
    }
  } catch (const json::exception& e) {
    throw Error("invalid checkpoint '" + path.string() + "': " + e.what());
  }
  return c;
}

}  // namespace lsmech
