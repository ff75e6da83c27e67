#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lsmech/error.hpp"
#include "lsmech/optimizer.hpp"

namespace lsmech {

// Configuration error tied to a line of the source text (0 when the problem
// is not attributable to a single line).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

// Flat `key = value` configuration. `mode` selects a preset (inverter,
// magnifier, lbeam) regardless of where it appears; other keys override it.
// Repeated `port`, `void_box` and `solid_box` lines replace the preset lists.
ProblemSpec parse_config_text(std::string_view text, const std::string& source = "<config>");
ProblemSpec parse_config(const std::filesystem::path& path);

// Writes every field explicitly; parse_config_text(serialize_config(s)) == s.
std::string serialize_config(const ProblemSpec& spec);

// 64-bit FNV-1a of the serialized configuration, as 16 hex digits.
std::string config_hash(const ProblemSpec& spec);
std::uint64_t fnv1a64(std::string_view data);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

struct VtkFields {
  const LevelSetField* phi = nullptr;
  const HeavisideParams* heaviside = nullptr;
  const FieldVector* u = nullptr;
  const StressField* stress = nullptr;
  // Debug arrays, written when non-empty.
  std::span<const double> dtL;          // nodal
  std::span<const double> stress_sens;  // per element
};

void write_vtk(const std::filesystem::path& path, const Mesh& mesh, const VtkFields& fields);

inline constexpr std::array<std::string_view, 11> kHistoryColumns = {
    "iter", "J", "W", "E", "volume", "sigma_pn", "max_stress_ratio", "U_o", "U_i", "lambda", "max_von_mises"};

void write_history_csv(const std::filesystem::path& path, const RunHistory& history);
std::string history_csv(const RunHistory& history);

// One polygon per element filled with grayscale(1 - h); y points up.
void write_svg(const std::filesystem::path& path, const Mesh& mesh, const LevelSetField& phi,
               const HeavisideParams& heaviside);

inline constexpr std::array<std::string_view, 9> kSweepColumns = {
    "condition", "alpha", "beta", "mu", "U_o", "U_i", "U_o/U_i", "max_von_mises", "status"};

std::string sweep_status(const SweepRow& row);
void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows);

// Parsed sweep CSV row; numeric fields are NaN when empty.
struct SweepRecord {
  std::string condition;
  double alpha = 0.0, beta = 0.0, mu = 0.0, U_o = 0.0, U_i = 0.0, ratio = 0.0, max_von_mises = 0.0;
  std::string status;
};
std::vector<SweepRecord> read_sweep_csv(const std::filesystem::path& path);

// Markdown results table, one row per condition (micrometres,
// MPa). Throws when `records` is empty.
std::string sweep_report(std::span<const SweepRecord> records);

struct Manifest {
  std::string config_hash;
  std::string command;
  std::string status;
  int iterations = 0;
  double wall_time = 0.0;
  int threads = 1;
  std::string message;
};
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

struct Checkpoint {
  ProblemSpec spec;
  OptimizerState state;
};
void save_checkpoint(const std::filesystem::path& path, const ProblemSpec& spec, const OptimizerState& state);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Writes `text` to `path` through a temporary file and rename.
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace lsmech
