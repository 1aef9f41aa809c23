#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "flmc/sampler.hpp"

namespace flmc {

inline constexpr const char* kVersion = "0.1.0";

using Cell = std::variant<std::string, double, std::int64_t>;

/// Round-trip decimal form: 17 significant digits, "nan"/"inf"/"-inf" for non-finite values.
std::string format_double(double value);
std::string format_cell(const Cell& cell);

/// Tabular experiment output. Every row carries the full parameter tuple.
struct ExperimentReport {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  nlohmann::json metadata = nlohmann::json::object();

  /// Throws std::invalid_argument when the row width differs from the header.
  void add_row(std::vector<Cell> row);
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& column_name) const;

  /// Header plus rows, comma separated, LF line endings.
  std::string csv() const;
  /// Writes `path` and the metadata sidecar `path + ".meta.json"`.
  void write(const std::string& path) const;
};

/// Metadata block shared by all reports: experiment, seed, version, timestamp (null unless given).
nlohmann::json report_metadata(const std::string& experiment, std::uint64_t seed,
                               const std::optional<std::string>& timestamp);

nlohmann::json to_json(const DriftSpec& drift);
nlohmann::json to_json(const StepSchedule& schedule);
nlohmann::json to_json(const SamplerConfig& config);
nlohmann::json to_json(const RepeatSummary& summary);

/// Writes text exactly as given (binary mode, no newline translation).
void write_text_file(const std::string& path, const std::string& text);

}  // namespace flmc
