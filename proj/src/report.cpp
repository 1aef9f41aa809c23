#include "flmc/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace flmc {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string format_cell(const Cell& cell) {
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  if (const auto* d = std::get_if<double>(&cell)) return format_double(*d);
  return std::to_string(std::get<std::int64_t>(cell));
}

void ExperimentReport::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw std::invalid_argument("report '" + name + "': row has " + std::to_string(row.size()) +
                                " cells, header has " + std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

std::size_t ExperimentReport::column(const std::string& column_name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == column_name) return i;
  }
  throw std::out_of_range("report '" + name + "' has no column '" + column_name + "'");
}

double ExperimentReport::number(std::size_t row, const std::string& column_name) const {
  const Cell& cell = rows.at(row).at(column(column_name));
  if (const auto* d = std::get_if<double>(&cell)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return static_cast<double>(*i);
  throw std::invalid_argument("column '" + column_name + "' is not numeric");
}

std::string ExperimentReport::csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out += ',';
    out += columns[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_cell(row[i]);
    }
    out += '\n';
  }
  return out;
}

void ExperimentReport::write(const std::string& path) const {
  write_text_file(path, csv());
  nlohmann::json meta = metadata;
  meta["columns"] = columns;
  meta["rows"] = rows.size();
  write_text_file(path + ".meta.json", meta.dump(2) + "\n");
}

nlohmann::json report_metadata(const std::string& experiment, std::uint64_t seed,
                               const std::optional<std::string>& timestamp) {
  nlohmann::json meta;
  meta["experiment"] = experiment;
  meta["seed"] = seed;
  meta["version"] = kVersion;
  meta["timestamp"] = timestamp ? nlohmann::json(*timestamp) : nlohmann::json(nullptr);
  return meta;
}

nlohmann::json to_json(const DriftSpec& drift) {
  nlohmann::json j;
  j["alpha"] = drift.alpha;
  if (const auto* f = std::get_if<FullCentered>(&drift.variant)) {
    j["variant"] = "full";
    j["h"] = f->h;
    j["K"] = f->K;
  } else if (const auto* r = std::get_if<Reference>(&drift.variant)) {
    j["variant"] = "reference";
    j["h"] = r->h;
    j["K_star"] = r->K_star;
  } else {
    j["variant"] = "simplified";
  }
  return j;
}

nlohmann::json to_json(const StepSchedule& schedule) {
  if (schedule.is_polynomial()) return {{"type", "poly"}, {"a", schedule.a()}, {"b", schedule.b()}};
  return {{"type", "const"}, {"eta", schedule.a()}};
}

nlohmann::json to_json(const SamplerConfig& config) {
  nlohmann::json j;
  j["drift"] = to_json(config.drift);
  j["schedule"] = to_json(config.schedule);
  j["iterations"] = config.iterations;
  j["seed"] = config.seed;
  j["initial_state"] = config.initial_state;
  if (config.minibatch) {
    j["minibatch"] = {{"size", config.minibatch->size},
                      {"mode", config.minibatch->mode == MinibatchMode::enumerate ? "enumerate" : "with_replacement"}};
  } else {
    j["minibatch"] = nullptr;
  }
  j["record_stride"] = config.record_stride;
  return j;
}

nlohmann::json to_json(const RepeatSummary& summary) {
  nlohmann::json j;
  auto repeats = nlohmann::json::array();
  for (const auto& o : summary.outcomes) {
    nlohmann::json r{{"repeat", o.repeat}, {"seed", o.seed}};
    r["estimate"] = o.estimate ? nlohmann::json(*o.estimate) : nlohmann::json(nullptr);
    r["error"] = o.error.empty() ? nlohmann::json(nullptr) : nlohmann::json(o.error);
    repeats.push_back(std::move(r));
  }
  j["repeats"] = std::move(repeats);
  j["mean_abs_bias"] = std::isfinite(summary.mean_abs_bias) ? nlohmann::json(summary.mean_abs_bias) : nullptr;
  j["standard_error"] = summary.standard_error;
  j["failures"] = summary.failures;
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write to " + path + " failed");
}

}  // namespace flmc
