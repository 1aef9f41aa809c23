#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "flmc/report.hpp"

using namespace flmc;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("format_double round-trips") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(-1e-7) == "-9.9999999999999995e-08");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  for (double v : {0.1, 1.0 / 3.0, -2.718281828459045, 6.02214076e23, 5e-324}) {
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
  CHECK(format_cell(Cell{std::int64_t{42}}) == "42");
  CHECK(format_cell(Cell{std::string("abc")}) == "abc");
  CHECK(format_cell(Cell{0.5}) == "0.5");
}

TEST_CASE("report rows and CSV layout") {
  ExperimentReport r{"demo", {"alpha", "K", "label"}};
  r.add_row({1.5, std::int64_t{15}, std::string("a")});
  r.add_row({2.0, std::int64_t{1}, std::string("")});
  CHECK_THROWS_AS(r.add_row({1.0}), std::invalid_argument);
  CHECK(r.csv() == "alpha,K,label\n1.5,15,a\n2,1,\n");
  CHECK(r.column("K") == 1);
  CHECK_THROWS(r.column("missing"));
  CHECK(r.number(0, "alpha") == 1.5);
  CHECK(r.number(1, "K") == 1.0);
}

TEST_CASE("report writes CSV and metadata sidecar") {
  const auto dir = std::filesystem::temp_directory_path() / "flmc_report_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.csv";
  ExperimentReport r{"demo", {"x"}};
  r.metadata = report_metadata("demo", 7, std::nullopt);
  r.add_row({0.25});
  r.write(path.string());
  CHECK(slurp(path) == "x\n0.25\n");
  const auto meta = nlohmann::json::parse(slurp(dir / "out.csv.meta.json"));
  CHECK(meta.at("experiment") == "demo");
  CHECK(meta.at("seed") == 7);
  CHECK(meta.at("version") == kVersion);
  CHECK(meta.at("timestamp").is_null());
  CHECK(meta.at("rows") == 1);
  CHECK(meta.at("columns") == nlohmann::json::array({"x"}));

  const auto first = slurp(dir / "out.csv.meta.json");
  r.write(path.string());
  CHECK(slurp(dir / "out.csv.meta.json") == first);
  std::filesystem::remove_all(dir);
}

TEST_CASE("metadata records a timestamp only when given") {
  CHECK(report_metadata("e", 1, std::string("2024-01-01T00:00:00Z")).at("timestamp") == "2024-01-01T00:00:00Z");
}

TEST_CASE("config echo") {
  SamplerConfig c;
  c.drift = {FullCentered{0.06, 15}, 1.7};
  c.schedule = StepSchedule::polynomial(1e-7, 0.6);
  c.iterations = 5000;
  c.seed = 3;
  const auto j = to_json(c);
  CHECK(j.at("drift").at("alpha") == 1.7);
  CHECK(j.at("drift").at("h") == 0.06);
  CHECK(j.at("drift").at("K") == 15);
  CHECK(j.at("schedule").at("a") == 1e-7);
  CHECK(j.at("schedule").at("b") == 0.6);
  CHECK(j.at("iterations") == 5000);
  CHECK(j.at("seed") == 3);
  CHECK(j.at("minibatch").is_null());
  CHECK(to_json(DriftSpec{Simplified{}, 2.0}).at("variant") == "simplified");
}
