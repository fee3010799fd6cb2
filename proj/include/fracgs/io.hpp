#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fracgs/branch.hpp"
#include "fracgs/grid.hpp"
#include "fracgs/lspec.hpp"
#include "fracgs/model.hpp"
#include "fracgs/nehari.hpp"

namespace fracgs {

using json = nlohmann::json;

/// Parses the structured config; every violation (unknown keys, types,
/// admissibility) is collected into one ConfigError.
ProblemSpec problem_from_json(const json& j);
json problem_to_json(const ProblemSpec& p);
ProblemSpec load_config(const std::filesystem::path& path);

/// Binary field checkpoint ("GSBF", version 1).
void save_checkpoint(const std::filesystem::path& path, const Field& u);
Field load_checkpoint(const std::filesystem::path& path);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double x);

std::string branch_csv_header();
std::string branch_csv_row(const BranchPoint& p);

/// Appends rows as points are accepted; flushes after each row.
class BranchCsvWriter {
 public:
  explicit BranchCsvWriter(const std::filesystem::path& path);
  void write(const BranchPoint& p);

 private:
  std::ofstream out_;
};

/// Rows of a branch CSV; states are not loaded.
std::vector<BranchPoint> read_branch_csv(const std::filesystem::path& path);

json to_json(const FunctionalReport& r);
json to_json(const SolveReport& r);
json to_json(const HypothesisReport& r);
json to_json(const SpectrumReport& r);

}  // namespace fracgs
