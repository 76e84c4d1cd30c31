#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "hamlearn/systems.hpp"

namespace hamlearn {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a named column; throws IoError when absent.
  std::size_t column(const std::string& name) const;
};

void write_csv(std::ostream& out, const CsvTable& table);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
/// Reads a numeric CSV with a single header line. Booleans written as
/// 0/1 and all other cells must be numeric.
CsvTable read_csv(const std::filesystem::path& path);

/// Columns `t,q1,...,p1,...,H` with H evaluated by the given system.
CsvTable trajectory_table(const Trajectory& traj, const SystemSpec& spec);
/// Columns `t,q1,...,p1,...` plus H when `energy_fn` is set.
CsvTable trajectory_table(const Trajectory& traj,
                          const std::function<double(const PhaseState&)>& energy_fn);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          const SystemSpec& spec);
/// Inverse of write_trajectory_csv. dt_sample and t0 are recovered from the
/// time column and `energy` from the first H entry.
Trajectory read_trajectory_csv(const std::filesystem::path& path);

}  // namespace hamlearn
