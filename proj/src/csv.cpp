#include "hamlearn/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace hamlearn {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw IoError("format_double: conversion failed");
  return std::string(buf, end);
}

namespace {

double parse_cell(const std::string& cell, const std::filesystem::path& path, std::size_t line) {
  if (cell == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  if (cell == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw IoError(path.string() + ":" + std::to_string(line) + ": bad numeric cell '" + cell + "'");
  }
  return value;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string join_header(const std::vector<std::string>& header) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  return out;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw IoError("csv: no column named '" + name + "'");
}

void write_csv(std::ostream& out, const CsvTable& table) {
  out << join_header(table.header) << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_double(row[i]);
    }
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_csv(out, table);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path.string() + "' is empty");
  table.header = split(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != table.header.size()) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(table.header.size()) + " cells");
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_cell(c, path, line_no));
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable trajectory_table(const Trajectory& traj,
                          const std::function<double(const PhaseState&)>& energy_fn) {
  CsvTable table;
  const std::size_t dof = traj.states.empty() ? 0 : traj.states.front().dof();
  table.header.push_back("t");
  for (std::size_t i = 0; i < dof; ++i) table.header.push_back("q" + std::to_string(i + 1));
  for (std::size_t i = 0; i < dof; ++i) table.header.push_back("p" + std::to_string(i + 1));
  if (energy_fn) table.header.push_back("H");
  table.rows.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    std::vector<double> row{traj.time(i)};
    const auto x = traj.states[i].flat();
    row.insert(row.end(), x.begin(), x.end());
    if (energy_fn) row.push_back(energy_fn(traj.states[i]));
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable trajectory_table(const Trajectory& traj, const SystemSpec& spec) {
  return trajectory_table(traj, [&spec](const PhaseState& s) { return total_energy(spec, s); });
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          const SystemSpec& spec) {
  write_csv(path, trajectory_table(traj, spec));
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  if (table.header.empty() || table.header.front() != "t") {
    throw IoError("'" + path.string() + "' is not a trajectory file");
  }
  const bool has_energy = table.header.back() == "H";
  const std::size_t state_cols = table.header.size() - 1 - (has_energy ? 1 : 0);
  if (state_cols == 0 || state_cols % 2 != 0) {
    throw IoError("'" + path.string() + "' has an odd number of state columns");
  }
  Trajectory traj;
  if (!table.rows.empty()) traj.t0 = table.rows.front()[0];
  if (table.rows.size() >= 2) traj.dt_sample = table.rows[1][0] - table.rows[0][0];
  if (has_energy && !table.rows.empty()) traj.energy = table.rows.front().back();
  traj.states.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    traj.states.push_back(
        PhaseState::from_flat(std::span<const double>(row.data() + 1, state_cols)));
  }
  return traj;
}

}  // namespace hamlearn
