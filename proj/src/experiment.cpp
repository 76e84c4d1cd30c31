#include "hamlearn/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hamlearn/analysis.hpp"
#include "hamlearn/csv.hpp"
#include "hamlearn/error.hpp"
#include "hamlearn/model_io.hpp"
#include "hamlearn/parallel.hpp"
#include "hamlearn/seeds.hpp"

namespace hamlearn::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

double parse_real(const std::string& key, const std::string& text) {
  double value = 0.0;
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ContractError("config: " + key + " expects a number, got '" + text + "'");
  }
  return value;
}

long long parse_integer(const std::string& key, const std::string& text) {
  long long value = 0;
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ContractError("config: " + key + " expects an integer, got '" + text + "'");
  }
  return value;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  std::uint64_t value = 0;
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ContractError("config: " + key + " expects an unsigned integer, got '" + text + "'");
  }
  return value;
}

int parse_int(const std::string& key, const std::string& text) {
  return static_cast<int>(parse_integer(key, text));
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ContractError("config: " + key + " expects true or false, got '" + text + "'");
}

std::vector<double> parse_reals(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) {
    if (!item.empty()) out.push_back(parse_real(key, item));
  }
  return out;
}

// Parameter sets are separated by ';' and components by ','. For a
// single-channel system a plain comma list is one set per entry.
std::vector<std::vector<double>> parse_param_sets(const std::string& key, const std::string& text,
                                                  std::size_t channels) {
  std::vector<std::vector<double>> sets;
  if (text.find(';') == std::string::npos && channels == 1) {
    for (double v : parse_reals(key, text)) sets.push_back({v});
    return sets;
  }
  for (const auto& item : split(text, ';')) {
    if (item.empty()) continue;
    sets.push_back(parse_reals(key, item));
  }
  return sets;
}

std::string join_reals(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ", ";
    out += format_double(values[i]);
  }
  return out;
}

std::string join_sets(const std::vector<std::vector<double>>& sets) {
  std::string out;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (i > 0) out += "; ";
    out += join_reals(sets[i]);
  }
  return out;
}

std::vector<std::vector<double>> grid_sets(std::size_t channels, int steps) {
  std::vector<std::vector<double>> sets;
  for (int i = 0; i <= steps; ++i) {
    const double a = static_cast<double>(i) / steps;
    if (channels == 1) {
      sets.push_back({a});
      continue;
    }
    for (int j = 0; j <= steps; ++j) sets.push_back({a, static_cast<double>(j) / steps});
  }
  return sets;
}

std::string tag(const std::vector<double>& params) {
  std::string out = "a";
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i > 0) out += "_";
    out += format_double(params[i]);
  }
  return out;
}

std::string two_digits(int n) {
  std::string s = std::to_string(n);
  return s.size() < 2 ? "0" + s : s;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  }
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string());
}

void write_json(const fs::path& path, const json& doc) { write_text_atomic(path, doc.dump(2) + "\n"); }

json read_json(const fs::path& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw IoError("missing " + what + ": " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("malformed " + what + " " + path.string() + ": " + e.what());
  }
}

json real_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

SystemSpec make_spec(SystemKind kind, std::vector<double> params) {
  SystemSpec spec{kind, std::move(params)};
  spec.validate();
  return spec;
}

// Sweeps along one parameter; the asymmetric system is swept on its
// diagonal alpha1 = alpha2, where it coincides with Henon-Heiles.
SystemSpec sweep_spec(SystemKind kind, double alpha) {
  if (kind == SystemKind::AsymmetricHH) return make_spec(kind, {alpha, alpha});
  return make_spec(kind, {alpha});
}

PhaseState default_orbit_ic(SystemKind kind) {
  if (kind == SystemKind::Morse) return PhaseState({kMorseEquilibrium}, {1.0});
  const double p = 1.0 / std::sqrt(6.0);
  return PhaseState({0.0, 0.0}, {p, p});
}

void require_planar(const ExperimentConfig& cfg, const char* what) {
  if (cfg.system == SystemKind::Morse) {
    throw ContractError(std::string(what) + " needs a two-degree-of-freedom system");
  }
}

json params_json(const std::vector<std::vector<double>>& sets) {
  json out = json::array();
  for (const auto& s : sets) out.push_back(s);
  return out;
}

json header(const ExperimentConfig& cfg, const std::string& kind) {
  return json{{"format", "hamlearn-" + kind},
              {"version", kSummaryVersion},
              {"profile", to_string(cfg.profile)},
              {"system", std::string(to_string(cfg.system))},
              {"master_seed", cfg.seed}};
}

}  // namespace

const char* to_string(Profile profile) { return profile == Profile::Desk ? "desk" : "paper"; }

Profile parse_profile(const std::string& text) {
  if (text == "paper") return Profile::Paper;
  if (text == "desk") return Profile::Desk;
  throw ContractError("unknown profile '" + text + "' (expected paper or desk)");
}

AnalyzeMode parse_analyze_mode(const std::string& text) {
  if (text == "potential") return AnalyzeMode::Potential;
  if (text == "taylor") return AnalyzeMode::Taylor;
  if (text == "poincare") return AnalyzeMode::Poincare;
  if (text == "orbit") return AnalyzeMode::Orbit;
  throw ContractError("unknown analyze mode '" + text + "'");
}

SweepSource parse_sweep_source(const std::string& text) {
  if (text == "true") return SweepSource::True;
  if (text == "learned") return SweepSource::Learned;
  throw ContractError("unknown sweep source '" + text + "' (expected true or learned)");
}

ExperimentConfig ExperimentConfig::preset(Profile profile, SystemKind system) {
  ExperimentConfig c;
  c.profile = profile;
  c.system = system;
  const std::size_t channels = param_count(system);
  switch (system) {
    case SystemKind::HenonHeiles:
      c.analyze_params = grid_sets(1, 10);
      break;
    case SystemKind::AsymmetricHH:
      c.train_params.clear();
      for (double a1 : {0.2, 0.4, 0.6, 0.8}) {
        for (double a2 : {0.2, 0.4, 0.6, 0.8}) c.train_params.push_back({a1, a2});
      }
      c.analyze_params = grid_sets(channels, 10);
      c.orbit_params = {0.7, 0.7};
      break;
    case SystemKind::Morse:
      c.train_params = {{0.5}, {1.0}, {2.0}, {4.0}};
      c.energies = 5;
      c.t_end = 100.0;
      c.analyze_params = {{1.0}, {1.5}, {2.0}};
      c.orbit_params = {1.5};
      break;
  }
  c.train.epochs = 500;
  if (profile == Profile::Desk) {
    c.ensemble = 5;
    c.train.epochs = 100;
    if (system != SystemKind::Morse) {
      c.energies = 3;
      c.t_end = 200.0;
    }
    c.sweep_alphas = 21;
    c.sweep_ic = 50;
  }
  return c;
}

void ExperimentConfig::set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  const std::size_t channels = param_count(system);
  if (key == "profile") profile = parse_profile(value);
  else if (key == "system") system = parse_system_kind(value);
  else if (key == "seed") seed = parse_u64(key, value);
  else if (key == "out") out = value;
  else if (key == "jobs") jobs = static_cast<unsigned>(parse_u64(key, value));
  else if (key == "data.params") train_params = parse_param_sets(key, value, channels);
  else if (key == "data.energies") energies = parse_int(key, value);
  else if (key == "data.orbits_per_energy") orbits_per_energy = parse_int(key, value);
  else if (key == "data.t_end") t_end = parse_real(key, value);
  else if (key == "data.dt_sample") dt_sample = parse_real(key, value);
  else if (key == "data.dt_internal") dt_internal = parse_real(key, value);
  else if (key == "data.targets") {
    if (value == "fd") targets = nn::TargetMode::FiniteDifference;
    else if (value == "analytic") targets = nn::TargetMode::Analytic;
    else throw ContractError("config: data.targets expects fd or analytic");
  }
  else if (key == "train.ensemble") ensemble = parse_int(key, value);
  else if (key == "train.epochs") train.epochs = parse_int(key, value);
  else if (key == "train.learning_rate") train.learning_rate = parse_real(key, value);
  else if (key == "train.batch_size") train.batch_size = parse_int(key, value);
  else if (key == "train.beta1") train.adam_beta1 = parse_real(key, value);
  else if (key == "train.beta2") train.adam_beta2 = parse_real(key, value);
  else if (key == "train.eps") train.adam_eps = parse_real(key, value);
  else if (key == "train.hidden_layers") train.hidden_layers = parse_int(key, value);
  else if (key == "train.hidden_width") train.hidden_width = parse_int(key, value);
  else if (key == "analyze.params") analyze_params = parse_param_sets(key, value, channels);
  else if (key == "analyze.grid_resolution") grid_resolution = parse_int(key, value);
  else if (key == "analyze.taylor_samples") taylor_samples = parse_int(key, value);
  else if (key == "analyze.orbit_params") orbit_params = parse_reals(key, value);
  else if (key == "analyze.orbit_ic") orbit_ic = parse_reals(key, value);
  else if (key == "analyze.orbit_t_end") orbit_t_end = parse_real(key, value);
  else if (key == "analyze.profile_x_min") profile_x_min = parse_real(key, value);
  else if (key == "analyze.profile_x_max") profile_x_max = parse_real(key, value);
  else if (key == "analyze.profile_points") profile_points = parse_int(key, value);
  else if (key == "sweep.alpha_min") sweep_alpha_min = parse_real(key, value);
  else if (key == "sweep.alpha_max") sweep_alpha_max = parse_real(key, value);
  else if (key == "sweep.alphas") sweep_alphas = parse_int(key, value);
  else if (key == "sweep.ic") sweep_ic = parse_int(key, value);
  else if (key == "sweep.energy") sweep_energy = parse_real(key, value);
  else if (key == "sweep.t_end") sweep_t_end = parse_real(key, value);
  else if (key == "sweep.dt") sweep_dt = parse_real(key, value);
  else if (key == "sweep.tangent") {
    if (value == "rk4") sweep_tangent = chaos::TangentMap::Rk4;
    else if (value == "euler") sweep_tangent = chaos::TangentMap::Euler;
    else throw ContractError("config: sweep.tangent expects rk4 or euler");
  }
  else if (key == "sweep.divergence_radius") sweep_divergence_radius = parse_real(key, value);
  else if (key == "sweep.orbits") sweep_orbits = parse_bool(key, value);
  else throw ContractError("config: unknown key '" + key + "'");
}

void ExperimentConfig::validate() const {
  training_set().validate();
  train.validate();
  require(ensemble >= 1, "config: train.ensemble must be >= 1");
  require(!out.empty(), "config: out must not be empty");
  const std::size_t channels = param_count(system);
  for (const auto& p : analyze_params) {
    require(p.size() == channels, "config: analyze.params entry has the wrong channel count");
  }
  require(orbit_params.size() == channels, "config: analyze.orbit_params has the wrong size");
  require(orbit_ic.empty() || orbit_ic.size() == 2 * degrees_of_freedom(system),
          "config: analyze.orbit_ic has the wrong size");
  require(grid_resolution >= 2, "config: analyze.grid_resolution must be >= 2");
  require(taylor_samples >= 35, "config: analyze.taylor_samples must be >= 35");
  require(orbit_t_end > 0.0, "config: analyze.orbit_t_end must be positive");
  require(profile_points >= 2 && profile_x_max > profile_x_min, "config: bad profile range");
  require(sweep_alphas >= 1, "config: sweep.alphas must be >= 1");
  require(sweep_alpha_max >= sweep_alpha_min, "config: sweep alpha range is reversed");
  require(sweep_dt > 0.0 && sweep_t_end >= sweep_dt, "config: bad sweep time span");
  sweep_config().validate();
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream s;
  auto line = [&](const std::string& k, const std::string& v) { s << k << " = " << v << "\n"; };
  auto real = [&](const std::string& k, double v) { line(k, format_double(v)); };
  line("profile", to_string(profile));
  line("system", std::string(hamlearn::to_string(system)));
  line("seed", std::to_string(seed));
  line("out", out.string());
  line("jobs", std::to_string(jobs));
  line("data.params", join_sets(train_params));
  line("data.energies", std::to_string(energies));
  line("data.orbits_per_energy", std::to_string(orbits_per_energy));
  real("data.t_end", t_end);
  real("data.dt_sample", dt_sample);
  real("data.dt_internal", dt_internal);
  line("data.targets", targets == nn::TargetMode::Analytic ? "analytic" : "fd");
  line("train.ensemble", std::to_string(ensemble));
  line("train.epochs", std::to_string(train.epochs));
  real("train.learning_rate", train.learning_rate);
  line("train.batch_size", std::to_string(train.batch_size));
  real("train.beta1", train.adam_beta1);
  real("train.beta2", train.adam_beta2);
  real("train.eps", train.adam_eps);
  line("train.hidden_layers", std::to_string(train.hidden_layers));
  line("train.hidden_width", std::to_string(train.hidden_width));
  line("analyze.params", join_sets(analyze_params));
  line("analyze.grid_resolution", std::to_string(grid_resolution));
  line("analyze.taylor_samples", std::to_string(taylor_samples));
  line("analyze.orbit_params", join_reals(orbit_params));
  line("analyze.orbit_ic", join_reals(orbit_ic));
  real("analyze.orbit_t_end", orbit_t_end);
  real("analyze.profile_x_min", profile_x_min);
  real("analyze.profile_x_max", profile_x_max);
  line("analyze.profile_points", std::to_string(profile_points));
  real("sweep.alpha_min", sweep_alpha_min);
  real("sweep.alpha_max", sweep_alpha_max);
  line("sweep.alphas", std::to_string(sweep_alphas));
  line("sweep.ic", std::to_string(sweep_ic));
  real("sweep.energy", sweep_energy);
  real("sweep.t_end", sweep_t_end);
  real("sweep.dt", sweep_dt);
  line("sweep.tangent", sweep_tangent == chaos::TangentMap::Euler ? "euler" : "rk4");
  real("sweep.divergence_radius", sweep_divergence_radius);
  line("sweep.orbits", sweep_orbits ? "true" : "false");
  return s.str();
}

nn::TrainingSetConfig ExperimentConfig::training_set() const {
  nn::TrainingSetConfig t;
  t.kind = system;
  t.param_sets = train_params;
  t.energies_per_param = energies;
  t.orbits_per_energy = orbits_per_energy;
  t.t_end = t_end;
  t.dt_sample = dt_sample;
  t.dt_internal = dt_internal;
  t.targets = targets;
  return t;
}

std::vector<double> ExperimentConfig::sweep_grid() const {
  std::vector<double> grid;
  if (sweep_alphas == 1) return {sweep_alpha_min};
  for (int i = 0; i < sweep_alphas; ++i) {
    grid.push_back(sweep_alpha_min +
                   (sweep_alpha_max - sweep_alpha_min) * static_cast<double>(i) / (sweep_alphas - 1));
  }
  return grid;
}

chaos::SweepConfig ExperimentConfig::sweep_config() const {
  chaos::SweepConfig s;
  s.alphas = sweep_grid();
  s.n_ic = sweep_ic;
  s.energy = sweep_energy;
  s.dt = sweep_dt;
  s.n_steps = std::lround(sweep_t_end / sweep_dt);
  s.seed = SeedPlan{seed}.sweep();
  s.jobs = jobs;
  s.diagnostics.tangent = sweep_tangent;
  s.diagnostics.divergence_radius = sweep_divergence_radius;
  s.keep_orbits = sweep_orbits;
  return s;
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ContractError("config line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ContractError("config line " + std::to_string(number) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

ExperimentConfig resolve_config(const std::optional<fs::path>& file,
                                const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::map<std::string, std::string> keys;
  if (file) keys = read_config_file(*file);
  std::string profile = keys.count("profile") ? keys["profile"] : "paper";
  std::string system = keys.count("system") ? keys["system"] : "henon_heiles";
  for (const auto& [k, v] : overrides) {
    if (trim(k) == "profile") profile = trim(v);
    if (trim(k) == "system") system = trim(v);
  }
  ExperimentConfig cfg = ExperimentConfig::preset(parse_profile(profile), parse_system_kind(system));
  for (const auto& [k, v] : keys) {
    if (k != "profile" && k != "system") cfg.set(k, v);
  }
  for (const auto& [k, v] : overrides) {
    if (trim(k) != "profile" && trim(k) != "system") cfg.set(k, v);
  }
  cfg.validate();
  return cfg;
}

namespace {
enum SeedPurpose : std::uint64_t { kData = 1, kInit = 2, kShuffle = 3, kTaylor = 4, kSweep = 5 };
}

std::uint64_t SeedPlan::data(int member) const {
  return derive_seed(master, {kData, static_cast<std::uint64_t>(member)});
}
std::uint64_t SeedPlan::init(int member) const {
  return derive_seed(master, {kInit, static_cast<std::uint64_t>(member)});
}
std::uint64_t SeedPlan::shuffle(int member) const {
  return derive_seed(master, {kShuffle, static_cast<std::uint64_t>(member)});
}
std::uint64_t SeedPlan::taylor() const { return derive_seed(master, {kTaylor}); }
std::uint64_t SeedPlan::sweep() const { return derive_seed(master, {kSweep}); }

json cmd_generate(const ExperimentConfig& cfg) {
  cfg.validate();
  const fs::path data_dir = cfg.out / "data";
  ensure_dir(data_dir);
  const fs::path manifest_path = data_dir / "manifest.json";
  std::error_code ec;
  fs::remove(manifest_path, ec);

  const SeedPlan seeds{cfg.seed};
  const nn::TrainingSetConfig tcfg = cfg.training_set();
  std::vector<json> members(static_cast<std::size_t>(cfg.ensemble));
  parallel_for(members.size(), cfg.jobs, [&](std::size_t m) {
    const int member = static_cast<int>(m);
    const fs::path dir = data_dir / ("member_" + two_digits(member));
    ensure_dir(dir);
    const auto orbits = nn::generate_training_orbits(tcfg, seeds.data(member));
    json files = json::array();
    for (const auto& o : orbits) {
      std::size_t ip = 0;
      while (tcfg.param_sets[ip] != o.spec.params) ++ip;
      const std::string name = "orbit_p" + std::to_string(ip) + "_e" + std::to_string(o.energy_index) +
                               "_o" + std::to_string(o.orbit_index) + ".csv";
      write_trajectory_csv(dir / name, o.trajectory, o.spec);
      files.push_back({{"path", (fs::path("member_" + two_digits(member)) / name).generic_string()},
                       {"params", o.spec.params},
                       {"excitation", o.excitation},
                       {"energy", o.trajectory.energy},
                       {"energy_index", o.energy_index},
                       {"orbit_index", o.orbit_index},
                       {"seed", o.seed}});
    }
    members[m] = json{{"member", member},
                      {"data_seed", seeds.data(member)},
                      {"init_seed", seeds.init(member)},
                      {"shuffle_seed", seeds.shuffle(member)},
                      {"files", files}};
  });

  json manifest = header(cfg, "manifest");
  manifest["config"] = cfg.to_text();
  manifest["train_params"] = params_json(cfg.train_params);
  manifest["members"] = members;
  write_json(manifest_path, manifest);
  return manifest;
}

json cmd_train(const ExperimentConfig& cfg) {
  cfg.validate();
  const json manifest = read_json(cfg.out / "data" / "manifest.json", "data manifest (run generate first)");
  const SystemKind kind = parse_system_kind(manifest.at("system").get<std::string>());
  require(kind == cfg.system, "train: manifest system does not match the configuration");
  const auto& members = manifest.at("members");
  require(static_cast<int>(members.size()) >= cfg.ensemble,
          "train: manifest has fewer members than train.ensemble");
  const fs::path model_dir = cfg.out / "models";
  ensure_dir(model_dir);

  const SeedPlan seeds{cfg.seed};
  std::vector<json> records(static_cast<std::size_t>(cfg.ensemble));
  parallel_for(records.size(), cfg.jobs, [&](std::size_t m) {
    const int member = static_cast<int>(m);
    std::vector<nn::SampleBatch> parts;
    for (const auto& f : members.at(m).at("files")) {
      const Trajectory traj = read_trajectory_csv(cfg.out / "data" / f.at("path").get<std::string>());
      const auto params = f.at("params").get<std::vector<double>>();
      parts.push_back(cfg.targets == nn::TargetMode::Analytic
                          ? nn::analytic_targets(traj, make_spec(kind, params))
                          : nn::derivative_targets(traj, params));
    }
    const nn::SampleBatch data = nn::SampleBatch::concatenate(parts);
    nn::TrainConfig tc = cfg.train;
    tc.seed = seeds.shuffle(member);
    const int every = std::max(1, tc.epochs / 10);
    nn::TrainResult result = nn::train(data, tc, seeds.init(member), [&](int epoch, double loss) {
      if (epoch % every == 0) {
        std::clog << "member " << member << " epoch " << epoch << " loss " << format_double(loss)
                  << "\n";
      }
    });
    result.model.training_params = cfg.train_params;
    const std::string model_name = "member_" + two_digits(member) + ".json";
    const std::string history_name = "history_" + two_digits(member) + ".csv";
    nn::save_model(model_dir / model_name, result.model);
    CsvTable history{{"epoch", "loss"}, {}};
    for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
      history.rows.push_back({static_cast<double>(e), result.loss_history[e]});
    }
    write_csv(model_dir / history_name, history);
    records[m] = json{{"member", member},
                      {"model", model_name},
                      {"history", history_name},
                      {"samples", data.size()},
                      {"initial_loss", result.loss_history.front()},
                      {"final_loss", result.final_loss},
                      {"init_seed", seeds.init(member)},
                      {"shuffle_seed", seeds.shuffle(member)}};
  });

  json summary = header(cfg, "train");
  summary["epochs"] = cfg.train.epochs;
  summary["layer_dims"] = nn::default_layer_dims(param_count(kind), 2 * degrees_of_freedom(kind),
                                                 cfg.train.hidden_layers, cfg.train.hidden_width);
  summary["members"] = records;
  write_json(model_dir / "summary.json", summary);
  return summary;
}

nn::HnnEnsemble load_ensemble(const fs::path& run_dir) {
  const json summary = read_json(run_dir / "models" / "summary.json", "model summary (run train first)");
  nn::HnnEnsemble ens;
  for (const auto& m : summary.at("members")) {
    ens.members.push_back(nn::load_model(run_dir / "models" / m.at("model").get<std::string>()));
  }
  ens.validate();
  return ens;
}

namespace {

json analyze_potential(const ExperimentConfig& cfg, const nn::HnnEnsemble& ens, const fs::path& dir) {
  const nn::HamiltonianFn predictor = nn::hamiltonian_of(ens);
  json rows = json::array();
  if (cfg.system == SystemKind::Morse) {
    CsvTable table{{"a", "mean_abs_error", "max_abs_error"}, {}};
    for (const auto& p : cfg.analyze_params) {
      const SystemSpec spec = make_spec(cfg.system, p);
      const auto profile = analysis::potential_profile(predictor, spec, cfg.profile_x_min,
                                                       cfg.profile_x_max, cfg.profile_points);
      write_csv(dir / ("potential_profile_" + tag(p) + ".csv"),
                analysis::potential_profile_table(profile));
      double sum = 0.0;
      double worst = 0.0;
      for (std::size_t i = 0; i < profile.x.size(); ++i) {
        const double e = std::abs(profile.v_pred[i] - profile.v_true[i]);
        sum += e;
        worst = std::max(worst, e);
      }
      const double mean = sum / static_cast<double>(profile.x.size());
      table.rows.push_back({p[0], mean, worst});
      rows.push_back({{"params", p}, {"mean_abs_error", mean}, {"max_abs_error", worst}});
    }
    write_csv(dir / "potential_error.csv", table);
    return rows;
  }

  CsvTable table{{}, {}};
  for (std::size_t i = 1; i <= param_count(cfg.system); ++i) {
    table.header.push_back(cfg.system == SystemKind::HenonHeiles ? "alpha" : "alpha" + std::to_string(i));
  }
  table.header.push_back("delta_V");
  table.header.push_back("n_mask");
  for (const auto& p : cfg.analyze_params) {
    const SystemSpec spec = make_spec(cfg.system, p);
    analysis::GridConfig grid;
    grid.resolution = cfg.grid_resolution;
    double dv = std::numeric_limits<double>::quiet_NaN();
    long n_mask = 0;
    try {
      const auto result = analysis::potential_error(predictor, spec, grid);
      dv = result.relative_error;
      n_mask = result.grid.mask.count();
      write_csv(dir / ("potential_grid_" + tag(p) + ".csv"), analysis::potential_grid_table(result.grid));
    } catch (const NumericalError& e) {
      std::clog << "potential " << tag(p) << ": " << e.what() << "\n";
    }
    std::vector<double> row = p;
    row.push_back(dv);
    row.push_back(static_cast<double>(n_mask));
    table.rows.push_back(row);
    rows.push_back({{"params", p}, {"delta_V", real_or_null(dv)}, {"n_mask", n_mask}});
  }
  write_csv(dir / "potential_error.csv", table);
  return rows;
}

json analyze_taylor(const ExperimentConfig& cfg, const nn::HnnEnsemble& ens, const fs::path& dir) {
  require_planar(cfg, "taylor mode");
  const nn::HamiltonianFn predictor = nn::hamiltonian_of(ens);
  const auto& exps = analysis::taylor_exponents();
  CsvTable wide{{}, {}};
  for (std::size_t i = 1; i <= param_count(cfg.system); ++i) {
    wide.header.push_back(cfg.system == SystemKind::HenonHeiles ? "alpha" : "alpha" + std::to_string(i));
  }
  for (const auto& e : exps) {
    wide.header.push_back("beta_" + std::to_string(e[0]) + std::to_string(e[1]) + std::to_string(e[2]) +
                          std::to_string(e[3]));
  }
  json rows = json::array();
  const SeedPlan seeds{cfg.seed};
  for (std::size_t i = 0; i < cfg.analyze_params.size(); ++i) {
    const auto& p = cfg.analyze_params[i];
    const SystemSpec spec = make_spec(cfg.system, p);
    const auto coeffs = analysis::taylor_fit(predictor, spec, cfg.taylor_samples,
                                             derive_seed(seeds.taylor(), {i}));
    write_csv(dir / ("taylor_" + tag(p) + ".csv"), analysis::taylor_table(coeffs));
    std::vector<double> row = p;
    row.insert(row.end(), coeffs.beta.begin(), coeffs.beta.end());
    wide.rows.push_back(row);
    rows.push_back({{"params", p},
                    {"beta_2100", coeffs.at(2, 1, 0, 0)},
                    {"beta_0300", coeffs.at(0, 3, 0, 0)}});
  }
  write_csv(dir / "taylor.csv", wide);
  return rows;
}

struct OrbitPair {
  SystemSpec spec;
  Trajectory truth;
  Trajectory predicted;
  bool truncated = false;
};

OrbitPair orbit_pair(const ExperimentConfig& cfg, const nn::HnnEnsemble& ens) {
  OrbitPair pair{make_spec(cfg.system, cfg.orbit_params), {}, {}, false};
  const PhaseState s0 = cfg.orbit_ic.empty() ? default_orbit_ic(cfg.system)
                                             : PhaseState::from_flat(cfg.orbit_ic);
  pair.truth = integrate_system(pair.spec, s0, cfg.dt_internal, cfg.orbit_t_end, cfg.dt_sample);
  try {
    pair.predicted = integrate(nn::learned_field(ens, pair.spec.params), s0, cfg.dt_internal,
                               cfg.orbit_t_end, cfg.dt_sample);
  } catch (const TruncatedTrajectoryError& e) {
    pair.predicted = e.partial();
    pair.truncated = true;
  }
  return pair;
}

json analyze_orbit(const ExperimentConfig& cfg, const nn::HnnEnsemble& ens, const fs::path& dir) {
  const OrbitPair pair = orbit_pair(cfg, ens);
  const std::string t = tag(pair.spec.params);
  write_csv(dir / ("orbit_" + t + "_true.csv"), trajectory_table(pair.truth, pair.spec));

  CsvTable pred = trajectory_table(pair.predicted, pair.spec);
  pred.header.push_back("H_pred");
  const nn::HamiltonianFn h = nn::hamiltonian_of(ens);
  Eigen::MatrixXd inputs(static_cast<Eigen::Index>(ens.input_width()),
                         static_cast<Eigen::Index>(pair.predicted.size()));
  for (std::size_t i = 0; i < pair.predicted.size(); ++i) {
    const auto in = nn::assemble_input(pair.spec.params, pair.predicted.states[i]);
    inputs.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(in.data(), inputs.rows());
  }
  const Eigen::RowVectorXd hp = h(inputs);
  double h_pred_drift = 0.0;
  double h_true_drift_pred = 0.0;
  for (std::size_t i = 0; i < pair.predicted.size(); ++i) {
    pred.rows[i].push_back(hp(static_cast<Eigen::Index>(i)));
    h_pred_drift = std::max(h_pred_drift, std::abs(hp(static_cast<Eigen::Index>(i)) - hp(0)));
    h_true_drift_pred = std::max(
        h_true_drift_pred, std::abs(total_energy(pair.spec, pair.predicted.states[i]) - pair.truth.energy));
  }
  write_csv(dir / ("orbit_" + t + "_pred.csv"), pred);

  double h_true_drift = 0.0;
  for (const auto& s : pair.truth.states) {
    h_true_drift = std::max(h_true_drift, std::abs(total_energy(pair.spec, s) - pair.truth.energy));
  }
  const double scale = pair.truth.energy - minimum_energy(pair.spec);
  return json{{"params", pair.spec.params},
              {"initial_state", std::vector<double>(pair.truth.states.front().flat().begin(),
                                                    pair.truth.states.front().flat().end())},
              {"energy", pair.truth.energy},
              {"t_end", cfg.orbit_t_end},
              {"truncated", pair.truncated},
              {"true_orbit_energy_drift", h_true_drift},
              {"predicted_orbit_true_energy_drift", h_true_drift_pred},
              {"predicted_orbit_h_pred_drift", h_pred_drift},
              {"predicted_orbit_h_pred_relative_drift", h_pred_drift / scale}};
}

json analyze_poincare(const ExperimentConfig& cfg, const nn::HnnEnsemble& ens, const fs::path& dir) {
  require_planar(cfg, "poincare mode");
  const OrbitPair pair = orbit_pair(cfg, ens);
  const std::string t = tag(pair.spec.params);
  json out{{"params", pair.spec.params}, {"truncated", pair.truncated}};
  for (const auto& [name, traj] : {std::pair{"true", &pair.truth}, std::pair{"pred", &pair.predicted}}) {
    const auto points = poincare_section(*traj, 0, 0.0, CrossingDirection::Increasing);
    CsvTable table{{"t", "q2", "p2"}, {}};
    for (const auto& pt : points) table.rows.push_back({pt.t, pt.q, pt.p});
    write_csv(dir / ("poincare_" + t + "_" + name + ".csv"), table);
    out[std::string("points_") + name] = points.size();
  }
  return out;
}

const char* mode_name(AnalyzeMode mode) {
  switch (mode) {
    case AnalyzeMode::Potential: return "potential";
    case AnalyzeMode::Taylor: return "taylor";
    case AnalyzeMode::Poincare: return "poincare";
    case AnalyzeMode::Orbit: return "orbit";
  }
  return "potential";
}

}  // namespace

json cmd_analyze(const ExperimentConfig& cfg, AnalyzeMode mode) {
  cfg.validate();
  const nn::HnnEnsemble ens = load_ensemble(cfg.out);
  require(ens.param_channels() == param_count(cfg.system) &&
              ens.dof() == degrees_of_freedom(cfg.system),
          "analyze: models do not match the configured system");
  const fs::path dir = cfg.out / "analysis";
  ensure_dir(dir);
  json summary = header(cfg, "analysis");
  summary["mode"] = mode_name(mode);
  summary["ensemble"] = ens.members.size();
  switch (mode) {
    case AnalyzeMode::Potential: summary["results"] = analyze_potential(cfg, ens, dir); break;
    case AnalyzeMode::Taylor: summary["results"] = analyze_taylor(cfg, ens, dir); break;
    case AnalyzeMode::Poincare: summary["results"] = analyze_poincare(cfg, ens, dir); break;
    case AnalyzeMode::Orbit: summary["results"] = analyze_orbit(cfg, ens, dir); break;
  }
  write_json(dir / (std::string(mode_name(mode)) + ".json"), summary);
  return summary;
}

json cmd_sweep(const ExperimentConfig& cfg, SweepSource source) {
  cfg.validate();
  require_planar(cfg, "sweep");
  const chaos::SweepConfig sc = cfg.sweep_config();
  const SystemKind kind = cfg.system;
  const chaos::SpecFactory spec_of = [kind](double a) { return sweep_spec(kind, a); };

  nn::HnnEnsemble ens;
  chaos::FieldFactory field_of;
  if (source == SweepSource::True) {
    field_of = [](const SystemSpec& s) { return true_field(s); };
  } else {
    ens = load_ensemble(cfg.out);
    field_of = [&ens](const SystemSpec& s) { return nn::learned_field(ens, s.params); };
  }
  const fs::path dir = cfg.out / "sweep";
  ensure_dir(dir);
  const chaos::ChaosReport report = chaos::chaos_sweep(spec_of, field_of, sc);

  const std::string name = source == SweepSource::True ? "true" : "learned";
  write_csv(dir / (name + ".csv"), chaos::chaos_report_table(report));
  if (sc.keep_orbits) write_csv(dir / (name + "_orbits.csv"), chaos::chaos_orbit_table(report));

  int invalid = 0;
  for (int v : report.n_valid) invalid += report.n_initial_conditions - v;
  const double total = static_cast<double>(report.alphas.size()) * report.n_initial_conditions;
  const double invalid_fraction = invalid / total;
  json summary = header(cfg, "sweep");
  summary["source"] = name;
  summary["energy"] = report.energy;
  summary["n_alphas"] = report.alphas.size();
  summary["n_initial_conditions"] = report.n_initial_conditions;
  summary["t_end"] = cfg.sweep_t_end;
  summary["dt"] = cfg.sweep_dt;
  summary["sweep_seed"] = sc.seed;
  summary["transition_alpha"] = real_or_null(report.transition_alpha(0.05));
  summary["invalid_orbits"] = invalid;
  summary["invalid_fraction"] = invalid_fraction;
  summary["low_confidence"] = invalid_fraction > 0.1;
  write_json(dir / (name + ".json"), summary);
  return summary;
}

}  // namespace hamlearn::experiment
