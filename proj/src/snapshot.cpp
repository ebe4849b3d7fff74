#include "calaflow/snapshot.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include <json.hpp>

#include "calaflow/errors.hpp"

namespace calaflow {

using ordered_json = nlohmann::ordered_json;

std::string tool_version() { return "0.1.0"; }

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

SymplecticPotential Snapshot::potential() const {
  return SymplecticPotential(c, PeriodicField(spec, psi));
}

Snapshot Snapshot::from_state(const FlowState& state) {
  Snapshot s;
  s.t = state.t;
  s.c = state.u.c();
  s.spec = state.u.spec();
  s.psi.assign(state.u.psi().values().begin(), state.u.psi().values().end());
  return s;
}

std::string snapshot_to_json(const Snapshot& snap) {
  ordered_json j;
  j["t"] = snap.t;
  j["n"] = snap.spec.n;
  j["N"] = snap.spec.N;
  j["scale"] = snap.spec.scale;
  j["c"] = snap.c;
  j["psi"] = snap.psi;
  j["fmt"] = 1;
  return j.dump();
}

Snapshot snapshot_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("snapshot: invalid JSON: ") + e.what());
  }
  for (const char* key : {"t", "n", "N", "scale", "c", "psi"})
    if (!j.contains(key))
      throw ConfigError(std::string("snapshot: missing field \"") + key + "\"");
  if (j.contains("fmt") && j["fmt"].get<int>() != 1)
    throw ConfigError("snapshot: unsupported fmt version");
  Snapshot s;
  s.t = j["t"].get<double>();
  s.c = j["c"].get<double>();
  s.spec = GridSpec(j["n"].get<int>(), j["N"].get<int>(), j["scale"].get<double>());
  s.psi = j["psi"].get<std::vector<double>>();
  if (static_cast<std::int64_t>(s.psi.size()) != s.spec.num_points())
    throw ConfigError("snapshot: field \"psi\" has wrong length");
  return s;
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open snapshot file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return snapshot_from_json(ss.str());
}

void write_snapshot(const Snapshot& snap, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write snapshot file: " + path.string());
  out << snapshot_to_json(snap) << "\n";
}

PeriodicField cosine_psi(const GridSpec& spec,
                         const std::vector<std::array<int, 3>>& modes,
                         const std::vector<double>& amplitudes,
                         const std::vector<double>& phases) {
  if (modes.size() != amplitudes.size() || modes.size() != phases.size())
    throw ConfigError("cosine IC: modes, amplitudes and phases differ in length");
  const double two_pi = 2.0 * std::acos(-1.0);
  return sample_function(
      [&](const Vec& x) {
        double v = 0.0;
        for (std::size_t m = 0; m < modes.size(); ++m) {
          double arg = phases[m];
          for (int a = 0; a < spec.n; ++a)
            arg += two_pi * modes[m][a] * x[a] / spec.scale;
          v += amplitudes[m] * std::cos(arg);
        }
        return v;
      },
      spec);
}

PeriodicField random_bandlimited_psi(const GridSpec& spec, int kmax,
                                     double amplitude, std::uint64_t seed) {
  if (kmax < 1) throw ConfigError("random_bandlimited IC: kmax must be >= 1");
  // One mode per nonzero half-lattice point, deterministic enumeration order.
  std::vector<std::array<int, 3>> modes;
  Idx k{0, 0, 0};
  std::vector<int> lo(spec.n, -kmax), hi(spec.n, kmax);
  std::function<void(int)> enumerate = [&](int axis) {
    if (axis == spec.n) {
      // Keep one representative of each +/-k pair: first nonzero entry > 0.
      for (int a = 0; a < spec.n; ++a) {
        if (k[a] > 0) {
          modes.push_back({k[0], k[1], k[2]});
          return;
        }
        if (k[a] < 0) return;
      }
      return;  // k = 0 excluded
    }
    for (int v = lo[axis]; v <= hi[axis]; ++v) {
      k[axis] = v;
      enumerate(axis + 1);
    }
  };
  enumerate(0);

  std::mt19937_64 rng(seed);
  std::vector<double> amplitudes, phases;
  const double two_pi = 2.0 * std::acos(-1.0);
  for (std::size_t m = 0; m < modes.size(); ++m) {
    amplitudes.push_back(amplitude * (2.0 * rng_unit(rng()) - 1.0));
    phases.push_back(two_pi * rng_unit(rng()));
  }
  return cosine_psi(spec, modes, amplitudes, phases);
}

namespace {

const ordered_json& require_field(const ordered_json& j, const char* key,
                                  const char* where) {
  if (!j.contains(key))
    throw ConfigError(std::string("config: missing field \"") + key + "\" in " +
                      where);
  return j.at(key);
}

}  // namespace

RunSetup parse_config_text(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }

  const int n = require_field(j, "n", "top level").get<int>();
  const int N = require_field(j, "N", "top level").get<int>();
  const double scale = j.value("scale", 1.0);
  const double c = j.value("c", 1.0);
  GridSpec spec(n, N, scale);

  const ordered_json& ic = require_field(j, "ic", "top level");
  const std::string family = require_field(ic, "family", "\"ic\"").get<std::string>();

  PeriodicField psi0 = PeriodicField::zeros(spec);
  std::string desc;
  if (family == "flat") {
    desc = "flat";
  } else if (family == "cosine") {
    const ordered_json& modes_j = require_field(ic, "modes", "\"ic\"");
    std::vector<std::array<int, 3>> modes;
    std::vector<double> amps, phases;
    for (const auto& m : modes_j) {
      const auto kv = require_field(m, "k", "cosine mode").get<std::vector<int>>();
      if (static_cast<int>(kv.size()) != n)
        throw ConfigError("config: cosine mode \"k\" must have n entries");
      std::array<int, 3> k{0, 0, 0};
      for (int a = 0; a < n; ++a) k[a] = kv[a];
      modes.push_back(k);
      amps.push_back(require_field(m, "amplitude", "cosine mode").get<double>());
      phases.push_back(m.value("phase", 0.0));
    }
    psi0 = cosine_psi(spec, modes, amps, phases);
    desc = "cosine(" + std::to_string(modes.size()) + " modes)";
  } else if (family == "random_bandlimited") {
    const int kmax = require_field(ic, "kmax", "\"ic\"").get<int>();
    const double amplitude = require_field(ic, "amplitude", "\"ic\"").get<double>();
    const std::uint64_t seed = require_field(ic, "seed", "\"ic\"").get<std::uint64_t>();
    psi0 = random_bandlimited_psi(spec, kmax, amplitude, seed);
    desc = "random_bandlimited(kmax=" + std::to_string(kmax) +
           ", seed=" + std::to_string(seed) + ")";
  } else {
    throw ConfigError("config: unknown ic family \"" + family + "\"");
  }

  const ordered_json& fj = require_field(j, "flow", "top level");
  FlowConfig flow;
  flow.t_end = require_field(fj, "t_end", "\"flow\"").get<double>();
  flow.sigma = fj.value("sigma", 0.1);
  flow.dt_min = fj.value("dt_min", 1e-18);
  if (fj.contains("ca_stop")) flow.ca_stop = fj.at("ca_stop").get<double>();
  flow.record_every = fj.value("record_every", std::int64_t{1});
  flow.m_segments = fj.value("m_segments", std::int64_t{8});
  flow.seed = fj.value("seed", std::uint64_t{0});
  flow.validate();

  RunSetup setup{spec, c, desc, std::move(psi0), flow, j.dump()};
  return setup;
}

RunSetup parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

CsvWriter::CsvWriter(const std::filesystem::path& path)
    : file_(std::fopen(path.string().c_str(), "wb")) {
  if (!file_) throw IoError("cannot open CSV for writing: " + path.string());
  std::fputs(
      "t,dt,Ca,Ma,L2,psi_mean,max_Rm,eig_min,eig_max,M_estimate,inj_proxy,"
      "total_energy_n\n",
      file_);
  std::fflush(file_);
}

CsvWriter::~CsvWriter() {
  if (file_) std::fclose(file_);
}

void CsvWriter::write(const DiagnosticsRecord& r) {
  std::string line;
  const double cols[12] = {r.t,       r.dt,      r.Ca,         r.Ma,
                           r.L2,      r.psi_mean, r.max_Rm,     r.eig_min,
                           r.eig_max, r.M_estimate, r.inj_proxy, r.total_energy_n};
  for (int i = 0; i < 12; ++i) {
    if (i) line += ',';
    line += format_double(cols[i]);
  }
  line += '\n';
  std::fputs(line.c_str(), file_);
  std::fflush(file_);
}

std::string current_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc;
  gmtime_r(&tt, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void write_manifest(const std::filesystem::path& path, const RunSetup& setup,
                    const std::string& started, const std::string& finished,
                    Termination termination) {
  ordered_json j;
  j["version"] = tool_version();
  j["config"] = ordered_json::parse(setup.config_echo);
  j["grid"] = {{"n", setup.spec.n}, {"N", setup.spec.N}, {"scale", setup.spec.scale}};
  j["initial_condition"] = setup.ic_description;
  j["started"] = started;
  j["finished"] = finished;
  j["termination"] = termination_name(termination);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace calaflow
