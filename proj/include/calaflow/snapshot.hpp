#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "calaflow/flow.hpp"
#include "calaflow/potential.hpp"

namespace calaflow {

/// Snapshot file payload: {"t", "n", "N", "scale", "c", "psi", "fmt": 1}
/// with psi row-major.
struct Snapshot {
  double t = 0.0;
  double c = 1.0;
  GridSpec spec;
  std::vector<double> psi;

  SymplecticPotential potential() const;
  static Snapshot from_state(const FlowState& state);
};

std::string snapshot_to_json(const Snapshot& snap);
Snapshot snapshot_from_json(const std::string& text);
Snapshot read_snapshot(const std::filesystem::path& path);
void write_snapshot(const Snapshot& snap, const std::filesystem::path& path);

/// Everything `run` needs, parsed from a config file.
struct RunSetup {
  GridSpec spec;
  double c = 1.0;
  std::string ic_description;
  PeriodicField psi0;
  FlowConfig flow;
  std::string config_echo;  // the parsed config, re-serialized
};

RunSetup parse_config(const std::filesystem::path& path);
RunSetup parse_config_text(const std::string& text);

/// Initial-condition families shared by the config parser and tests.
PeriodicField cosine_psi(const GridSpec& spec,
                         const std::vector<std::array<int, 3>>& modes,
                         const std::vector<double>& amplitudes,
                         const std::vector<double>& phases);
PeriodicField random_bandlimited_psi(const GridSpec& spec, int kmax,
                                     double amplitude, std::uint64_t seed);

/// CSV writer for diagnostics records: fixed column order, header row,
/// shortest round-trip decimals, one flush per record.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;
  void write(const DiagnosticsRecord& rec);

 private:
  std::FILE* file_;
};

std::string format_double(double v);  // shortest round-trip decimal

/// Run manifest: config echo, version, grid and IC descriptions, wall times,
/// termination reason.
void write_manifest(const std::filesystem::path& path, const RunSetup& setup,
                    const std::string& started, const std::string& finished,
                    Termination termination);

std::string tool_version();
std::string current_timestamp();

}  // namespace calaflow
