// calaflow: batch driver for Calabi-flow experiments on periodic symplectic
// potentials. Subcommands: run, analyze, blowup, legendre, plot.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "calaflow/errors.hpp"
#include "calaflow/flow.hpp"
#include "calaflow/geometry.hpp"
#include "calaflow/legendre.hpp"
#include "calaflow/potential.hpp"
#include "calaflow/snapshot.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using namespace calaflow;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitIo = 3;

std::string snapshot_name(std::int64_t step_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "snapshot_%06lld.json",
                static_cast<long long>(step_index));
  return buf;
}

int cmd_run(const std::string& config_path, const std::string& out_dir) {
  RunSetup setup = parse_config(config_path);
  fs::create_directories(out_dir);
  const std::string started = current_timestamp();

  SymplecticPotential u0(setup.c, setup.psi0);
  CsvWriter csv(fs::path(out_dir) / "run.csv");

  // Records stream into the CSV as the run produces them, one flush per row.
  FlowTrace trace =
      run(u0, setup.flow,
          [&csv](const DiagnosticsRecord& r, const FlowState&) { csv.write(r); });

  std::int64_t index = 0;
  for (const FlowState& s : trace.snapshots) {
    write_snapshot(Snapshot::from_state(s), fs::path(out_dir) / snapshot_name(index));
    ++index;
  }

  write_manifest(fs::path(out_dir) / "manifest.json", setup, started,
                 current_timestamp(), trace.termination);

  if (trace.termination == Termination::stiffness_failure ||
      trace.termination == Termination::blowup_suspected) {
    std::cerr << "run terminated: " << termination_name(trace.termination) << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

ordered_json analyze_potential(const SymplecticPotential& u, double t) {
  Energies e = energies(u);
  PeriodicField rm = riemann_norm(u);
  PeriodicField tp = trace_pairing(u);
  const HessianData& H = u.hessian();
  const GridSpec& g = u.spec();

  std::vector<double> rm_n(rm.values().begin(), rm.values().end());
  for (double& v : rm_n) {
    double p = v;
    for (int a = 1; a < g.n; ++a) p *= v;
    v = p;
  }
  double tp_max = -1e300;
  for (std::int64_t f = 0; f < tp.size(); ++f) tp_max = std::max(tp_max, tp[f]);

  MConditionReport mrep = m_condition_estimate(u, 64, 0);
  SupNorms sn = sup_norms(u);

  ordered_json j;
  j["t"] = t;
  j["Ca"] = e.Ca;
  j["Ma"] = e.Ma;
  j["L2"] = e.L2;
  j["psi_mean"] = e.psi_mean;
  j["max_Rm"] = rm.max_abs();
  j["total_energy_n"] = integrate(PeriodicField(g, std::move(rm_n)));
  j["eig_min"] = H.eig_min_global;
  j["eig_max"] = H.eig_max_global;
  j["trace_pairing_max"] = tp_max;
  j["M_estimate"] = mrep.M_estimate;
  j["sup_u"] = sn.sup_u;
  j["sup_grad_u"] = sn.sup_grad;
  j["inj_proxy"] = 0.5 * g.scale *
                   std::min(std::sqrt(H.eig_min_global),
                            1.0 / std::sqrt(H.eig_max_global));
  return j;
}

int cmd_analyze(const std::string& snapshot_path) {
  Snapshot snap = read_snapshot(snapshot_path);
  SymplecticPotential u = snap.potential();
  std::cout << analyze_potential(u, snap.t).dump(2) << "\n";
  return kExitOk;
}

int cmd_blowup(const std::string& snapshot_path, const std::string& out_path) {
  Snapshot snap = read_snapshot(snapshot_path);
  FlowTrace trace;
  trace.snapshots.push_back(FlowState{snap.t, snap.potential()});

  PeriodicField rm = riemann_norm(trace.snapshots[0].u);
  const double lam = rm.max_abs();
  SymplecticPotential extracted = blowup_extract(trace, snap.t);

  Snapshot out;
  out.t = snap.t;
  out.c = extracted.c();
  out.spec = extracted.spec();
  out.psi.assign(extracted.psi().values().begin(), extracted.psi().values().end());

  ordered_json report;
  report["lambda"] = lam;
  report["time_dilation"] = lam * lam;  // the blown-up flow runs at t' = lambda^2 t
  report["max_Rm_after"] = riemann_norm(extracted).max_abs();
  std::cout << report.dump(2) << "\n";

  if (!out_path.empty()) write_snapshot(out, out_path);
  return kExitOk;
}

int cmd_legendre(const std::string& snapshot_path, const std::string& direction,
                 const std::string& out_path) {
  Snapshot snap = read_snapshot(snapshot_path);
  Snapshot out = snap;
  if (direction == "to-kahler") {
    KahlerPotential v = to_kahler(snap.potential());
    out.psi.assign(v.phi().values().begin(), v.phi().values().end());
    out.c = 1.0;
  } else if (direction == "to-symplectic") {
    SymplecticPotential u = to_symplectic(KahlerPotential(
        PeriodicField(snap.spec, snap.psi)));
    out.psi.assign(u.psi().values().begin(), u.psi().values().end());
    out.c = u.c();
  } else {
    throw ConfigError("legendre: direction must be to-kahler or to-symplectic");
  }
  if (out_path.empty())
    std::cout << snapshot_to_json(out) << "\n";
  else
    write_snapshot(out, out_path);
  return kExitOk;
}

// Minimal SVG line chart of selected CSV columns against t.
int cmd_plot(const std::string& csv_path, const std::string& cols_arg, bool log_scale,
             const std::string& out_path) {
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open CSV: " + csv_path);
  std::string header;
  if (!std::getline(in, header)) throw ConfigError("plot: empty CSV");

  std::vector<std::string> names;
  {
    std::stringstream ss(header);
    std::string cell;
    while (std::getline(ss, cell, ',')) names.push_back(cell);
  }
  std::vector<std::string> want;
  {
    std::stringstream ss(cols_arg);
    std::string cell;
    while (std::getline(ss, cell, ',')) want.push_back(cell);
  }
  std::vector<int> col_idx;
  for (const std::string& w : want) {
    auto it = std::find(names.begin(), names.end(), w);
    if (it == names.end()) throw ConfigError("plot: no CSV column named \"" + w + "\"");
    col_idx.push_back(static_cast<int>(it - names.begin()));
  }

  std::vector<double> ts;
  std::vector<std::vector<double>> series(col_idx.size());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != names.size()) continue;  // tolerate a truncated last line
    ts.push_back(row[0]);
    for (std::size_t s = 0; s < col_idx.size(); ++s)
      series[s].push_back(row[col_idx[s]]);
  }
  if (ts.empty()) throw ConfigError("plot: no data rows");

  const double W = 720, Hh = 480, ml = 70, mr = 20, mt = 20, mb = 45;
  double ymin = 1e300, ymax = -1e300;
  auto transform = [&](double v) {
    return log_scale ? std::log10(std::max(v, 1e-300)) : v;
  };
  for (const auto& s : series)
    for (double v : s) {
      if (log_scale && v <= 0.0) continue;
      ymin = std::min(ymin, transform(v));
      ymax = std::max(ymax, transform(v));
    }
  if (ymin > ymax) {
    ymin = 0;
    ymax = 1;
  }
  if (ymax == ymin) ymax = ymin + 1;
  const double tmin = ts.front(), tmax = std::max(ts.back(), ts.front() + 1e-300);

  auto px = [&](double t) { return ml + (t - tmin) / (tmax - tmin) * (W - ml - mr); };
  auto py = [&](double yv) {
    return Hh - mb - (yv - ymin) / (ymax - ymin) * (Hh - mt - mb);
  };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << Hh << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << Hh - mb << "\" x2=\"" << W - mr
      << "\" y2=\"" << Hh - mb << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
      << Hh - mb << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << Hh - 10
      << "\" text-anchor=\"middle\" font-size=\"13\">t</text>\n";
  svg << "<text x=\"" << ml << "\" y=\"" << Hh - mb + 16
      << "\" text-anchor=\"middle\" font-size=\"11\">" << format_double(tmin)
      << "</text>\n";
  svg << "<text x=\"" << W - mr << "\" y=\"" << Hh - mb + 16
      << "\" text-anchor=\"end\" font-size=\"11\">" << format_double(tmax)
      << "</text>\n";
  const std::string ylab = log_scale ? "log10" : "value";
  svg << "<text x=\"12\" y=\"" << mt + 10 << "\" font-size=\"11\">" << ylab << " "
      << format_double(log_scale ? ymax : ymax) << "</text>\n";
  svg << "<text x=\"12\" y=\"" << Hh - mb << "\" font-size=\"11\">"
      << format_double(ymin) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    svg << "<polyline fill=\"none\" stroke=\"" << kColors[s % 6]
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double v = series[s][i];
      if (log_scale && v <= 0.0) continue;
      svg << px(ts[i]) << "," << py(transform(v)) << " ";
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << W - mr - 8 << "\" y=\"" << mt + 16 + 16 * s
        << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << kColors[s % 6]
        << "\">" << want[s] << "</text>\n";
  }
  svg << "</svg>\n";

  std::ofstream out(out_path);
  if (!out) throw IoError("cannot write SVG: " + out_path);
  out << svg.str();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calabi flow laboratory on the torus"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  auto* run_cmd = app.add_subcommand("run", "integrate a flow from a config file");
  run_cmd->add_option("config", config_path, "JSON config file")->required();
  run_cmd->add_option("--out", out_dir, "output directory")->required();

  std::string snapshot_path;
  auto* analyze_cmd = app.add_subcommand("analyze", "diagnostics of one snapshot");
  analyze_cmd->add_option("snapshot", snapshot_path, "snapshot JSON")->required();

  std::string blow_snapshot, blow_out;
  auto* blow_cmd = app.add_subcommand("blowup", "curvature-normalizing rescale");
  blow_cmd->add_option("snapshot", blow_snapshot, "snapshot JSON")->required();
  blow_cmd->add_option("--out", blow_out, "write the extracted potential here");

  std::string leg_snapshot, leg_dir, leg_out;
  auto* leg_cmd = app.add_subcommand("legendre", "Legendre transform of a snapshot");
  leg_cmd->add_option("snapshot", leg_snapshot, "snapshot JSON")->required();
  leg_cmd->add_option("--direction", leg_dir, "to-kahler | to-symplectic")->required();
  leg_cmd->add_option("--out", leg_out, "output snapshot path (default stdout)");

  std::string plot_csv, plot_cols = "Ca", plot_out;
  bool plot_log = false;
  auto* plot_cmd = app.add_subcommand("plot", "SVG line chart of CSV columns vs t");
  plot_cmd->add_option("csv", plot_csv, "run.csv produced by `run`")->required();
  plot_cmd->add_option("--cols", plot_cols, "comma-separated column names");
  plot_cmd->add_flag("--log", plot_log, "log10 scale for y");
  plot_cmd->add_option("--out", plot_out, "output SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(config_path, out_dir);
    if (*analyze_cmd) return cmd_analyze(snapshot_path);
    if (*blow_cmd) return cmd_blowup(blow_snapshot, blow_out);
    if (*leg_cmd) return cmd_legendre(leg_snapshot, leg_dir, leg_out);
    if (*plot_cmd) return cmd_plot(plot_csv, plot_cols, plot_log, plot_out);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
