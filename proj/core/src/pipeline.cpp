#include "patchepi/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "patchepi/error.hpp"
#include "patchepi/invasion.hpp"
#include "patchepi/report.hpp"

namespace patchepi {

using nlohmann::json;

namespace {

constexpr double kHarnackFloorFactor = 100.0;

json to_array(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json to_json(const std::vector<int>& v) {
  json out = json::array();
  // Patches are reported 1-based.
  for (int i : v) out.push_back(i + 1);
  return out;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json state_json(const State& s) {
  return {{"S", to_array(s.S)}, {"I1", to_array(s.I1)}, {"I2", to_array(s.I2)}};
}

json outcome_json(const Outcome& o) {
  json w = json::object();
  const std::array<const char*, 3> names{"S", "I1", "I2"};
  for (int c = 0; c < 3; ++c) {
    w[names[c]] = {{"min", o.window.min[c]}, {"max", o.window.max[c]}};
  }
  w["t_begin"] = o.window.t_begin;
  return {{"verdict", std::string(to_string(o.verdict))}, {"terminal_window", w}};
}

json spectral_json(const SpectralReport& r) {
  json risk = {{"sigma1", to_json(r.risk.sigma1)},
               {"sigma2", to_json(r.risk.sigma2)},
               {"sigma0", to_json(r.risk.sigma0)},
               {"H1_plus", to_json(r.risk.high[0])},
               {"H1_minus", to_json(r.risk.low[0])},
               {"H2_plus", to_json(r.risk.high[1])},
               {"H2_minus", to_json(r.risk.low[1])}};
  json local = json::array();
  for (Eigen::Index l = 0; l < r.local_matrix.rows(); ++l) {
    local.push_back(to_array(r.local_matrix.row(l).transpose()));
  }
  json out = {{"R0", {{"strain1", r.r0_per_strain[0]}, {"strain2", r.r0_per_strain[1]}}},
              {"R0_max", r.r0},
              {"lambda_star", {{"strain1", r.lambda_star_per_strain[0]},
                               {"strain2", r.lambda_star_per_strain[1]}}},
              {"local_reproduction", local},
              {"risk_sets", risk},
              {"laplacian_eigenvalues", to_array(r.laplacian.eigenvalues)},
              {"spectral_gap", r.laplacian.gap}};
  if (r.invasion) {
    out["invasion"] = {{"strain1", (*r.invasion)[0]}, {"strain2", (*r.invasion)[1]}};
  } else {
    out["invasion"] = nullptr;
  }
  return out;
}

json equilibrium_json(const Equilibrium& e) {
  return {{"kind", std::string(to_string(e.kind))},
          {"state", state_json(e.state)},
          {"residual", e.residual},
          {"stability", std::string(to_string(e.stability))},
          {"leading_eigenvalue", finite_or_null(e.leading_eigenvalue)}};
}

json monitors_json(const MonitorSummary& m) {
  json out = {{"max_mass_error", m.max_mass_error}, {"min_entry", m.min_entry}};
  if (m.lyapunov) {
    out["lyapunov"] = {{"applicable", m.lyapunov->applicable},
                       {"increases", m.lyapunov->increases},
                       {"max_increase", m.lyapunov->max_increase}};
  }
  if (m.harnack) {
    const HarnackReport& h = *m.harnack;
    json per = json::object();
    for (int l = 0; l < 2; ++l) {
      per[l == 0 ? "strain1" : "strain2"] = {{"c_tilde", finite_or_null(h.c_tilde[l])},
                                             {"checked", h.checked[l]},
                                             {"skipped", h.skipped[l]},
                                             {"violations", h.violations[l]},
                                             {"worst_ratio", finite_or_null(h.worst_ratio[l])}};
    }
    out["harnack"] = per;
  }
  if (m.persistence) {
    const PersistenceReport& p = *m.persistence;
    if (p.applicable) {
      out["persistence"] = {{"status", p.holds ? "Holds" : "Violated"},
                            {"observed_min", p.observed_min},
                            {"observed_max", p.observed_max},
                            {"lower_margin", p.lower_margin},
                            {"upper_margin", p.upper_margin}};
    } else {
      out["persistence"] = {{"status", "NotApplicable"}};
    }
  }
  return out;
}

json sweep_json(const SweepRow& row) {
  json out = {{"dS", row.rates.dS}, {"d1", row.rates.d1}, {"d2", row.rates.d2},
              {"R0", {{"strain1", row.r0[0]}, {"strain2", row.r0[1]}}}};
  out["invasion"] = row.invasion ? json{{"strain1", (*row.invasion)[0]}, {"strain2", (*row.invasion)[1]}}
                                 : json(nullptr);
  out["verdict"] = row.outcome ? json(std::string(to_string(row.outcome->verdict))) : json(nullptr);
  out["failed"] = row.failed();
  if (row.failed()) out["error"] = row.error;
  return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "dS,d1,d2,R0_1,R0_2,invasion_1,invasion_2,verdict,error\n";
  for (const SweepRow& r : rows) {
    out += format_number(r.rates.dS) + "," + format_number(r.rates.d1) + "," +
           format_number(r.rates.d2) + "," + format_number(r.r0[0]) + "," +
           format_number(r.r0[1]) + ",";
    out += r.invasion ? format_number((*r.invasion)[0]) + "," + format_number((*r.invasion)[1]) : ",";
    out += ",";
    out += r.outcome ? std::string(to_string(r.outcome->verdict)) : "";
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out += "," + err + "\n";
  }
  return out;
}

Thresholds thresholds(const ModelSpec& spec, double mass) {
  Thresholds t;
  for (Strain l : kStrains) {
    const int li = index(l);
    try {
      t.critical_ds[li] = critical_ds(spec, mass, l);
    } catch (const Error& e) {
      t.critical_ds_note[li] = std::string(to_string(e.code())) + ": " + e.what();
    }
    t.limit_invasion[li] = limit_invasion(spec, mass, l);
  }
  return t;
}

State mix(const State& a, const State& b) {
  return State{0.5 * (a.S + b.S), a.I1, b.I2};
}

std::vector<Equilibrium> find_equilibria(const ScenarioConfig& config, bool assess) {
  const ModelSpec& spec = config.model;
  const double mass = config.mass();
  std::vector<Equilibrium> out;
  out.push_back(dfe(spec, mass));

  std::array<std::optional<Equilibrium>, 2> single;
  for (Strain l : kStrains) {
    if (!(r0_strain(spec, mass, l) > 1.0)) continue;
    try {
      single[index(l)] = has_uniform_dispersal(spec) ? single_strain_ee_uniform(spec, mass, l)
                                                     : single_strain_ee(spec, mass, l, std::nullopt, config.seed);
      out.push_back(*single[index(l)]);
    } catch (const Error&) {
    }
  }

  if (single[0] && single[1]) {
    std::vector<State> seeds;
    try {
      IntegrationOptions opts = config.integration;
      const Trajectory traj = integrate(spec, config.initial, opts);
      seeds.push_back(traj.states.back());
    } catch (const Error&) {
    }
    seeds.push_back(mix(single[0]->state, single[1]->state));
    seeds.push_back(config.initial);
    for (Equilibrium& e : coexistence_search(spec, mass, seeds, config.seed)) out.push_back(std::move(e));
  }

  if (assess) {
    for (Equilibrium& e : out) {
      if (e.residual < kEquilibriumTolerance) e = stability(spec, std::move(e));
    }
  }
  return out;
}

MonitorSummary monitors(const ScenarioConfig& config, const Trajectory& traj) {
  const ModelSpec& spec = config.model;
  MonitorSummary m;
  m.max_mass_error = traj.max_mass_error();
  m.min_entry = traj.min_entry();
  if (config.analyses.lyapunov) m.lyapunov = lyapunov_summary(spec, traj);
  if (config.analyses.harnack) m.harnack = harnack_for(spec, traj, config.integration);
  if (config.analyses.persistence) {
    const double mass = config.mass();
    const bool both = r0_strain(spec, mass, Strain::One) > 1.0 && r0_strain(spec, mass, Strain::Two) > 1.0;
    m.persistence = persistence_check(traj, theoretical_s_bounds(spec), both);
  }
  return m;
}

void write_trajectory_outputs(const ScenarioConfig& config, const Trajectory& traj,
                              const RunOptions& options, RunSummary& summary) {
  if (!options.write_files) return;
  const std::filesystem::path base = options.out_dir / config.name;
  summary.files.push_back(emit_trajectory_csv(traj, base.string() + "_trajectory.csv"));
  summary.files.push_back(emit_plot_svg(traj, base.string() + "_all.svg", SeriesSelection::all(), config.name));
  summary.files.push_back(emit_plot_svg(traj, base.string() + "_I1.svg", SeriesSelection::only_i1(),
                                        config.name + ": strain 1"));
  summary.files.push_back(emit_plot_svg(traj, base.string() + "_I2.svg", SeriesSelection::only_i2(),
                                        config.name + ": strain 2"));
}

}  // namespace

std::string_view to_string(Command command) {
  switch (command) {
    case Command::Analyze: return "analyze";
    case Command::Simulate: return "simulate";
    case Command::Equilibria: return "equilibria";
    case Command::Classify: return "classify";
    case Command::Sweep: return "sweep";
    case Command::ReproduceAll: return "reproduce-all";
  }
  return "unknown";
}

Command parse_command(std::string_view name) {
  for (Command c : {Command::Analyze, Command::Simulate, Command::Equilibria, Command::Classify,
                    Command::Sweep, Command::ReproduceAll}) {
    if (name == to_string(c)) return c;
  }
  throw Error(ErrorCode::InvalidModel, "unknown command '" + std::string(name) + "'");
}

LyapunovSummary lyapunov_summary(const ModelSpec& spec, const Trajectory& traj) {
  LyapunovSummary s;
  s.applicable = has_constant_local_reproduction(spec, Strain::One) &&
                 has_constant_local_reproduction(spec, Strain::Two);
  for (std::size_t i = 1; i < traj.lyapunov.size(); ++i) {
    const double rise = traj.lyapunov[i] - traj.lyapunov[i - 1];
    s.max_increase = std::max(s.max_increase, rise);
    if (rise > kLyapunovSlack) ++s.increases;
  }
  return s;
}

HarnackReport harnack_for(const ModelSpec& spec, const Trajectory& traj, const IntegrationOptions& opts) {
  const Laplacian lap = build_laplacian(spec.graph);
  const double m_inf = harnack_growth_bound(spec, traj.mass);
  std::array<double, 2> c{};
  for (Strain l : kStrains) c[index(l)] = harnack_constant(spec.strain(l).dispersal, m_inf, lap);
  return harnack_monitor(traj, c, kHarnackFloorFactor * opts.abs_tol);
}

bool RunSummary::reproduction_ok() const {
  return std::all_of(reproduction.begin(), reproduction.end(),
                     [](const ReproductionRow& r) { return !r.expected || r.matches(); });
}

RunSummary run(const ScenarioConfig& config, Command command, const RunOptions& options) {
  if (command == Command::ReproduceAll) return reproduce_all(config.integration, options);

  RunSummary summary;
  summary.scenario = config.name;
  summary.command = std::string(to_string(command));
  summary.mass = config.mass();
  summary.declared_N = config.declared_N;
  summary.warnings = config.warnings;
  const ModelSpec& spec = config.model;
  const double mass = summary.mass;

  switch (command) {
    case Command::Analyze:
      summary.spectral = full_spectral_report(spec, mass, config.seed);
      summary.thresholds = thresholds(spec, mass);
      break;
    case Command::Equilibria:
      summary.equilibria = find_equilibria(config, config.analyses.stability);
      break;
    case Command::Simulate:
    case Command::Classify: {
      if (config.analyses.spectral) summary.spectral = spectral_report(spec, mass);
      const Trajectory traj = integrate(spec, config.initial, config.integration);
      summary.monitors = monitors(config, traj);
      if (command == Command::Classify) summary.outcome = classify_outcome(traj);
      write_trajectory_outputs(config, traj, options, summary);
      break;
    }
    case Command::Sweep: {
      std::vector<DispersalRates> rows = config.all_sweep_rows();
      if (rows.empty()) {
        rows.push_back({spec.dS, spec.strain(Strain::One).dispersal, spec.strain(Strain::Two).dispersal});
      }
      summary.sweep = sweep_dispersal(spec, config.initial, rows, config.integration);
      if (options.write_files) {
        const std::filesystem::path path = options.out_dir / (config.name + "_sweep.csv");
        write_file(path, sweep_csv(summary.sweep));
        summary.files.push_back(path);
      }
      break;
    }
    case Command::ReproduceAll:
      break;
  }

  if (options.write_files) {
    const std::filesystem::path path =
        options.out_dir / (config.name + "_" + std::string(to_string(command)) + "_summary.json");
    summary.files.push_back(path);
    write_file(path, summary_json(summary));
  }
  return summary;
}

RunSummary reproduce_all(const IntegrationOptions& integration, const RunOptions& options) {
  RunSummary summary;
  summary.scenario = "reproduce-all";
  summary.command = std::string(to_string(Command::ReproduceAll));
  RunOptions child = options;
  child.out_dir = options.out_dir / "runs";
  for (const std::string& name : reproduction_runs()) {
    ReproductionRow row;
    row.name = name;
    try {
      ScenarioConfig config = builtin_scenario(name);
      config.integration = integration;
      row.expected = config.expected_verdict;
      for (const std::string& w : config.warnings) summary.warnings.push_back(name + ": " + w);
      const RunSummary r = run(config, Command::Classify, child);
      row.verdict = r.outcome->verdict;
      summary.files.insert(summary.files.end(), r.files.begin(), r.files.end());
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    summary.reproduction.push_back(std::move(row));
  }
  if (options.write_files) {
    const std::filesystem::path path = options.out_dir / "reproduce_all_summary.json";
    summary.files.push_back(path);
    write_file(path, summary_json(summary));
  }
  return summary;
}

std::string summary_json(const RunSummary& s) {
  json doc;
  doc["scenario"] = s.scenario;
  doc["command"] = s.command;
  if (s.command != to_string(Command::ReproduceAll)) doc["N"] = s.mass;
  doc["declared_N"] = s.declared_N ? json(*s.declared_N) : json(nullptr);
  doc["warnings"] = s.warnings;
  if (s.spectral) doc["spectral"] = spectral_json(*s.spectral);
  if (s.thresholds) {
    json t = json::object();
    for (int l = 0; l < 2; ++l) {
      json entry = {{"limit_invasion", s.thresholds->limit_invasion[l]}};
      if (s.thresholds->critical_ds[l]) {
        entry["critical_dS"] = *s.thresholds->critical_ds[l];
      } else {
        entry["critical_dS"] = nullptr;
        entry["critical_dS_note"] = s.thresholds->critical_ds_note[l];
      }
      t[l == 0 ? "strain1" : "strain2"] = entry;
    }
    doc["thresholds"] = t;
  }
  if (s.command == to_string(Command::Equilibria)) {
    json eqs = json::array();
    for (const Equilibrium& e : s.equilibria) eqs.push_back(equilibrium_json(e));
    doc["equilibria"] = eqs;
  }
  if (s.outcome) doc["outcome"] = outcome_json(*s.outcome);
  if (s.monitors) doc["monitors"] = monitors_json(*s.monitors);
  if (s.command == to_string(Command::Sweep)) {
    json rows = json::array();
    for (const SweepRow& r : s.sweep) rows.push_back(sweep_json(r));
    doc["sweep"] = rows;
  }
  if (!s.reproduction.empty()) {
    json rows = json::array();
    for (const ReproductionRow& r : s.reproduction) {
      json row = {{"scenario", r.name},
                  {"verdict", r.verdict ? json(std::string(to_string(*r.verdict))) : json(nullptr)},
                  {"expected", r.expected ? json(std::string(to_string(*r.expected))) : json(nullptr)},
                  {"matches", r.matches()}};
      if (!r.error.empty()) row["error"] = r.error;
      rows.push_back(row);
    }
    doc["reproduction"] = rows;
  }
  json files = json::array();
  for (const auto& f : s.files) files.push_back(f.generic_string());
  doc["files"] = files;
  return doc.dump(2) + "\n";
}

std::string summary_text(const RunSummary& s) {
  std::ostringstream os;
  os << s.command << ' ' << s.scenario;
  if (s.command != to_string(Command::ReproduceAll)) os << " N=" << format_number(s.mass);
  os << '\n';
  for (const std::string& w : s.warnings) os << "warning: " << w << '\n';
  if (s.spectral) {
    os << "R0 strain1=" << format_number(s.spectral->r0_per_strain[0])
       << " strain2=" << format_number(s.spectral->r0_per_strain[1]) << '\n';
    if (s.spectral->invasion) {
      os << "invasion strain1=" << format_number((*s.spectral->invasion)[0])
         << " strain2=" << format_number((*s.spectral->invasion)[1]) << '\n';
    }
  }
  for (const Equilibrium& e : s.equilibria) {
    os << to_string(e.kind) << " residual=" << format_number(e.residual) << ' '
       << to_string(e.stability) << '\n';
  }
  if (s.outcome) os << "verdict " << to_string(s.outcome->verdict) << '\n';
  if (s.monitors && s.monitors->harnack) {
    os << "harnack violations " << s.monitors->harnack->total_violations() << '\n';
  }
  for (const SweepRow& r : s.sweep) {
    os << "dS=" << format_number(r.rates.dS) << " d1=" << format_number(r.rates.d1)
       << " d2=" << format_number(r.rates.d2) << ' '
       << (r.failed() ? "failed: " + r.error
                      : std::string(r.outcome ? to_string(r.outcome->verdict) : "n/a"))
       << '\n';
  }
  for (const ReproductionRow& r : s.reproduction) {
    os << r.name << ' ' << (r.verdict ? to_string(*r.verdict) : "error") << " expected "
       << (r.expected ? to_string(*r.expected) : "-") << (r.matches() ? " ok" : " MISMATCH")
       << (r.error.empty() ? "" : " (" + r.error + ")") << '\n';
  }
  return os.str();
}

}  // namespace patchepi
