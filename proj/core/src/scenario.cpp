#include "patchepi/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "patchepi/error.hpp"

namespace patchepi {

using nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::Parse, "field '" + path + "': " + what);
}

const json& require(const json& obj, const char* key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) field_error(path + key, "missing");
  return *it;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) field_error(path, "expected a number");
  return v.get<double>();
}

Vector vector_of(const json& v, const std::string& path) {
  if (!v.is_array()) field_error(path, "expected an array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = number(v[i], path + "[" + std::to_string(i) + "]");
  }
  return out;
}

Matrix matrix_of(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) field_error(path, "expected a nonempty array of rows");
  const std::size_t rows = v.size();
  const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const std::string row_path = path + "[" + std::to_string(i) + "]";
    const Vector row = vector_of(v[i], row_path);
    if (static_cast<std::size_t>(row.size()) != cols) field_error(row_path, "ragged row");
    out.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return out;
}

void check_length(const Vector& v, int k, const std::string& path) {
  if (v.size() != k) {
    throw Error(ErrorCode::DimensionMismatch, "field '" + path + "': length " +
                                                  std::to_string(v.size()) + ", expected " +
                                                  std::to_string(k));
  }
}

void warn_unknown(const json& obj, std::initializer_list<const char*> known,
                  const std::string& path, std::vector<std::string>& warnings) {
  const std::set<std::string> names(known.begin(), known.end());
  for (const auto& [key, value] : obj.items()) {
    if (!names.count(key)) warnings.push_back("unknown field '" + path + key + "' ignored");
  }
}

const std::map<std::string, bool Analyses::*>& analysis_fields() {
  static const std::map<std::string, bool Analyses::*> fields{
      {"spectral", &Analyses::spectral},       {"equilibria", &Analyses::equilibria},
      {"stability", &Analyses::stability},     {"lyapunov", &Analyses::lyapunov},
      {"harnack", &Analyses::harnack},         {"persistence", &Analyses::persistence},
      {"sweep", &Analyses::sweep}};
  return fields;
}

Verdict parse_verdict(const json& v, const std::string& path) {
  if (v.is_string()) {
    for (Verdict cand : {Verdict::DiseaseExtinction, Verdict::Strain1Excluded,
                         Verdict::Strain2Excluded, Verdict::Coexistence, Verdict::Undetermined}) {
      if (v.get<std::string>() == to_string(cand)) return cand;
    }
  }
  field_error(path, "unknown verdict");
}

std::pair<int, int> line_and_column(std::string_view text, std::size_t byte) {
  int line = 1;
  int col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

json to_array(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

ScenarioConfig base_two_patch(std::string name, Vector b1, Vector g1, Vector b2, Vector g2,
                              DispersalRates rates, State initial) {
  ScenarioConfig c;
  c.name = std::move(name);
  c.model.graph = PatchGraph::two_patch(1.0);
  c.model.strains[0] = StrainParams{std::move(b1), std::move(g1), rates.d1};
  c.model.strains[1] = StrainParams{std::move(b2), std::move(g2), rates.d2};
  c.model.dS = rates.dS;
  c.initial = std::move(initial);
  return c;
}

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

State state2(Vector s, Vector i1, Vector i2) { return State{std::move(s), std::move(i1), std::move(i2)}; }

}  // namespace

std::vector<DispersalRates> ScenarioConfig::all_sweep_rows() const {
  std::vector<DispersalRates> rows = sweep_rows;
  const std::vector<DispersalRates> grid = uniform_rates(sweep_grid);
  rows.insert(rows.end(), grid.begin(), grid.end());
  return rows;
}

void finalize(ScenarioConfig& config) {
  const int k = config.model.patches();
  check_length(config.initial.S, k, "initial.S");
  check_length(config.initial.I1, k, "initial.I1");
  check_length(config.initial.I2, k, "initial.I2");
  require_valid(config.model);
  validate(config.integration);

  const Vector x = config.initial.flatten();
  if (!x.allFinite() || x.minCoeff() < 0.0) {
    throw Error(ErrorCode::InvalidModel, "initial state must be finite and nonnegative");
  }
  const double mass = x.sum();
  if (!(mass > 0.0)) throw Error(ErrorCode::InvalidModel, "initial state has zero total mass");

  for (const DispersalRates& r : config.all_sweep_rows()) {
    if (!(r.dS > 0.0 && r.d1 > 0.0 && r.d2 > 0.0) || !std::isfinite(r.dS + r.d1 + r.d2)) {
      throw Error(ErrorCode::InvalidModel, "sweep dispersal rates must be finite and > 0");
    }
  }

  if (config.declared_N && std::abs(*config.declared_N - mass) > 1e-9 * std::max(1.0, mass)) {
    std::ostringstream os;
    os << "declared N=" << *config.declared_N << " differs from initial mass " << mass
       << "; using " << mass;
    const std::string msg = os.str();
    if (std::find(config.warnings.begin(), config.warnings.end(), msg) == config.warnings.end()) {
      config.warnings.push_back(msg);
    }
  }
}

ScenarioConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_and_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw Error(ErrorCode::Parse, "line " + std::to_string(line) + ", column " +
                                      std::to_string(col) + ": malformed JSON");
  }
  if (!doc.is_object()) field_error("", "top level must be an object");

  ScenarioConfig c;
  warn_unknown(doc,
               {"name", "model", "initial", "declared_N", "integration", "analyses", "sweep_grid",
                "sweep_rows", "expected_verdict", "seed"},
               "", c.warnings);

  const json& name = require(doc, "name", "");
  if (!name.is_string() || name.get<std::string>().empty()) field_error("name", "expected a nonempty string");
  c.name = name.get<std::string>();

  const json& model = require(doc, "model", "");
  if (!model.is_object()) field_error("model", "expected an object");
  warn_unknown(model, {"k", "L", "dS", "strains"}, "model.", c.warnings);
  const json& kj = require(model, "k", "model.");
  if (!kj.is_number_integer() || kj.get<long>() < 2) field_error("model.k", "expected an integer >= 2");
  const int k = kj.get<int>();
  c.model.graph.rates = matrix_of(require(model, "L", "model."), "model.L");
  if (c.model.graph.rates.rows() != k || c.model.graph.rates.cols() != k) {
    throw Error(ErrorCode::DimensionMismatch,
                "field 'model.L': expected a " + std::to_string(k) + "x" + std::to_string(k) +
                    " matrix");
  }
  c.model.dS = number(require(model, "dS", "model."), "model.dS");
  const json& strains = require(model, "strains", "model.");
  if (!strains.is_array() || strains.size() != 2) {
    field_error("model.strains", "expected an array of two strain objects");
  }
  for (int l = 0; l < 2; ++l) {
    const std::string path = "model.strains[" + std::to_string(l) + "].";
    const json& sj = strains[static_cast<std::size_t>(l)];
    if (!sj.is_object()) field_error(path.substr(0, path.size() - 1), "expected an object");
    warn_unknown(sj, {"beta", "gamma", "d"}, path, c.warnings);
    StrainParams& p = c.model.strains[static_cast<std::size_t>(l)];
    p.beta = vector_of(require(sj, "beta", path), path + "beta");
    p.gamma = vector_of(require(sj, "gamma", path), path + "gamma");
    p.dispersal = number(require(sj, "d", path), path + "d");
    check_length(p.beta, k, path + "beta");
    check_length(p.gamma, k, path + "gamma");
  }

  const json& initial = require(doc, "initial", "");
  if (!initial.is_object()) field_error("initial", "expected an object");
  warn_unknown(initial, {"S", "I1", "I2"}, "initial.", c.warnings);
  c.initial.S = vector_of(require(initial, "S", "initial."), "initial.S");
  c.initial.I1 = vector_of(require(initial, "I1", "initial."), "initial.I1");
  c.initial.I2 = vector_of(require(initial, "I2", "initial."), "initial.I2");

  if (const auto it = doc.find("declared_N"); it != doc.end() && !it->is_null()) {
    c.declared_N = number(*it, "declared_N");
  }

  if (const auto it = doc.find("integration"); it != doc.end()) {
    if (!it->is_object()) field_error("integration", "expected an object");
    const std::map<std::string, double IntegrationOptions::*> fields{
        {"t_end", &IntegrationOptions::t_end},
        {"rel_tol", &IntegrationOptions::rel_tol},
        {"abs_tol", &IntegrationOptions::abs_tol},
        {"max_step", &IntegrationOptions::max_step},
        {"sample_every", &IntegrationOptions::sample_every},
        {"clamp_threshold", &IntegrationOptions::clamp_threshold},
        {"max_mass_error", &IntegrationOptions::max_mass_error}};
    for (const auto& [key, value] : it->items()) {
      const auto f = fields.find(key);
      if (f == fields.end()) {
        c.warnings.push_back("unknown field 'integration." + key + "' ignored");
        continue;
      }
      c.integration.*(f->second) = number(value, "integration." + key);
    }
  }

  if (const auto it = doc.find("analyses"); it != doc.end()) {
    if (!it->is_array()) field_error("analyses", "expected an array of analysis names");
    Analyses a{false, false, false, false, false, false, false};
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& v = (*it)[i];
      const std::string path = "analyses[" + std::to_string(i) + "]";
      if (!v.is_string()) field_error(path, "expected a string");
      const auto f = analysis_fields().find(v.get<std::string>());
      if (f == analysis_fields().end()) field_error(path, "unknown analysis '" + v.get<std::string>() + "'");
      a.*(f->second) = true;
    }
    c.analyses = a;
  }

  if (const auto it = doc.find("sweep_grid"); it != doc.end()) {
    const Vector grid = vector_of(*it, "sweep_grid");
    c.sweep_grid.assign(grid.data(), grid.data() + grid.size());
  }
  if (const auto it = doc.find("sweep_rows"); it != doc.end()) {
    if (!it->is_array()) field_error("sweep_rows", "expected an array of {dS, d1, d2} objects");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string path = "sweep_rows[" + std::to_string(i) + "].";
      const json& r = (*it)[i];
      if (!r.is_object()) field_error(path.substr(0, path.size() - 1), "expected an object");
      c.sweep_rows.push_back({number(require(r, "dS", path), path + "dS"),
                              number(require(r, "d1", path), path + "d1"),
                              number(require(r, "d2", path), path + "d2")});
    }
  }
  if (const auto it = doc.find("expected_verdict"); it != doc.end() && !it->is_null()) {
    c.expected_verdict = parse_verdict(*it, "expected_verdict");
  }
  if (const auto it = doc.find("seed"); it != doc.end()) {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0)) {
      field_error("seed", "expected a nonnegative integer");
    }
    c.seed = it->get<std::uint64_t>();
  }

  finalize(c);
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::Io, "cannot read config file " + path.string());
  return parse_config(buf.str());
}

std::string to_json(const ScenarioConfig& c) {
  json doc;
  doc["name"] = c.name;
  json L = json::array();
  for (Eigen::Index i = 0; i < c.model.graph.rates.rows(); ++i) {
    L.push_back(to_array(c.model.graph.rates.row(i).transpose()));
  }
  json strains = json::array();
  for (const StrainParams& p : c.model.strains) {
    strains.push_back({{"beta", to_array(p.beta)}, {"gamma", to_array(p.gamma)}, {"d", p.dispersal}});
  }
  doc["model"] = {{"k", c.model.patches()}, {"L", L}, {"dS", c.model.dS}, {"strains", strains}};
  doc["initial"] = {{"S", to_array(c.initial.S)},
                    {"I1", to_array(c.initial.I1)},
                    {"I2", to_array(c.initial.I2)}};
  if (c.declared_N) doc["declared_N"] = *c.declared_N;
  const IntegrationOptions& o = c.integration;
  doc["integration"] = {{"t_end", o.t_end},
                        {"rel_tol", o.rel_tol},
                        {"abs_tol", o.abs_tol},
                        {"max_step", o.max_step},
                        {"sample_every", o.sample_every},
                        {"clamp_threshold", o.clamp_threshold},
                        {"max_mass_error", o.max_mass_error}};
  json analyses = json::array();
  for (const auto& [key, member] : analysis_fields()) {
    if (c.analyses.*member) analyses.push_back(key);
  }
  doc["analyses"] = analyses;
  if (!c.sweep_grid.empty()) doc["sweep_grid"] = c.sweep_grid;
  if (!c.sweep_rows.empty()) {
    json rows = json::array();
    for (const DispersalRates& r : c.sweep_rows) rows.push_back({{"dS", r.dS}, {"d1", r.d1}, {"d2", r.d2}});
    doc["sweep_rows"] = rows;
  }
  if (c.expected_verdict) doc["expected_verdict"] = std::string(to_string(*c.expected_verdict));
  doc["seed"] = c.seed;
  return doc.dump(2) + "\n";
}

std::vector<std::string> reproduction_runs() {
  return {"sim1a", "sim1b", "sim1c", "sim2a", "sim2b", "sim2c", "sim3a", "sim3b",
          "sim3c", "sim4a", "sim4b", "sim4c", "sim5a", "sim5b", "sim5c"};
}

std::vector<std::string> builtin_names() {
  std::vector<std::string> names = reproduction_runs();
  names.push_back("sim4");
  names.push_back("sim5");
  return names;
}

ScenarioConfig builtin_scenario(std::string_view name) {
  const Vector sim1_b1 = v2(2, 3), sim1_g1 = v2(1, 2);
  const Vector b2 = v2(1, 4), g2 = v2(2, 3);
  const State sim2_init = state2(v2(1, 2), v2(0.5, 0.5), v2(0.5, 0.5));
  const State sim3_init = state2(v2(1, 2), v2(1, 1), v2(1, 1));
  const State sim45_init = state2(v2(1, 2), v2(2, 1), v2(4, 1));
  const std::string n(name);

  const auto sim1 = [&](State init) {
    return base_two_patch(n, sim1_b1, sim1_g1, b2, g2, {3, 1, 2}, std::move(init));
  };
  const auto sim2 = [&](DispersalRates r) {
    return base_two_patch(n, v2(4, 6), v2(2, 3), b2, g2, r, sim2_init);
  };
  const auto sim3 = [&](DispersalRates r) {
    return base_two_patch(n, v2(2.0 / 3.0, 1), v2(2, 3), b2, g2, r, sim3_init);
  };
  const auto sim45 = [&](DispersalRates r) {
    return base_two_patch(n, v2(2, 3), v2(2, 3), b2, g2, r, sim45_init);
  };

  ScenarioConfig c;
  if (n == "sim1a") {
    c = sim1(state2(v2(0.05, 0.05), v2(0.05, 0.05), v2(0.05, 0.05)));
    c.expected_verdict = Verdict::DiseaseExtinction;
  } else if (n == "sim1b") {
    c = sim1(state2(v2(0.25, 0.25), v2(0.25, 0.25), v2(0.25, 0.25)));
    c.expected_verdict = Verdict::Strain2Excluded;
  } else if (n == "sim1c") {
    c = sim1(state2(v2(1, 2), v2(0.5, 0.5), v2(0.5, 0.5)));
    c.declared_N = 4.0;
    c.expected_verdict = Verdict::Strain2Excluded;
  } else if (n == "sim2a" || n == "sim2b" || n == "sim2c") {
    const DispersalRates r = n == "sim2a"   ? DispersalRates{3, 1, 2}
                             : n == "sim2b" ? DispersalRates{4, 6, 2}
                                            : DispersalRates{10, 0.5, 20};
    c = sim2(r);
    c.expected_verdict = Verdict::Strain2Excluded;
  } else if (n == "sim3a" || n == "sim3b" || n == "sim3c") {
    const DispersalRates r = n == "sim3a"   ? DispersalRates{5, 1, 2}
                             : n == "sim3b" ? DispersalRates{0.005, 0.5, 2}
                                            : DispersalRates{10, 0.005, 2};
    c = sim3(r);
    c.expected_verdict = Verdict::Strain1Excluded;
  } else if (n == "sim4a") {
    c = sim45({5, 1, 2});
    c.expected_verdict = Verdict::Coexistence;
  } else if (n == "sim4b" || n == "sim4c") {
    const double d = n == "sim4b" ? 35.0 : 40.0;
    c = sim45({d, d, 2});
    c.expected_verdict = Verdict::Strain1Excluded;
  } else if (n == "sim5a" || n == "sim5b" || n == "sim5c") {
    const double d = n == "sim5a" ? 0.005 : n == "sim5b" ? 35.0 : 40.0;
    c = sim45({d, d, d});
    c.expected_verdict = Verdict::Coexistence;
  } else if (n == "sim4") {
    c = sim45({5, 1, 2});
    c.sweep_rows = {{5, 1, 2}, {35, 35, 2}, {40, 40, 2}};
    c.analyses.sweep = true;
  } else if (n == "sim5") {
    c = sim45({0.005, 0.005, 0.005});
    c.sweep_grid = {0.005, 35, 40};
    c.analyses.sweep = true;
  } else {
    std::string known;
    for (const std::string& b : builtin_names()) known += (known.empty() ? "" : ", ") + b;
    throw Error(ErrorCode::InvalidModel, "unknown scenario '" + n + "' (known: " + known + ")");
  }
  finalize(c);
  return c;
}

}  // namespace patchepi
