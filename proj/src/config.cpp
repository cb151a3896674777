#include "npp/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace npp {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += fmt(v[i]);
  }
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<std::string> tokenize(const std::string& s) {
  std::vector<std::string> tokens;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

double to_double(const std::string& s, const std::string& where) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ConfigError("bad number '" + s + "' in " + where);
  }
}

long to_long(const std::string& s, const std::string& where) {
  try {
    size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ConfigError("bad integer '" + s + "' in " + where);
  }
}

bool to_bool(const std::string& s, const std::string& where) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError("bad boolean '" + s + "' in " + where + " (use true/false)");
}

std::vector<double> to_doubles(const std::string& s, const std::string& where) {
  std::vector<double> out;
  for (const auto& tok : tokenize(s)) out.push_back(to_double(tok, where));
  return out;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// One parsed section: ordered key/value pairs plus a consumed flag per key.
struct Section {
  std::vector<std::pair<std::string, std::string>> entries;
  std::set<std::string> seen;
};

class Reader {
public:
  explicit Reader(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::string current;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
        current = trim(line.substr(1, line.size() - 2));
        if (current.empty())
          throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
        if (sections_.count(current))
          throw ConfigError("duplicate section [" + current + "]");
        order_.push_back(current);
        sections_[current];
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
      if (current.empty())
        throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      auto& sec = sections_[current];
      if (sec.seen.count(key))
        throw ConfigError("duplicate key '" + key + "' in [" + current + "]");
      sec.seen.insert(key);
      sec.entries.emplace_back(key, value);
    }
  }

  bool has(const std::string& name) const { return sections_.count(name) > 0; }

  const std::string* find(const std::string& section, const std::string& key) {
    auto it = sections_.find(section);
    if (it == sections_.end()) return nullptr;
    for (auto& [k, v] : it->second.entries) {
      if (k == key) {
        consumed_[section].insert(key);
        return &v;
      }
    }
    return nullptr;
  }

  std::string require(const std::string& section, const std::string& key) {
    const std::string* v = find(section, key);
    if (!v) throw ConfigError("missing required key '" + key + "' in [" + section + "]");
    return *v;
  }

  const std::vector<std::string>& section_order() const { return order_; }

  void reject_unconsumed() const {
    for (const auto& name : order_) {
      const auto& sec = sections_.at(name);
      auto cit = consumed_.find(name);
      for (const auto& [k, v] : sec.entries) {
        if (cit == consumed_.end() || !cit->second.count(k))
          throw ConfigError("unknown key '" + k + "' in [" + name + "]");
      }
    }
  }

  void mark_section_known(const std::string& name) { known_sections_.insert(name); }
  void reject_unknown_sections() const {
    for (const auto& name : order_) {
      if (!known_sections_.count(name))
        throw ConfigError("unknown section [" + name + "]");
    }
  }

private:
  std::map<std::string, Section> sections_;
  std::vector<std::string> order_;
  std::map<std::string, std::set<std::string>> consumed_;
  std::set<std::string> known_sections_;
};

}  // namespace

RunConfig RunConfig::parse(const std::string& text) {
  Reader reader(text);
  RunConfig cfg;
  cfg.species.clear();
  cfg.cells.clear();
  cfg.extent.clear();
  cfg.tk_levels.clear();

  reader.mark_section_known("grid");
  cfg.dimension = (int)to_long(reader.require("grid", "dimension"), "[grid] dimension");
  for (const auto& tok : tokenize(reader.require("grid", "cells")))
    cfg.cells.push_back((int)to_long(tok, "[grid] cells"));
  cfg.extent = to_doubles(reader.require("grid", "extent"), "[grid] extent");

  for (const auto& name : reader.section_order()) {
    if (name.rfind("species.", 0) != 0) continue;
    reader.mark_section_known(name);
    SpeciesConfig sc;
    sc.name = name.substr(8);
    if (sc.name.empty()) throw ConfigError("species section needs a name: [species.<name>]");
    sc.charge = (int)to_long(reader.require(name, "charge"), name);
    sc.diffusivity = reader.require(name, "diffusivity");
    sc.initial = reader.require(name, "initial");
    cfg.species.push_back(std::move(sc));
  }
  if (cfg.species.empty()) throw ConfigError("no [species.<name>] sections found");

  reader.mark_section_known("reactions");
  if (reader.has("reactions")) {
    cfg.reaction_kind = reader.require("reactions", "kind");
    if (const auto* v = reader.find("reactions", "rate"))
      cfg.reaction_rate = to_double(*v, "[reactions] rate");
    if (const auto* v = reader.find("reactions", "rates"))
      cfg.reaction_rates = to_doubles(*v, "[reactions] rates");
  }

  reader.mark_section_known("boundary");
  cfg.tau = reader.require("boundary", "tau");
  cfg.xi = reader.require("boundary", "xi");
  if (const auto* v = reader.find("boundary", "xi_exponent")) cfg.xi_exponent = *v;

  reader.mark_section_known("regularization");
  if (reader.has("regularization")) {
    cfg.eta = to_double(reader.require("regularization", "eta"), "[regularization] eta");
    cfg.p = to_double(reader.require("regularization", "p"), "[regularization] p");
  }

  reader.mark_section_known("time");
  cfg.dt = to_double(reader.require("time", "dt"), "[time] dt");
  cfg.final_time = to_double(reader.require("time", "final"), "[time] final");
  if (const auto* v = reader.find("time", "outputs"))
    cfg.outputs = (int)to_long(*v, "[time] outputs");
  if (const auto* v = reader.find("time", "output_times"))
    cfg.output_times = to_doubles(*v, "[time] output_times");

  reader.mark_section_known("solver");
  if (reader.has("solver")) {
    if (const auto* v = reader.find("solver", "damping")) cfg.damping = to_double(*v, "damping");
    if (const auto* v = reader.find("solver", "fp_tol")) cfg.fp_tol = to_double(*v, "fp_tol");
    if (const auto* v = reader.find("solver", "fp_max_iter"))
      cfg.fp_max_iter = (int)to_long(*v, "fp_max_iter");
    if (const auto* v = reader.find("solver", "poisson_tol"))
      cfg.poisson_tol = to_double(*v, "poisson_tol");
    if (const auto* v = reader.find("solver", "inner_tol"))
      cfg.inner_tol = to_double(*v, "inner_tol");
    if (const auto* v = reader.find("solver", "inner_max_iter"))
      cfg.inner_max_iter = (int)to_long(*v, "inner_max_iter");
    if (const auto* v = reader.find("solver", "allow_dt_halving"))
      cfg.allow_dt_halving = to_bool(*v, "allow_dt_halving");
    if (const auto* v = reader.find("solver", "jobs")) cfg.jobs = (int)to_long(*v, "jobs");
  }

  reader.mark_section_known("sweep");
  if (reader.has("sweep")) {
    cfg.eta_schedule = to_doubles(reader.require("sweep", "eta_schedule"), "[sweep] eta_schedule");
    if (const auto* v = reader.find("sweep", "tk_levels"))
      cfg.tk_levels = to_doubles(*v, "[sweep] tk_levels");
  }
  if (cfg.tk_levels.empty()) cfg.tk_levels = {4.0, 16.0, 256.0};

  reader.mark_section_known("output");
  if (reader.has("output")) {
    if (const auto* v = reader.find("output", "directory")) cfg.output_directory = *v;
    if (const auto* v = reader.find("output", "seed"))
      cfg.seed = (std::uint64_t)to_long(*v, "[output] seed");
  }

  reader.mark_section_known("certificates");
  if (reader.has("certificates")) {
    auto& c = cfg.certificates;
    if (const auto* v = reader.find("certificates", "mass")) c.mass = to_bool(*v, "mass");
    if (const auto* v = reader.find("certificates", "mass_tol_rel"))
      c.mass_tol_rel = to_double(*v, "mass_tol_rel");
    if (const auto* v = reader.find("certificates", "entropy")) c.entropy = to_bool(*v, "entropy");
    if (const auto* v = reader.find("certificates", "entropy_slack_rel"))
      c.entropy_slack_rel = to_double(*v, "entropy_slack_rel");
    if (const auto* v = reader.find("certificates", "uniform_eta"))
      c.uniform_eta = to_bool(*v, "uniform_eta");
    if (const auto* v = reader.find("certificates", "cauchy")) c.cauchy = to_bool(*v, "cauchy");
    if (const auto* v = reader.find("certificates", "sup_bound_k"))
      c.sup_bound_k = to_double(*v, "sup_bound_k");
  }

  reader.reject_unknown_sections();
  reader.reject_unconsumed();
  return cfg;
}

RunConfig RunConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string RunConfig::serialize() const {
  std::ostringstream out;
  out << "[grid]\n";
  out << "dimension = " << dimension << "\n";
  out << "cells = " << join_ints(cells) << "\n";
  out << "extent = " << join_doubles(extent) << "\n";
  for (const auto& s : species) {
    out << "\n[species." << s.name << "]\n";
    out << "charge = " << s.charge << "\n";
    out << "diffusivity = " << s.diffusivity << "\n";
    out << "initial = " << s.initial << "\n";
  }
  out << "\n[reactions]\n";
  out << "kind = " << reaction_kind << "\n";
  out << "rate = " << fmt(reaction_rate) << "\n";
  if (!reaction_rates.empty()) out << "rates = " << join_doubles(reaction_rates) << "\n";
  out << "\n[boundary]\n";
  out << "tau = " << tau << "\n";
  out << "xi = " << xi << "\n";
  out << "xi_exponent = " << xi_exponent << "\n";
  out << "\n[regularization]\n";
  out << "eta = " << fmt(eta) << "\n";
  out << "p = " << fmt(p) << "\n";
  out << "\n[time]\n";
  out << "dt = " << fmt(dt) << "\n";
  out << "final = " << fmt(final_time) << "\n";
  if (outputs > 0) out << "outputs = " << outputs << "\n";
  if (!output_times.empty()) out << "output_times = " << join_doubles(output_times) << "\n";
  out << "\n[solver]\n";
  out << "damping = " << fmt(damping) << "\n";
  out << "fp_tol = " << fmt(fp_tol) << "\n";
  out << "fp_max_iter = " << fp_max_iter << "\n";
  out << "poisson_tol = " << fmt(poisson_tol) << "\n";
  out << "inner_tol = " << fmt(inner_tol) << "\n";
  out << "inner_max_iter = " << inner_max_iter << "\n";
  out << "allow_dt_halving = " << (allow_dt_halving ? "true" : "false") << "\n";
  out << "jobs = " << jobs << "\n";
  if (!eta_schedule.empty()) {
    out << "\n[sweep]\n";
    out << "eta_schedule = " << join_doubles(eta_schedule) << "\n";
    out << "tk_levels = " << join_doubles(tk_levels) << "\n";
  }
  out << "\n[output]\n";
  out << "directory = " << output_directory << "\n";
  out << "seed = " << seed << "\n";
  out << "\n[certificates]\n";
  out << "mass = " << (certificates.mass ? "true" : "false") << "\n";
  out << "mass_tol_rel = " << fmt(certificates.mass_tol_rel) << "\n";
  out << "entropy = " << (certificates.entropy ? "true" : "false") << "\n";
  out << "entropy_slack_rel = " << fmt(certificates.entropy_slack_rel) << "\n";
  out << "uniform_eta = " << (certificates.uniform_eta ? "true" : "false") << "\n";
  out << "cauchy = " << (certificates.cauchy ? "true" : "false") << "\n";
  out << "sup_bound_k = " << fmt(certificates.sup_bound_k) << "\n";
  return out.str();
}

namespace {

Diffusivity parse_diffusivity(const std::string& expr) {
  const auto tok = tokenize(expr);
  if (tok.empty()) throw ConfigError("empty diffusivity expression");
  if (tok[0] == "constant" && tok.size() == 2)
    return Diffusivity::constant(to_double(tok[1], "diffusivity"));
  if (tok[0] == "periodic" && tok.size() == 4)
    return Diffusivity::periodic(to_double(tok[1], "diffusivity"),
                                 to_double(tok[2], "diffusivity"),
                                 to_double(tok[3], "diffusivity"));
  if (tok[0] == "ramp" && tok.size() == 3)
    return Diffusivity::ramp(to_double(tok[1], "diffusivity"), to_double(tok[2], "diffusivity"));
  throw ConfigError("bad diffusivity expression '" + expr +
                    "' (expected: constant v | periodic base amp waves | ramp base slope)");
}

std::vector<double> parse_initial(const std::string& expr, const Grid& grid) {
  const auto tok = tokenize(expr);
  if (tok.empty()) throw ConfigError("empty initial expression");
  std::vector<double> field(grid.num_cells(), 0.0);
  if (tok[0] == "uniform" && tok.size() == 2) {
    std::fill(field.begin(), field.end(), to_double(tok[1], "initial"));
    return field;
  }
  if (tok[0] == "gaussian") {
    // gaussian amp cx [cy] width [baseline b]
    std::vector<double> nums;
    double baseline = 0.0;
    for (size_t i = 1; i < tok.size(); ++i) {
      if (tok[i] == "baseline") {
        if (i + 1 >= tok.size()) throw ConfigError("gaussian: baseline needs a value");
        baseline = to_double(tok[i + 1], "initial");
        ++i;
        continue;
      }
      nums.push_back(to_double(tok[i], "initial"));
    }
    const size_t expected = grid.dimension() == 2 ? 4u : 3u;
    if (nums.size() != expected)
      throw ConfigError("gaussian initial needs amp, center per axis, width");
    const double amp = nums[0];
    const double width = nums.back();
    for (int c = 0; c < grid.num_cells(); ++c) {
      const auto x = grid.cell_center(c);
      double r2 = (x[0] - nums[1]) * (x[0] - nums[1]);
      if (grid.dimension() == 2) r2 += (x[1] - nums[2]) * (x[1] - nums[2]);
      field[c] = baseline + amp * std::exp(-r2 / (width * width));
    }
    return field;
  }
  if (tok[0] == "step" && tok.size() == 3) {
    const double left = to_double(tok[1], "initial");
    const double right = to_double(tok[2], "initial");
    for (int c = 0; c < grid.num_cells(); ++c)
      field[c] = grid.cell_center(c)[0] < 0.5 * grid.extent(0) ? left : right;
    return field;
  }
  throw ConfigError("bad initial expression '" + expr +
                    "' (expected: uniform v | gaussian ... | step left right)");
}

std::vector<double> parse_boundary_values(const std::string& expr, const Grid& grid,
                                          const char* what) {
  const auto tok = tokenize(expr);
  const auto faces = grid.boundary_faces();
  std::vector<double> values(faces.size(), 0.0);
  if (!tok.empty() && tok[0] == "constant" && tok.size() == 2) {
    std::fill(values.begin(), values.end(), to_double(tok[1], what));
    return values;
  }
  if (!tok.empty() && tok[0] == "sides") {
    // sides x_low x_high [y_low y_high]
    const size_t expected = grid.dimension() == 2 ? 5u : 3u;
    if (tok.size() != expected)
      throw ConfigError(std::string(what) + ": 'sides' needs two values per axis");
    for (size_t k = 0; k < faces.size(); ++k) {
      const int slot = 2 * faces[k].axis + (faces[k].sign > 0 ? 1 : 0);
      values[k] = to_double(tok[1 + slot], what);
    }
    return values;
  }
  throw ConfigError(std::string(what) + ": bad expression '" + expr +
                    "' (expected: constant v | sides ...)");
}

}  // namespace

ProblemSpec RunConfig::build_problem() const {
  ProblemSpec spec;
  try {
    spec.grid = Grid::build(dimension, cells, extent);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }

  for (const auto& sc : species) {
    SpeciesSpec s;
    s.name = sc.name;
    s.charge = sc.charge;
    try {
      s.diffusivity = parse_diffusivity(sc.diffusivity);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("species '" + sc.name + "': " + e.what());
    }
    s.initial_concentration = parse_initial(sc.initial, spec.grid);
    spec.species.push_back(std::move(s));
  }

  if (reaction_kind == "none") {
    spec.reactions = ReactionSpec::none();
  } else if (reaction_kind == "reversible_tanh") {
    spec.reactions = ReactionSpec::reversible_tanh(reaction_rate);
  } else if (reaction_kind == "constant_source") {
    spec.reactions = ReactionSpec::constant_source(reaction_rates);
  } else {
    throw ConfigError("unknown reaction kind '" + reaction_kind + "'");
  }

  spec.boundary.tau = parse_boundary_values(tau, spec.grid, "tau");
  spec.boundary.xi = parse_boundary_values(xi, spec.grid, "xi");
  spec.boundary.xi_exponent = (xi_exponent == "inf")
                                  ? std::numeric_limits<double>::infinity()
                                  : to_double(xi_exponent, "xi_exponent");

  spec.regularization.eta = eta;
  spec.regularization.p = p;
  spec.final_time = final_time;
  return spec;
}

CouplingOptions RunConfig::coupling_options() const {
  CouplingOptions opts;
  opts.damping = damping;
  opts.tol = fp_tol;
  opts.max_iter = fp_max_iter;
  opts.poisson_tol = poisson_tol;
  opts.species.inner_tol = inner_tol;
  opts.species.inner_max_iter = inner_max_iter;
  opts.allow_dt_halving = allow_dt_halving;
  return opts;
}

std::vector<double> RunConfig::resolved_output_times() const {
  if (!output_times.empty()) return output_times;
  std::vector<double> times;
  if (outputs > 0) {
    for (int j = 1; j <= outputs; ++j) times.push_back(final_time * j / outputs);
  }
  return times;
}

}  // namespace npp
