#include "ctrw/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ctrw/bench.hpp"
#include "ctrw/errors.hpp"
#include "ctrw/spectral.hpp"
#include "ctrw/ssa.hpp"
#include "ctrw/tridiag.hpp"

namespace ctrw {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kSections{"problem", "scheme", "run", "output", "study"};

const std::map<std::string, std::string> kShorthands{
    {"problem", "problem.name"}, {"scheme", "scheme.id"}, {"h", "scheme.h"},     {"T", "run.T"},
    {"seed", "run.seed"},        {"paths", "run.n_paths"}, {"out", "output.dir"}, {"study", "study.name"},
    {"x0", "run.x0"}};

// Keys allowed in the fixed sections; problem.* and study.* accept any key.
const std::map<std::string, std::set<std::string>> kFixedKeys{
    {"scheme", {"id", "h", "mesh", "averaged", "gridless_seed", "degenerate_xi"}},
    {"run", {"x0", "T", "n_paths", "seed", "step_budget", "a", "b", "k", "radius", "record"}},
    {"output", {"dir", "formats"}}};

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> formats(const RunConfig& cfg) {
  std::vector<std::string> out;
  std::stringstream ss(cfg.get("output.formats", "csv"));
  for (std::string f; std::getline(ss, f, ',');)
    if (!trim(f).empty()) out.push_back(trim(f));
  return out;
}

std::vector<double> parse_list(const RunConfig& cfg, const std::string& key) {
  Params p;
  p.set(key, cfg.get(key));
  return p.list(key, {});
}

double number(const RunConfig& cfg, const std::string& key, double fallback) {
  Params p;
  if (cfg.has(key)) p.set(key, cfg.get(key));
  return p.num(key, fallback);
}

long integer(const RunConfig& cfg, const std::string& key, long fallback) {
  Params p;
  if (cfg.has(key)) p.set(key, cfg.get(key));
  return p.integer(key, fallback);
}

void require(const RunConfig& cfg, const std::string& key) {
  if (!cfg.has(key) || cfg.get(key).empty()) raise(ErrorKind::ValidationError, "missing required field '" + key + "'");
}

Params problem_params(const RunConfig& cfg) {
  Params r, all = cfg.section("problem");
  for (const auto& [k, v] : all.values())
    if (k != "name") r.set(k, v);
  return r;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
  return out;
}

}  // namespace

std::string RunConfig::get(const std::string& key, const std::string& fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

Params RunConfig::section(const std::string& name) const {
  Params p;
  const std::string prefix = name + ".";
  for (const auto& [k, v] : values)
    if (k.rfind(prefix, 0) == 0) p.set(k.substr(prefix.size()), v);
  return p;
}

std::string RunConfig::echo() const {
  std::ostringstream out;
  out << "# resolved configuration\n";
  out << "subcommand = " << subcommand << "\n";
  for (const auto& sec : kSections) {
    Params p = section(sec);
    if (p.values().empty()) continue;
    out << "\n[" << sec << "]\n";
    for (const auto& [k, v] : p.values()) out << k << " = " << v << "\n";
  }
  return out.str();
}

std::vector<std::string> subcommands() {
  return {"simulate", "stationary", "mfpt", "committor", "spectrum", "convergence", "colloid"};
}

std::string canonical_key(const std::string& key) {
  auto it = kShorthands.find(key);
  if (it != kShorthands.end()) return it->second;
  auto dot = key.find('.');
  if (dot == std::string::npos) raise(ErrorKind::ValidationError, "unknown key '" + key + "'");
  std::string sec = key.substr(0, dot);
  if (std::find(kSections.begin(), kSections.end(), sec) == kSections.end())
    raise(ErrorKind::ValidationError, "unknown section '" + sec + "' in key '" + key + "'");
  return key;
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') raise(ErrorKind::ParseError, where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (std::find(kSections.begin(), kSections.end(), section) == kSections.end())
        raise(ErrorKind::ParseError, where + "unknown section '" + section + "'");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) raise(ErrorKind::ParseError, where + "expected 'key = value'");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) raise(ErrorKind::ParseError, where + "empty key");
    if (section.empty() && key == "subcommand") {
      cfg.subcommand = value;
      continue;
    }
    std::string full;
    try {
      full = section.empty() ? canonical_key(key) : section + "." + key;
    } catch (const Error& e) {
      raise(ErrorKind::ParseError, where + e.what());
    }
    if (cfg.values.count(full)) raise(ErrorKind::ParseError, where + "duplicate key '" + full + "'");
    cfg.values[full] = value;
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::ParseError, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
  cfg.values[canonical_key(key)] = value;
}

void validate_config(RunConfig& cfg) {
  auto subs = subcommands();
  if (std::find(subs.begin(), subs.end(), cfg.subcommand) == subs.end())
    raise(ErrorKind::ValidationError, "unknown subcommand '" + cfg.subcommand + "'; valid: " + join(subs));
  for (const auto& [key, value] : cfg.values) {
    auto dot = key.find('.');
    std::string sec = key.substr(0, dot), name = key.substr(dot + 1);
    auto fixed = kFixedKeys.find(sec);
    if (fixed != kFixedKeys.end() && !fixed->second.count(name))
      raise(ErrorKind::ValidationError, "unknown field '" + key + "'");
  }
  require(cfg, "run.seed");
  if (integer(cfg, "run.seed", 0) < 0) raise(ErrorKind::ValidationError, "field 'run.seed' must be nonnegative");
  if (!cfg.has("output.dir")) cfg.values["output.dir"] = "out";

  const std::string& sub = cfg.subcommand;
  if (sub == "colloid") {
    if (!cfg.has("problem.name")) cfg.values["problem.name"] = "colloid_cluster";
    if (!cfg.has("scheme.id")) cfg.values["scheme.id"] = "c_nd";
    if (!cfg.has("run.n_paths")) cfg.values["run.n_paths"] = "8";
    if (!cfg.has("study.h_list")) cfg.values["study.h_list"] = "0.64,0.32,0.16";
  }
  require(cfg, "problem.name");
  require(cfg, "scheme.id");
  SchemeId scheme = parse_scheme(cfg.get("scheme.id"));
  SdeProblem p = make_problem(cfg.get("problem.name"), problem_params(cfg));
  int sd = scheme_dim(scheme);
  if (sd != 0 && sd != p.dim)
    raise(ErrorKind::ValidationError,
          "field 'scheme.id': " + scheme_name(scheme) + " does not match the dimension of " + p.name);
  if (sub != "convergence" && sub != "colloid") {
    require(cfg, "scheme.h");
    if (!(number(cfg, "scheme.h", 0.0) > 0.0)) raise(ErrorKind::ValidationError, "field 'scheme.h' must be positive");
  }
  if (sub == "simulate") {
    require(cfg, "run.T");
    if (!(number(cfg, "run.T", 0.0) > 0.0)) raise(ErrorKind::ValidationError, "field 'run.T' must be positive");
    if (!cfg.has("run.n_paths")) cfg.values["run.n_paths"] = "1";
    if (integer(cfg, "run.n_paths", 1) < 1) raise(ErrorKind::ValidationError, "field 'run.n_paths' must be >= 1");
  }
  if (sub == "mfpt" || sub == "committor") {
    if (p.dim != 1) raise(ErrorKind::ValidationError, "field 'problem.name': " + sub + " needs a 1D problem");
    require(cfg, "run.a");
    require(cfg, "run.b");
    if (!(number(cfg, "run.b", 0.0) > number(cfg, "run.a", 0.0)))
      raise(ErrorKind::ValidationError, "fields 'run.a', 'run.b' need a < b");
  }
  if (sub == "spectrum" && p.dim != 2)
    raise(ErrorKind::ValidationError, "field 'problem.name': spectrum needs a 2D problem");
  if (sub == "convergence") {
    require(cfg, "study.name");
    auto names = study_names();
    if (std::find(names.begin(), names.end(), cfg.get("study.name")) == names.end())
      raise(ErrorKind::ValidationError, "field 'study.name': unknown study '" + cfg.get("study.name") +
                                            "'; valid: " + join(names));
    if (!cfg.has("study.h_list"))
      cfg.values["study.h_list"] = p.dim == 2 ? "0.4,0.3,0.2,0.15" : "0.4,0.2,0.1,0.05";
  }
  if (cfg.has("study.h_list")) {
    auto hs = parse_list(cfg, "study.h_list");
    if (hs.empty()) raise(ErrorKind::ValidationError, "field 'study.h_list' is empty");
    for (size_t i = 1; i < hs.size(); ++i)
      if (!(hs[i] < hs[i - 1])) raise(ErrorKind::ValidationError, "field 'study.h_list' must be strictly decreasing");
  }
  for (const auto& f : formats(cfg))
    if (f != "csv" && f != "json")
      raise(ErrorKind::ValidationError, "field 'output.formats': unknown format '" + f + "' (valid: csv, json)");
  if (formats(cfg).empty()) raise(ErrorKind::ValidationError, "field 'output.formats' is empty");
  if (cfg.has("run.x0")) {
    auto x0 = parse_list(cfg, "run.x0");
    if (static_cast<int>(x0.size()) != p.dim && p.name != "colloid_cluster")
      raise(ErrorKind::ValidationError, "field 'run.x0' needs " + std::to_string(p.dim) + " values");
  }
}

namespace {

Vec start_point(const RunConfig& cfg, const SdeProblem& p) {
  if (cfg.has("run.x0")) {
    auto v = parse_list(cfg, "run.x0");
    return Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  if (p.domain.kind == DomainKind::positive_orthant) return Vec::Ones(p.dim);
  return Vec::Zero(p.dim);
}

std::string default_mesh(const SdeProblem& p, SchemeId s) {
  if (scheme_dim(s) == 0) return "uniform";
  if (p.domain.periodic) return "periodic";
  if (p.domain.kind == DomainKind::positive_orthant) return "log";
  return "uniform";
}

void write_config(const RunConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream out(dir / "config.txt", std::ios::binary);
  out << cfg.echo();
}

// Numeric table written as <name>.csv and/or <name>.json per output.formats.
struct Table {
  std::string header;
  std::vector<std::vector<double>> rows;
  void add(std::vector<double> v) { rows.push_back(std::move(v)); }
};

void write_table(const RunConfig& cfg, const fs::path& dir, const std::string& name, const Table& t) {
  auto fm = formats(cfg);
  auto value = [](double v) { return std::isnan(v) ? std::string("nan") : format_double(v); };
  if (std::find(fm.begin(), fm.end(), "csv") != fm.end()) {
    std::ofstream out(dir / (name + ".csv"), std::ios::binary);
    out << t.header << "\n";
    for (const auto& r : t.rows) {
      for (size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << value(r[i]);
      out << "\n";
    }
  }
  if (std::find(fm.begin(), fm.end(), "json") != fm.end()) {
    nlohmann::ordered_json j;
    std::vector<std::string> cols;
    std::stringstream hs(t.header);
    for (std::string c; std::getline(hs, c, ',');) cols.push_back(c);
    j["columns"] = cols;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : t.rows) {
      nlohmann::ordered_json jr = nlohmann::ordered_json::array();
      for (double v : r) jr.push_back(std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr));
      rows.push_back(jr);
    }
    j["rows"] = rows;
    std::ofstream out(dir / (name + ".json"), std::ios::binary);
    out << j.dump(1) << "\n";
  }
}

std::string coord_header(int dim) {
  if (dim == 2) return "x,y";
  std::string s;
  for (int d = 0; d < dim; ++d) s += (d ? ",x" : "x") + std::to_string(d + 1);
  return dim == 1 ? "x" : s;
}

int do_simulate(const RunConfig& cfg, const SdeProblem& p, SchemeId scheme, const fs::path& dir, std::ostream& log) {
  double h = number(cfg, "scheme.h", 0.1), T = number(cfg, "run.T", 1.0);
  Vec x0 = start_point(cfg, p);
  Discretization d = make_discretization(p, scheme, h, x0, cfg.get("scheme.mesh", default_mesh(p, scheme)));
  d.averaged = integer(cfg, "scheme.averaged", 0) != 0;
  d.gridless_seed = static_cast<uint64_t>(integer(cfg, "scheme.gridless_seed", 0));
  d.degenerate_xi = integer(cfg, "scheme.degenerate_xi", 0) != 0;
  Simulator sim(p, d);
  x0 = sim.snap(x0);
  const long n = integer(cfg, "run.n_paths", 1);
  const uint64_t seed = static_cast<uint64_t>(integer(cfg, "run.seed", 0));
  const long long budget = integer(cfg, "run.step_budget", kDefaultStepBudget);
  const bool full = cfg.get("run.record", "full") == "full";
  std::vector<PathResult> res(static_cast<size_t>(n));
  parallel_for(n, [&](long i) {
    RngStream rng(seed, static_cast<uint64_t>(i));
    PathOptions opt;
    opt.step_budget = budget;
    opt.record_full = full && i == 0;
    res[static_cast<size_t>(i)] = sim.simulate(x0, T, rng, opt);
  });
  if (full) {
    Table t{"t," + coord_header(p.dim), {}};
    const auto& tr = res[0].trajectory;
    for (size_t k = 0; k < tr.times.size(); ++k) {
      std::vector<double> v{tr.times[k]};
      for (Eigen::Index j = 0; j < tr.states[k].size(); ++j) v.push_back(tr.states[k][j]);
      t.add(std::move(v));
    }
    std::vector<double> v{res[0].elapsed};
    for (Eigen::Index j = 0; j < res[0].final_state.size(); ++j) v.push_back(res[0].final_state[j]);
    t.add(std::move(v));
    write_table(cfg, dir, "trajectory", t);
  }
  Table ends{"path,elapsed,jumps,absorbed," + coord_header(p.dim), {}};
  for (long i = 0; i < n; ++i) {
    const auto& r = res[static_cast<size_t>(i)];
    std::vector<double> v{double(i), r.elapsed, double(r.jump_count), r.absorbed ? 1.0 : 0.0};
    for (Eigen::Index j = 0; j < r.final_state.size(); ++j) v.push_back(r.final_state[j]);
    ends.add(std::move(v));
  }
  write_table(cfg, dir, "endpoints", ends);
  log << "simulated " << n << " path(s) to T = " << format_double(T) << "\n";
  return 0;
}

int do_stationary(const RunConfig& cfg, const SdeProblem& p, SchemeId scheme, const fs::path& dir, std::ostream& log) {
  double h = number(cfg, "scheme.h", 0.1);
  Table t;
  if (p.dim == 1) {
    std::string kind = cfg.get("scheme.mesh", default_mesh(p, scheme));
    double anchor = cfg.has("run.x0") ? start_point(cfg, p)[0] : (kind == "log" ? 1.0 : 0.0);
    long n0 = std::max(8L, static_cast<long>(std::ceil(2.0 / h)));
    Mesh1D mesh = kind == "log" ? Mesh1D::log(h, std::log(anchor), -n0, n0) : Mesh1D::uniform(anchor, h, -n0, n0);
    Generator1D gen(p, mesh, scheme, integer(cfg, "scheme.averaged", 0) != 0);
    Tridiag1D tri = stationary_window(gen, -n0, n0);
    auto nu = invariant_density(tri).normalized();
    std::vector<double> ref(nu.size(), std::numeric_limits<double>::quiet_NaN());
    if (p.reference.stationary_density) ref = cell_average_density(p, mesh.with_window(tri.lo, tri.lo + tri.last()));
    t.header = "i,x,nu,nu_ref";
    for (size_t i = 0; i < nu.size(); ++i) t.add({double(i), tri.x[i], nu[i], ref[i]});
    log << "stationary density on " << nu.size() << " states\n";
  } else if (p.dim == 2) {
    Window2D w = spectral_window(p, h, number(cfg, "run.radius", p.linear_drift ? 6.0 : 3.0));
    if (p.domain.periodic) {
      long n = std::lround((p.domain.bounds[0].hi - p.domain.bounds[0].lo) / h);
      w.mx = Mesh1D::periodic(p.domain.bounds[0].lo, p.domain.bounds[0].hi, n);
      w.my = Mesh1D::periodic(p.domain.bounds[1].lo, p.domain.bounds[1].hi, n);
    }
    Generator2D gen(p, w.mx, w.my, scheme);
    TruncatedQMatrix m = assemble(gen, w.e_star);
    Vec nu = stationary_density(m);
    std::vector<double> ref(m.size(), std::numeric_limits<double>::quiet_NaN());
    if (p.reference.stationary_density) ref = cell_average_density_2d(p, gen, m);
    t.header = "i,x,y,nu,nu_ref";
    for (size_t i = 0; i < m.size(); ++i)
      t.add({double(i), m.points[i][0], m.points[i][1], nu[static_cast<Eigen::Index>(i)], ref[i]});
    log << "stationary density on " << m.size() << " states\n";
  } else {
    raise(ErrorKind::ValidationError, "field 'problem.name': stationary needs a 1D or 2D problem");
  }
  write_table(cfg, dir, "stationary", t);
  return 0;
}

int do_bvp(const RunConfig& cfg, const SdeProblem& p, SchemeId scheme, const fs::path& dir, std::ostream& log) {
  const std::string& kind = cfg.subcommand;
  double a = number(cfg, "run.a", 0.0), b = number(cfg, "run.b", 1.0), h = number(cfg, "scheme.h", 0.1);
  long N = std::max(2L, std::lround((b - a) / h));
  Mesh1D mesh = Mesh1D::uniform(a, (b - a) / double(N), 0, N);
  Generator1D gen(p, mesh, scheme, integer(cfg, "scheme.averaged", 0) != 0);
  Tridiag1D tri = build_tridiag(gen, 0, N);
  auto u = kind == "mfpt" ? mfpt(tri) : committor(tri);
  auto ex = kind == "mfpt" ? exact_mfpt_profile(p, a, b, tri.x) : exact_committor_profile(p, a, b, tri.x);
  Table t{"i,x,value,exact", {}};
  for (size_t i = 0; i < u.size(); ++i) t.add({double(i), tri.x[i], u[i], ex[i]});
  write_table(cfg, dir, kind, t);
  log << kind << " on " << u.size() << " grid points\n";
  return 0;
}

int do_spectrum(const RunConfig& cfg, const SdeProblem& p, SchemeId scheme, const fs::path& dir, std::ostream& log) {
  double h = number(cfg, "scheme.h", 0.2);
  int k = static_cast<int>(integer(cfg, "run.k", 20));
  Window2D w = spectral_window(p, h, number(cfg, "run.radius", p.linear_drift ? 6.0 : 3.0));
  if (p.domain.periodic) {
    long n = std::lround((p.domain.bounds[0].hi - p.domain.bounds[0].lo) / h);
    w.mx = Mesh1D::periodic(p.domain.bounds[0].lo, p.domain.bounds[0].hi, n);
    w.my = Mesh1D::periodic(p.domain.bounds[1].lo, p.domain.bounds[1].hi, n);
  }
  Generator2D gen(p, w.mx, w.my, scheme);
  TruncatedQMatrix m = assemble(gen, w.e_star);
  EigenResult eig = leading_eigenvalues(m, k);
  std::vector<Complex> ref;
  std::vector<size_t> match;
  if (p.linear_drift) {
    ref = ou_spectrum(*p.linear_drift, 4 * k);
    match = greedy_match(eig.values, ref);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Table t{"h,k,re,im,re_ref,im_ref", {}};
  for (int i = 0; i < k; ++i) {
    Complex r = match.empty() ? Complex(nan, nan) : ref[match[i]];
    t.add({h, double(i), eig.values[i].real(), eig.values[i].imag(), r.real(), r.imag()});
  }
  write_table(cfg, dir, "spectrum", t);
  if (!ref.empty()) log << "relative l2 error " << format_double(matched_relative_error(eig.values, ref)) << "\n";
  log << k << " eigenvalues on " << m.size() << " states\n";
  return 0;
}

StudySpec study_spec(const RunConfig& cfg, const std::string& study) {
  StudySpec s;
  s.study = study;
  s.problem = cfg.get("problem.name");
  s.problem_params = problem_params(cfg);
  s.scheme = parse_scheme(cfg.get("scheme.id"));
  s.h = parse_list(cfg, "study.h_list");
  s.T = number(cfg, "run.T", 1.0);
  s.n_paths = integer(cfg, "run.n_paths", 1000);
  s.seed = static_cast<uint64_t>(integer(cfg, "run.seed", 0));
  Params opts = cfg.section("study");
  for (const auto& [k, v] : opts.values())
    if (k != "name" && k != "h_list") s.options.set(k, v);
  if (cfg.has("run.x0") && !s.options.has("x0")) s.options.set("x0", cfg.get("run.x0"));
  if (cfg.has("run.a") && !s.options.has("a")) s.options.set("a", cfg.get("run.a"));
  if (cfg.has("run.b") && !s.options.has("b")) s.options.set("b", cfg.get("run.b"));
  if (cfg.has("scheme.mesh") && !s.options.has("mesh")) s.options.set("mesh", cfg.get("scheme.mesh"));
  s.out_dir = cfg.get("output.dir");
  return s;
}

}  // namespace

int dispatch(const RunConfig& cfg_in, std::ostream& log) {
  RunConfig cfg = cfg_in;
  validate_config(cfg);
  fs::path dir = cfg.get("output.dir");
  write_config(cfg, dir);
  SdeProblem p = make_problem(cfg.get("problem.name"), problem_params(cfg));
  SchemeId scheme = parse_scheme(cfg.get("scheme.id"));
  const std::string& sub = cfg.subcommand;
  if (sub == "simulate") return do_simulate(cfg, p, scheme, dir, log);
  if (sub == "stationary") return do_stationary(cfg, p, scheme, dir, log);
  if (sub == "mfpt" || sub == "committor") return do_bvp(cfg, p, scheme, dir, log);
  if (sub == "spectrum") return do_spectrum(cfg, p, scheme, dir, log);
  StudySpec spec = study_spec(cfg, sub == "colloid" ? "colloid" : cfg.get("study.name"));
  StudyResult r = run_study(spec);
  log << r.study << ": pass = " << (r.pass ? "true" : "false");
  if (r.has_fit) log << ", slope = " << format_double(r.fit.slope) << ", residual = " << format_double(r.fit.residual);
  log << "\n";
  return 0;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Realizable jump-process discretizations of SDEs"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1, 1);
  std::string config_path;
  std::map<std::string, std::string> flags;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "sectioned key-value config file");
  std::vector<std::pair<std::string, std::string>> flag_keys{
      {"--out", "output.dir"},  {"--seed", "run.seed"},   {"--h", "scheme.h"},    {"--paths", "run.n_paths"},
      {"--T", "run.T"},         {"--scheme", "scheme.id"}, {"--problem", "problem.name"},
      {"--study", "study.name"}, {"--x0", "run.x0"}};
  for (const auto& [flag, key] : flag_keys) app.add_option(flag, flags[key], key);
  app.add_option("--set", sets, "override any key: section.key=value");
  const std::map<std::string, std::string> about{
      {"simulate", "SSA trajectories and endpoints to time T"},
      {"stationary", "stationary density of the discrete generator"},
      {"mfpt", "mean first-passage time on [run.a, run.b]"},
      {"committor", "committor on [run.a, run.b]"},
      {"spectrum", "leading generator eigenvalues of a 2D problem"},
      {"convergence", "run the study named by study.name over study.h_list"},
      {"colloid", "colloid cluster ensemble study"}};
  for (const auto& name : subcommands()) app.add_subcommand(name, about.at(name))->fallthrough();
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error config ParseError: " << e.what() << "\n";
    return static_cast<int>(ErrorCategory::config);
  }
  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : parse_config_file(config_path);
    cfg.subcommand = app.get_subcommands().front()->get_name();
    for (const auto& [key, value] : flags)
      if (!value.empty()) apply_override(cfg, key, value);
    for (const auto& s : sets) {
      auto eq = s.find('=');
      if (eq == std::string::npos) raise(ErrorKind::ParseError, "--set expects key=value, got '" + s + "'");
      apply_override(cfg, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    }
    return dispatch(cfg, std::cout);
  } catch (const Error& e) {
    std::cerr << "error " << category_name(e.category()) << " " << e.what() << "\n";
    return e.exit_code();
  }
}

}  // namespace ctrw
