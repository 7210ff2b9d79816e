#include "ctrw/ssa.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "ctrw/errors.hpp"

namespace ctrw {

StepResult ssa_step(const double* rates, size_t n, double total, RngStream& rng) {
  StepResult r;
  if (!(total > 0.0)) return r;
  r.dt = rng.exponential(total);
  double target = rng.uniform_pos() * total;
  double cum = 0.0;
  size_t last = n;
  for (size_t k = 0; k < n; ++k) {
    if (rates[k] <= 0.0) continue;
    last = k;
    cum += rates[k];
    if (cum >= target) {
      r.channel = k;
      return r;
    }
  }
  r.channel = last;  // rounding left target just above the running sum
  return r;
}

StepResult ssa_step(const ChannelSet& cs, RngStream& rng) {
  return ssa_step(cs.rates.data(), cs.rates.size(), cs.total_rate, rng);
}

namespace {

struct Proc1D {
  using State = long;
  const Generator1D& gen;
  long base = 0;
  std::vector<Rates1D> cache;
  std::vector<char> ok;
  double buf[2]{};
  double total = 0.0;

  explicit Proc1D(const Generator1D& g) : gen(g) {}

  const Rates1D& get(long i) {
    if (cache.empty()) {
      base = i - 64;
      cache.resize(129);
      ok.assign(129, 0);
    }
    if (i < base) {
      long grow = std::max(base - i, static_cast<long>(cache.size()));
      cache.insert(cache.begin(), static_cast<size_t>(grow), Rates1D{});
      ok.insert(ok.begin(), static_cast<size_t>(grow), 0);
      base -= grow;
    } else if (i >= base + static_cast<long>(cache.size())) {
      long grow = std::max(i - base - static_cast<long>(cache.size()) + 1, static_cast<long>(cache.size()));
      cache.resize(cache.size() + static_cast<size_t>(grow));
      ok.resize(ok.size() + static_cast<size_t>(grow), 0);
    }
    size_t k = static_cast<size_t>(i - base);
    if (!ok[k]) {
      cache[k] = gen.rates(i);
      ok[k] = 1;
    }
    return cache[k];
  }
  void load(State i) {
    const Rates1D& r = get(i);
    buf[0] = r.up;
    buf[1] = r.down;
    total = r.up + r.down;
  }
  size_t n() const { return 2; }
  State target(State i, size_t ch) const { return ch == 0 ? i + 1 : i - 1; }
  Vec vec(State i) const { return Vec::Constant(1, gen.mesh().point(i)); }
};

struct Proc2D {
  using State = GridIndex;
  const Generator2D& gen;
  Rates2D r;
  double total = 0.0;
  explicit Proc2D(const Generator2D& g) : gen(g) {}
  void load(const State& s) {
    r = gen.rates(s[0], s[1]);
    total = r.total();
  }
  const double* rates() const { return r.rate.data(); }
  size_t n() const { return 8; }
  State target(const State& s, size_t ch) const {
    State t{s[0] + kOffsets2D[ch][0], s[1] + kOffsets2D[ch][1]};
    t[0] = gen.mesh_x().wrap(t[0]);
    t[1] = gen.mesh_y().wrap(t[1]);
    return t;
  }
  Vec vec(const State& s) const { return gen.point(s[0], s[1]); }
};

struct ProcND {
  using State = Vec;
  const GeneratorND& gen;
  ChannelSet cs;
  double total = 0.0;
  explicit ProcND(const GeneratorND& g) : gen(g) {}
  void load(const State& s) {
    cs = gen.channels(s);
    total = cs.total_rate;
  }
  const double* rates() const { return cs.rates.data(); }
  size_t n() const { return cs.rates.size(); }
  State target(const State&, size_t ch) const { return cs.targets[ch]; }
  Vec vec(const State& s) const { return s; }
};

const double* rates_of(Proc1D& p) { return p.buf; }
const double* rates_of(Proc2D& p) { return p.rates(); }
const double* rates_of(ProcND& p) { return p.rates(); }

void check_state(const Vec& x) {
  for (Eigen::Index k = 0; k < x.size(); ++k)
    if (!std::isfinite(x[k])) raise(ErrorKind::DomainViolation, "non-finite state");
}

template <class Proc>
PathResult run_path(Proc& p, typename Proc::State s, double T, RngStream& rng, const PathOptions& opt) {
  PathResult out;
  double t = 0.0;
  if (opt.record_full) {
    out.trajectory.times.push_back(0.0);
    out.trajectory.states.push_back(p.vec(s));
  }
  for (;;) {
    p.load(s);
    StepResult st = ssa_step(rates_of(p), p.n(), p.total, rng);
    if (st.absorbed()) {
      out.absorbed = true;
      break;
    }
    if (t + st.dt > T) {
      if (opt.on_hold) opt.on_hold(p.vec(s), T - t);
      t = T;
      break;
    }
    if (opt.on_hold) opt.on_hold(p.vec(s), st.dt);
    t += st.dt;
    s = p.target(s, st.channel);
    if (++out.jump_count > opt.step_budget)
      raise(ErrorKind::StepBudgetExceeded, "jump count exceeded " + std::to_string(opt.step_budget));
    if (opt.record_full) {
      Vec v = p.vec(s);
      check_state(v);
      out.trajectory.times.push_back(t);
      out.trajectory.states.push_back(std::move(v));
    }
  }
  out.elapsed = t;
  out.final_state = p.vec(s);
  check_state(out.final_state);
  out.trajectory.jump_count = out.jump_count;
  out.trajectory.sum_holding = t;
  out.trajectory.absorbed = out.absorbed;
  return out;
}

template <class Proc>
PassageResult run_passage(Proc& p, typename Proc::State s, const std::function<bool(const Vec&)>& stop,
                          RngStream& rng, long long budget) {
  PassageResult out;
  double t = 0.0;
  Vec v = p.vec(s);
  while (!stop(v)) {
    p.load(s);
    StepResult st = ssa_step(rates_of(p), p.n(), p.total, rng);
    if (st.absorbed()) raise(ErrorKind::AbsorbedState, "absorbed before reaching the stop set");
    t += st.dt;
    s = p.target(s, st.channel);
    v = p.vec(s);
    if (++out.jump_count > budget) raise(ErrorKind::StepBudgetExceeded, "first passage exceeded the step budget");
  }
  out.tau = t;
  out.exit_state = v;
  return out;
}

std::variant<Generator1D, Generator2D, GeneratorND> make_generator(const SdeProblem& p, const Discretization& d) {
  int sd = scheme_dim(d.scheme);
  if (sd == 1) {
    if (!d.mesh_x) raise(ErrorKind::ValidationError, "1D scheme needs a mesh");
    return Generator1D(p, *d.mesh_x, d.scheme, d.averaged);
  }
  if (sd == 2) {
    if (!d.mesh_x || !d.mesh_y) raise(ErrorKind::ValidationError, "2D scheme needs two meshes");
    return Generator2D(p, *d.mesh_x, *d.mesh_y, d.scheme);
  }
  GeneratorND g(p, d.scheme, d.steps);
  if (d.decomposition) g.set_decomposition(d.decomposition);
  if (d.axis_steps.size() > 0) g.set_axis_steps(d.axis_steps);
  if (d.scheme == SchemeId::gridless) g.set_gridless(d.gridless_seed, d.degenerate_xi);
  return g;
}

}  // namespace

Simulator::Simulator(const SdeProblem& problem, const Discretization& disc)
    : problem_(std::make_shared<SdeProblem>(problem)), disc_(disc), gen_(make_generator(problem, disc)) {}

Vec Simulator::snap(const Vec& x0) const {
  if (static_cast<int>(x0.size()) != problem_->dim) raise(ErrorKind::ValidationError, "x0 has wrong dimension");
  if (auto g = gen1d()) return Vec::Constant(1, g->mesh().point(g->mesh().nearest_index(x0[0])));
  if (auto g = gen2d()) return g->point(g->mesh_x().nearest_index(x0[0]), g->mesh_y().nearest_index(x0[1]));
  return x0;
}

PathResult Simulator::simulate(const Vec& x0, double T, RngStream& rng, const PathOptions& opt) const {
  if (!(T > 0.0)) raise(ErrorKind::ValidationError, "T must be positive");
  if (!problem_->domain.contains(x0) && !problem_->domain.periodic)
    raise(ErrorKind::DomainViolation, "x0 outside the domain");
  if (auto g = gen1d()) {
    Proc1D p(*g);
    return run_path(p, g->mesh().nearest_index(x0[0]), T, rng, opt);
  }
  if (auto g = gen2d()) {
    Proc2D p(*g);
    return run_path(p, GridIndex{g->mesh_x().nearest_index(x0[0]), g->mesh_y().nearest_index(x0[1])}, T, rng,
                    opt);
  }
  ProcND p(*gennd());
  return run_path(p, x0, T, rng, opt);
}

PassageResult Simulator::first_passage(const Vec& x0, const std::function<bool(const Vec&)>& stop, RngStream& rng,
                                       long long budget) const {
  if (auto g = gen1d()) {
    Proc1D p(*g);
    return run_passage(p, g->mesh().nearest_index(x0[0]), stop, rng, budget);
  }
  if (auto g = gen2d()) {
    Proc2D p(*g);
    return run_passage(p, GridIndex{g->mesh_x().nearest_index(x0[0]), g->mesh_y().nearest_index(x0[1])}, stop,
                       rng, budget);
  }
  ProcND p(*gennd());
  return run_passage(p, x0, stop, rng, budget);
}

Discretization make_discretization(const SdeProblem& problem, SchemeId scheme, double h, const Vec& anchor,
                                   const std::string& mesh_kind) {
  if (!(h > 0.0)) raise(ErrorKind::ValidationError, "h must be positive");
  Discretization d;
  d.scheme = scheme;
  const long w = 1000;
  auto axis = [&](int k) -> Mesh1D {
    double a = anchor.size() > k ? anchor[k] : 0.0;
    if (mesh_kind == "log") {
      if (!(a > 0.0)) raise(ErrorKind::ValidationError, "log mesh needs a positive anchor");
      return Mesh1D::log(h, std::log(a), -w, w);
    }
    if (mesh_kind == "periodic") {
      const Interval& b = problem.domain.bounds.at(k);
      long n = std::lround((b.hi - b.lo) / h);
      return Mesh1D::periodic(b.lo, b.hi, n);
    }
    if (mesh_kind != "uniform") raise(ErrorKind::ValidationError, "unknown mesh kind '" + mesh_kind + "'");
    return Mesh1D::uniform(a, h, -w, w);
  };
  int sd = scheme_dim(scheme);
  if (sd != 0 && sd != problem.dim)
    raise(ErrorKind::ValidationError, scheme_name(scheme) + " does not match the problem dimension");
  if (sd == 1) {
    d.mesh_x = axis(0);
  } else if (sd == 2) {
    if (mesh_kind == "log") {
      double m11 = std::stod(problem.info.at("m11"));
      double m12 = std::stod(problem.info.at("m12"));
      double m22 = std::stod(problem.info.at("m22"));
      LogMesh2D lm = log_mesh_2d(m11, m12, m22, h, anchor[0], anchor[1], w, w);
      d.mesh_x = lm.x;
      d.mesh_y = lm.y;
    } else {
      d.mesh_x = axis(0);
      d.mesh_y = axis(1);
    }
  } else {
    d.steps = mesh_kind == "physical" ? StepField::physical(h) : StepField::uniform(h);
  }
  return d;
}

int thread_count() {
  int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("CTRW_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return std::min(v, 256);
  }
  return hw;
}

void parallel_for(long n, const std::function<void(long)>& body) {
  int nt = static_cast<int>(std::min<long>(thread_count(), n));
  if (nt <= 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr err;
  std::mutex err_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < nt; ++t)
    pool.emplace_back([&] {
      for (;;) {
        long i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!err) err = std::current_exception();
          next.store(n);
          return;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

Estimate estimate_samples(long n_paths, uint64_t seed,
                          const std::function<double(long path, RngStream&, long long& jumps)>& sample) {
  if (n_paths < 2) raise(ErrorKind::ValidationError, "need at least two paths");
  std::vector<double> values(static_cast<size_t>(n_paths));
  std::vector<long long> jumps(static_cast<size_t>(n_paths));
  const long chunk = 1024;
  const long n_chunks = (n_paths + chunk - 1) / chunk;
  parallel_for(n_chunks, [&](long c) {
    for (long i = c * chunk; i < std::min(n_paths, (c + 1) * chunk); ++i) {
      RngStream rng(seed, static_cast<uint64_t>(i));
      values[i] = sample(i, rng, jumps[i]);
    }
  });
  long double s = 0.0L, s2 = 0.0L, sj = 0.0L;
  for (long i = 0; i < n_paths; ++i) {
    s += values[i];
    sj += jumps[i];
  }
  long double mean = s / n_paths;
  for (long i = 0; i < n_paths; ++i) s2 += (values[i] - mean) * (values[i] - mean);
  Estimate e;
  e.mean = static_cast<double>(mean);
  e.stderr_ = static_cast<double>(std::sqrt(s2 / (n_paths - 1) / n_paths));
  e.mean_jumps = static_cast<double>(sj / n_paths);
  e.n_paths = n_paths;
  return e;
}

Estimate estimate_expectation(const Simulator& sim, const Vec& x0, double T,
                              const std::function<double(const Vec&)>& f, long n_paths, uint64_t seed,
                              long long step_budget) {
  PathOptions opt;
  opt.step_budget = step_budget;
  return estimate_samples(n_paths, seed, [&](long, RngStream& rng, long long& jumps) {
    PathResult r = sim.simulate(x0, T, rng, opt);
    jumps = r.jump_count;
    return f(r.final_state);
  });
}

std::vector<ComplexityRow> complexity_profile(const std::function<Simulator(double)>& make_sim, const Vec& x0,
                                              double T, const std::vector<double>& h_list, long n_paths,
                                              uint64_t seed) {
  if (h_list.size() < 3) raise(ErrorKind::ValidationError, "complexity profile needs at least three h values");
  std::vector<ComplexityRow> rows;
  for (double h : h_list) {
    Simulator sim = make_sim(h);
    Estimate e = estimate_expectation(sim, x0, T, [](const Vec&) { return 1.0; }, n_paths, seed);
    rows.push_back({h, e.mean_jumps, e.mean_jumps > 0.0 ? T / e.mean_jumps : kInf});
  }
  return rows;
}

}  // namespace ctrw
