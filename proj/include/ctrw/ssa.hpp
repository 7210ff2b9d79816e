#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "ctrw/generator.hpp"
#include "ctrw/model.hpp"
#include "ctrw/rng.hpp"

namespace ctrw {

constexpr long long kDefaultStepBudget = 1000000000LL;

struct StepResult {
  double dt = kInf;
  size_t channel = static_cast<size_t>(-1);  // npos when absorbed
  bool absorbed() const { return channel == static_cast<size_t>(-1); }
};

// One SSA step: exponential holding time, then cumulative-sum channel choice
// in declared order. Returns the dt = inf sentinel when the total rate is 0.
StepResult ssa_step(const double* rates, size_t n, double total, RngStream& rng);
StepResult ssa_step(const ChannelSet& cs, RngStream& rng);

struct JumpTrajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  long long jump_count = 0;
  double sum_holding = 0.0;
  bool absorbed = false;
};

struct PathOptions {
  long long step_budget = kDefaultStepBudget;
  bool record_full = false;
  // Called for each completed holding interval (state, duration) up to T.
  std::function<void(const Vec&, double)> on_hold;
};

struct PathResult {
  Vec final_state;
  long long jump_count = 0;
  double elapsed = 0.0;  // simulated time (T unless absorbed)
  bool absorbed = false;
  JumpTrajectory trajectory;  // filled if record_full
};

struct PassageResult {
  double tau = 0.0;
  Vec exit_state;
  long long jump_count = 0;
};

// How the state space is discretized: a gridded generator (1D, 2D) or a
// gridless nD generator.
struct Discretization {
  SchemeId scheme = SchemeId::c1d;
  std::optional<Mesh1D> mesh_x;
  std::optional<Mesh1D> mesh_y;
  bool averaged = false;
  StepField steps;
  uint64_t gridless_seed = 0;
  bool degenerate_xi = false;
  DecompositionFn decomposition;
  Vec axis_steps;
};

class Simulator {
 public:
  Simulator(const SdeProblem& problem, const Discretization& disc);

  const SdeProblem& problem() const { return *problem_; }
  const Discretization& discretization() const { return disc_; }

  // Snaps x0 onto the state space (nearest grid point for gridded schemes).
  Vec snap(const Vec& x0) const;

  PathResult simulate(const Vec& x0, double T, RngStream& rng, const PathOptions& opt = {}) const;
  PassageResult first_passage(const Vec& x0, const std::function<bool(const Vec&)>& stop, RngStream& rng,
                              long long step_budget = kDefaultStepBudget) const;

  const Generator1D* gen1d() const { return std::get_if<Generator1D>(&gen_); }
  const Generator2D* gen2d() const { return std::get_if<Generator2D>(&gen_); }
  const GeneratorND* gennd() const { return std::get_if<GeneratorND>(&gen_); }

 private:
  std::shared_ptr<const SdeProblem> problem_;
  Discretization disc_;
  std::variant<Generator1D, Generator2D, GeneratorND> gen_;
};

Discretization make_discretization(const SdeProblem& problem, SchemeId scheme, double h, const Vec& anchor,
                                   const std::string& mesh_kind);

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  double mean_jumps = 0.0;
  long n_paths = 0;
};

// Number of worker threads: CTRW_THREADS if set, else hardware concurrency.
int thread_count();

// Runs body(path) for path in [0, n) across workers; body must be thread-safe.
void parallel_for(long n, const std::function<void(long)>& body);

// Mean and standard error of sample(path, rng, jumps) over n paths, with stream i
// for path i and the reduction done in path order.
Estimate estimate_samples(long n_paths, uint64_t seed,
                          const std::function<double(long path, RngStream&, long long& jumps)>& sample);

// Monte Carlo estimate of E f(X(T)) with stream i for path i. Reduction is
// done in path order so the result does not depend on the thread count.
Estimate estimate_expectation(const Simulator& sim, const Vec& x0, double T,
                              const std::function<double(const Vec&)>& f, long n_paths, uint64_t seed,
                              long long step_budget = kDefaultStepBudget);

struct ComplexityRow {
  double h = 0.0;
  double mean_jumps = 0.0;
  double mean_holding = 0.0;
};

std::vector<ComplexityRow> complexity_profile(const std::function<Simulator(double)>& make_sim, const Vec& x0,
                                              double T, const std::vector<double>& h_list, long n_paths,
                                              uint64_t seed);

}  // namespace ctrw
