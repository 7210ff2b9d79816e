#pragma once

#include <array>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctrw/errors.hpp"
#include "ctrw/mesh.hpp"
#include "ctrw/model.hpp"

namespace ctrw {

enum class SchemeId { u1d, c1d, fv1d, milestone1d, u2d, c2d, c_nd, u_nd, uu_nd, generalized, diagdom, gridless };

SchemeId parse_scheme(const std::string& name);
std::string scheme_name(SchemeId s);
std::vector<std::string> scheme_names();
int scheme_dim(SchemeId s);  // 1, 2, or 0 for any dimension
bool scheme_second_order(SchemeId s);

// Generic local view of a generator.
struct ChannelSet {
  Vec origin;
  std::vector<Vec> targets;
  std::vector<double> rates;
  double total_rate = 0.0;

  double mean_holding_time() const { return total_rate > 0.0 ? 1.0 / total_rate : kInf; }
  void add(Vec target, double rate);
};

// Applies the clamp rule: rates in [-1e-12 * scale, 0) become 0, more
// negative rates raise `kind`. Returns the clamped value.
double clamp_rate(double rate, double scale, ErrorKind kind, const char* what);

// ---------------------------------------------------------------- 1D

struct Rates1D {
  double up = 0.0;    // to i + 1
  double down = 0.0;  // to i - 1
  double total() const { return up + down; }
};

class Generator1D {
 public:
  // `averaged` selects the neighbour-averaged diffusion variants of u1d and c1d.
  Generator1D(const SdeProblem& problem, Mesh1D mesh, SchemeId scheme, bool averaged = false);

  Rates1D rates(long i) const;
  ChannelSet channels(long i) const;

  const SdeProblem& problem() const { return *problem_; }
  const Mesh1D& mesh() const { return mesh_; }
  SchemeId scheme() const { return scheme_; }
  bool averaged() const { return averaged_; }

  // Fills the milestone cache for the window so later queries are lock-free reads.
  void prepopulate() const;

 private:
  Rates1D compute(long i) const;
  double mu_eff(long i) const;  // drift used by the averaged variants: mu - M'

  std::shared_ptr<const SdeProblem> problem_;
  Mesh1D mesh_;
  SchemeId scheme_;
  bool averaged_;
  struct Cache {
    std::mutex mutex;
    std::unordered_map<long, Rates1D> rates;
  };
  std::shared_ptr<Cache> cache_;
};

// ---------------------------------------------------------------- 2D

// Channel order: (+1,0) (-1,0) (0,+1) (0,-1) (+1,+1) (-1,-1) (+1,-1) (-1,+1).
constexpr std::array<std::array<int, 2>, 8> kOffsets2D{
    {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}, {1, -1}, {-1, 1}}};

struct Rates2D {
  std::array<double, 8> rate{};
  double total() const {
    double s = 0.0;
    for (double r : rate) s += r;
    return s;
  }
};

class Generator2D {
 public:
  Generator2D(const SdeProblem& problem, Mesh1D mx, Mesh1D my, SchemeId scheme);

  Rates2D rates(long i, long j) const;
  ChannelSet channels(long i, long j) const;
  Vec point(long i, long j) const;

  const SdeProblem& problem() const { return *problem_; }
  const Mesh1D& mesh_x() const { return mx_; }
  const Mesh1D& mesh_y() const { return my_; }
  SchemeId scheme() const { return scheme_; }

 private:
  Rates2D potential_rates(long i, long j) const;

  std::shared_ptr<const SdeProblem> problem_;
  Mesh1D mx_, my_;
  SchemeId scheme_;
};

// ---------------------------------------------------------------- nD

// Per-direction forward/backward steps h_i^{+-}(x).
struct StepField {
  enum class Mode { uniform, physical, custom };
  Mode mode = Mode::uniform;
  double h = 0.1;
  // custom: (direction index, x, direction vector) -> (h+, h-)
  std::function<std::pair<double, double>(int, const Vec&, const Vec&)> custom;

  std::pair<double, double> steps(int i, const Vec& x, const Vec& dir) const;
  static StepField uniform(double h) { return StepField{Mode::uniform, h, {}}; }
  // Steps chosen so every jump has Euclidean length h.
  static StepField physical(double h) { return StepField{Mode::physical, h, {}}; }
};

// M(x) = sum_i w_i eta_i eta_i^T with eta_i the columns of `eta`.
struct Decomposition {
  Vec w;
  Mat eta;
};
using DecompositionFn = std::function<Decomposition(const Vec&, const Mat&)>;

// e_i and e_i +- e_j decomposition for diagonally dominant M.
Decomposition diagdom_decomposition(const Mat& M);

// Smooth deterministic field with values in [1/2, 1].
class LatticeNoise {
 public:
  LatticeNoise(uint64_t seed, double cell, bool degenerate = false);
  double operator()(const Vec& x) const;

 private:
  double node(int axis, long k) const;
  uint64_t seed_;
  double cell_;
  bool degenerate_;
};

class GeneratorND {
 public:
  GeneratorND(const SdeProblem& problem, SchemeId scheme, StepField steps);

  void set_decomposition(DecompositionFn fn) { decomposition_ = std::move(fn); }
  // Per-axis steps for diagdom; empty means derive from the unit-diagonal scaling.
  void set_axis_steps(Vec delta) { delta_ = std::move(delta); }
  void set_gridless(uint64_t seed, bool degenerate_xi);

  ChannelSet channels(const Vec& x) const;

  const SdeProblem& problem() const { return *problem_; }
  SchemeId scheme() const { return scheme_; }
  const StepField& steps() const { return steps_; }

 private:
  void along_columns(const Vec& x, const LocalCoeffs& c, ChannelSet& out) const;
  void generalized(const Vec& x, const LocalCoeffs& c, const Decomposition& d, ChannelSet& out) const;
  void diagdom(const Vec& x, const LocalCoeffs& c, ChannelSet& out) const;
  void gridless(const Vec& x, const LocalCoeffs& c, ChannelSet& out) const;

  std::shared_ptr<const SdeProblem> problem_;
  SchemeId scheme_;
  StepField steps_;
  DecompositionFn decomposition_;
  Vec delta_;
  std::shared_ptr<LatticeNoise> xi_;
};

// Axis steps Delta_i = h / P_ii with P scaling M to unit diagonal; throws
// NotDiagonallyDominant if the scaled matrix is not diagonally dominant.
Vec diagdom_axis_steps(const Mat& M, double h);

// QV(x) / V(x) with log V supplied; evaluated from log-differences.
double lyapunov_drift_ratio(const ChannelSet& cs, const std::function<double(const Vec&)>& log_v);

// log V(x) = a * sum |x_i|^(2m+2).
std::function<double(const Vec&)> polynomial_log_lyapunov(double a, int m);

// Local test-function application: Qf(x) = sum rate (f(y) - f(x)).
double apply(const ChannelSet& cs, const std::function<double(const Vec&)>& f);

}  // namespace ctrw
