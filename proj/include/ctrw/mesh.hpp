#pragma once

#include <array>
#include <functional>
#include <optional>
#include <unordered_map>
#include <vector>

#include "ctrw/model.hpp"

namespace ctrw {

// A 1D grid addressed by integer index. Uniform and log meshes are infinite
// (any index is valid); [lo, hi] is the window used for matrix work.
class Mesh1D {
 public:
  enum class Kind { uniform, log, points };

  static Mesh1D uniform(double x0, double h, long lo, long hi);
  static Mesh1D log(double dxi, double xi0, long lo, long hi);
  // Cell-centred periodic grid of n cells on [a, b]; indices wrap modulo n.
  static Mesh1D periodic(double a, double b, long n);
  static Mesh1D from_points(std::vector<double> pts);

  Kind kind() const { return kind_; }
  bool periodic() const { return period_ > 0; }
  long period() const { return period_; }
  long lo() const { return lo_; }
  long hi() const { return hi_; }
  long size() const { return hi_ - lo_ + 1; }
  bool in_window(long i) const { return i >= lo_ && i <= hi_; }
  Mesh1D with_window(long lo, long hi) const;

  long wrap(long i) const;
  double point(long i) const;
  double dx_plus(long i) const;
  double dx_minus(long i) const;
  double dx(long i) const { return 0.5 * (dx_plus(i) + dx_minus(i)); }

  // Index of the grid point closest to x (exact for grid points).
  long nearest_index(double x) const;
  std::vector<double> points() const;

  double step() const { return step_; }
  double origin() const { return origin_; }

 private:
  Kind kind_ = Kind::uniform;
  double origin_ = 0.0;  // x0 (uniform) or xi0 (log)
  double step_ = 1.0;    // h (uniform) or dxi (log)
  long lo_ = 0;
  long hi_ = 0;
  long period_ = 0;
  std::vector<double> pts_;
};

Mesh1D uniform_mesh_1d(double x0, double h, long lo, long hi);
Mesh1D log_mesh_1d(double dxi, double xi0, long lo, long hi);

// Product of two log meshes with log steps alpha*eps (x) and eps (y).
struct LogMesh2D {
  double alpha = 1.0;
  double eps = 0.1;
  Mesh1D x;
  Mesh1D y;
  int halvings = 0;
};

// Chooses alpha and eps so the central 2D generator is realizable for the
// constant-coefficient log-normal diffusion diag(x) M diag(x).
LogMesh2D log_mesh_2d(double m11, double m12, double m22, double eps, double x_anchor, double y_anchor,
                      long half_width_x, long half_width_y);

// Checks the two sufficient inequalities for given alpha, eps.
bool log_mesh_2d_conditions(double m11, double m12, double m22, double alpha, double eps);

using GridIndex = std::array<long, 2>;

struct GridIndexHash {
  size_t operator()(const GridIndex& g) const noexcept {
    return std::hash<long>()(g[0]) * 0x9E3779B97F4A7C15ULL ^ std::hash<long>()(g[1]);
  }
};

// States retained for matrix work, with a state <-> row bijection.
struct PrunedWindow {
  int dim = 1;
  double e_star = kInf;
  std::vector<GridIndex> states;
  std::unordered_map<GridIndex, size_t, GridIndexHash> index;

  size_t size() const { return states.size(); }
  std::optional<size_t> find(const GridIndex& g) const;
};

// Keeps candidates whose drift norm is at most e_star.
PrunedWindow prune(const std::vector<GridIndex>& candidates, const std::function<Vec(const GridIndex&)>& point,
                   const SdeProblem& problem, double e_star, int dim);

// All index pairs of a rectangular window.
std::vector<GridIndex> window_indices_1d(const Mesh1D& m);
std::vector<GridIndex> window_indices_2d(const Mesh1D& mx, const Mesh1D& my);

}  // namespace ctrw
