#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ctrw/generator.hpp"
#include "ctrw/model.hpp"
#include "ctrw/params.hpp"
#include "ctrw/spectral.hpp"
#include "ctrw/ssa.hpp"

namespace ctrw {

struct StudySpec {
  std::string study;
  std::string problem;
  Params problem_params;
  SchemeId scheme = SchemeId::c1d;
  std::vector<double> h;  // strictly decreasing
  double T = 1.0;
  long n_paths = 1000;
  uint64_t seed = 1;
  Params options;  // study-specific knobs (mesh, anchor, interval, ...)
  std::string out_dir;  // empty: nothing written
};

// Least-squares fit of log10 y = slope * log10 x + intercept.
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS residual in log10 units
  size_t points = 0;
};

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

constexpr double kMaxFitResidual = 0.15;

struct StudyResult {
  std::string study;
  Params params;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  SlopeFit fit;
  bool has_fit = false;
  double expected_slope = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::map<std::string, double> metrics;
  std::vector<std::string> notes;

  // Sets pass from the fit: slope within tolerance and residual <= 0.15.
  void judge(double expected, double tol);
  void add_row(std::vector<double> row) { rows.push_back(std::move(row)); }
};

// Writes <dir>/<name>.csv and <dir>/<name>_summary.json.
void write_study(const StudyResult& r, const std::string& dir, const std::string& name);

void validate_spec(const StudySpec& spec);

// l1 distance between the scheme's stationary density and the cell-averaged
// reference, per h. 1D problems use the tridiagonal path; 2D problems the
// truncated matrix.
StudyResult run_density_study(const StudySpec& spec);

// Sup-norm error of the discrete committor or MFPT against the quadrature
// oracle on options [a, b], per h.
StudyResult run_bvp_study(const StudySpec& spec, const std::string& kind);

// |MC estimate of E f(X(T)) - closed form| per h; slope fitted where the bias
// exceeds 3 standard errors.
StudyResult run_weak_study(const StudySpec& spec);

// Holding times at states x: t* = h/|mu|, t^u, t^c from the 1D rates and t^e
// by quadrature of 1/|mu| over [x - h, x].
StudyResult run_holding_time_study(const SdeProblem& problem, double h, const std::vector<double>& xs);

// Mean jump count and mean holding time over [0, T] vs h.
StudyResult run_complexity_study(const StudySpec& spec);

// Top-k eigenvalues of the truncated 2D generator vs the closed-form OU
// spectrum, per h, plus an E* doubling check at the finest h.
StudyResult run_spectrum_study(const StudySpec& spec);

// Local consistency |Qf - Lf| vs h at random interior states for cubic
// polynomials times a bump. Passes when the Richardson slope of the sup over
// states at the finest pair meets the order threshold; per-state slopes are
// reported alongside.
StudyResult run_consistency_study(const StudySpec& spec);

// Occupation statistics of the Lotka-Volterra model on the 2D log mesh.
StudyResult run_lv_study(const StudySpec& spec);

// Ensemble radius of gyration of the colloid cluster and a jump-count profile.
StudyResult run_colloid_study(const StudySpec& spec);

// Randomized admissible/inadmissible constant M checks of the 2D log mesh.
StudyResult run_log_mesh_realizability(uint64_t seed, int n_admissible, int n_inadmissible, int n_points);

// Window for 2D spectral work: E* = radius * ||C||, candidate box
// |x_i| <= E* / sigma_min(C) + h. Falls back to a box of half-width radius
// when the problem has no linear drift.
struct Window2D {
  Mesh1D mx;
  Mesh1D my;
  double e_star;
};
Window2D spectral_window(const SdeProblem& problem, double h, double radius);

// Cell masses of the 2D reference density over the pruned window, normalized.
std::vector<double> cell_average_density_2d(const SdeProblem& problem, const Generator2D& gen,
                                            const TruncatedQMatrix& m);

StudyResult run_study(const StudySpec& spec);
std::vector<std::string> study_names();

}  // namespace ctrw
