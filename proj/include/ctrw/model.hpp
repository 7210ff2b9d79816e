#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctrw/params.hpp"

namespace ctrw {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class DomainKind { all_space, positive_orthant, box, product };

struct Interval {
  double lo = -kInf;
  double hi = kInf;
  bool lo_closed = false;
  bool hi_closed = false;
  bool contains(double x) const;
};

struct DomainSpec {
  DomainKind kind = DomainKind::all_space;
  std::vector<Interval> bounds;
  bool periodic = false;

  static DomainSpec all_space(int n);
  static DomainSpec positive_orthant(int n);
  static DomainSpec box(std::vector<Interval> bounds, bool periodic = false);
  bool contains(const Vec& x) const;
};

struct ReferenceSolution {
  // Unnormalized stationary density.
  std::function<double(const Vec&)> stationary_density;
  // Closed-form moments keyed by observable id, e.g. "x^2".
  std::function<std::optional<double>(const std::string&, const Vec&, double)> moment;
  // First k generator eigenvalues, sorted by descending real part.
  std::function<std::vector<std::complex<double>>(int)> spectrum;
  // Normalized marginal density of one coordinate.
  std::function<double(int, double)> marginal_density;
};

// Everything a scheme needs at one state. Filled by SdeProblem::local.
struct LocalCoeffs {
  Vec mu;
  Mat M;
  Mat sigma;
  Vec mu_tilde;
  bool has_mu_tilde = false;
};

enum class Flow { none, rotational, extensional, shear, nonlinear };
Flow parse_flow(const std::string& name);
std::string flow_name(Flow f);

// dY = mu(Y) dt + sqrt(2) sigma(Y) dW with M = sigma sigma^T.
struct SdeProblem {
  std::string name;
  int dim = 1;
  DomainSpec domain;
  std::function<Vec(const Vec&)> drift;
  std::function<Mat(const Vec&)> diffusion;
  std::function<Mat(const Vec&)> noise_columns;
  ReferenceSolution reference;

  // Scalar fast paths for dim = 1.
  std::function<double(double)> drift_scalar;
  std::function<double(double)> diffusion_scalar;

  // Optional joint evaluator; used when drift and diffusion share work.
  std::function<void(const Vec&, LocalCoeffs&)> local_override;

  // Polynomial growth exponent m of the drift.
  int growth_m = 0;

  // Planar potential form: drift = flow - grad U, M = I / beta.
  std::function<double(const Vec&)> potential;
  std::function<Vec(const Vec&)> flow;
  double beta = 1.0;
  bool potential_rates = false;

  // Linear drift matrix for Ornstein-Uhlenbeck problems.
  std::optional<Mat> linear_drift;

  Params params;
  std::map<std::string, std::string> info;

  double mu1(double x) const;
  double m1(double x) const;
  void local(const Vec& x, LocalCoeffs& out) const;
};

// Solves M mu_tilde = mu. Throws SingularDiffusion if M is numerically singular.
Vec transformed_drift(const Mat& M, const Vec& mu);
Vec transformed_drift(const SdeProblem& problem, const Vec& x);

// Lower-triangular factor L with L L^T = M; columns are the noise directions.
Mat noise_factor(const Mat& M);

struct ConservativeForm {
  double nu;
  double U;
};

// nu(x) = M(x)^{-1} exp(int_anchor^x mu/M), U = -log nu.
ConservativeForm conservative_form_1d(const SdeProblem& problem, double anchor, double x);

// Solves A X + X A^T + Q = 0 for small dense A.
Mat solve_lyapunov(const Mat& A, const Mat& Q);

// Eigenvalues n1 l1 + n2 l2 of the generator of dY = C Y dt + noise, for the
// eigenvalues l1, l2 of C; first k sorted by descending real part.
std::vector<std::complex<double>> linear_ou_spectrum(const Mat& C, int k);

SdeProblem make_problem(const std::string& name, const Params& params = {});
std::vector<std::string> problem_names();

// Colloidal cluster.
struct ColloidParams {
  int n_particles = 13;
  double eta_s = 1.0;
  double kT = 12.3;
  double a = 3.2;
  double R_hydro = 3.2;
  double eps_sc = 10.0;
  double D1 = 2.245 * 3.2;
  double D2 = 2.694 * 3.2;
  double c_ao = 58.5 / (3.2 * 3.2 * 3.2);
  bool hydro = true;
  // Friction used when hydro is off; 0 selects 6 pi eta_s a.
  double zeta0 = 0.0;

  static ColloidParams from(const Params& p);
  double zeta() const;
  double brownian_time() const { return a * a * a * eta_s / kT; }
};

double colloid_pair_energy(double r, const ColloidParams& p);
// dU/dr.
double colloid_pair_derivative(double r, const ColloidParams& p);

struct EnergyForce {
  double energy;
  Vec force;
};
EnergyForce colloid_energy_force(const Vec& q, const ColloidParams& p);

struct Mobility {
  Mat M;
  Mat sigma;
};
Mobility rpy_mobility(const Vec& q, const ColloidParams& p);

// Centre plus 12 icosahedron vertices with the given edge length.
Vec icosahedron_cluster(double edge);
double radius_of_gyration(const Vec& q);

}  // namespace ctrw
