#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rescon/graph.hpp"

namespace rescon {

// Identical LTI dynamics shared by every agent: xdot = A x + B u.
struct AgentDynamics {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;

  int n_x() const { return static_cast<int>(A.rows()); }
  int n_u() const { return static_cast<int>(B.cols()); }
};

// Cooperative feedback design: u_i = c * K * eta_i.
// P is the stabilizing Riccati solution behind K, kept for diagnostics.
struct GainDesign {
  Eigen::MatrixXd P;
  Eigen::MatrixXd K;
  double c = 0.0;
};

// Additive Gaussian channel noise on received neighbor states. Every edge
// (j -> i) uses default_cov unless an override for (i, j) is present. An
// empty default with no overrides means a noise-free scenario.
struct NoiseModel {
  Eigen::MatrixXd default_cov;
  std::map<std::pair<int, int>, Eigen::MatrixXd> edge_cov;  // key (head, tail)
  std::uint64_t rng_seed = 0;

  bool any() const { return default_cov.size() > 0 || !edge_cov.empty(); }

  // Covariance for edge tail -> head, or nullptr when the edge is noiseless.
  const Eigen::MatrixXd* covariance(int head, int tail) const;
};

struct SwarmState {
  double t = 0.0;
  std::vector<Eigen::VectorXd> x;
};

struct SpectrumClassification {
  std::vector<std::complex<double>> eigenvalues;
  std::vector<std::complex<double>> marginal;  // |Re| < tolerance
  bool has_unstable = false;                   // some Re > tolerance
};

// Solves F' P + P F = C for P (Kronecker-vectorized dense LU). Throws
// Error when the equation is singular, i.e. some eig(F) pair sums to zero.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& F,
                               const Eigen::MatrixXd& C);

// Riccati-based gain design: K = R^-1 B' P with A'P + PA + Q - PBR^-1B'P = 0,
// solved by Kleinman-Newton iteration seeded with a Bass-shift stabilizer.
// c = safety_factor / (2 * min Re of the nonzero Laplacian eigenvalues).
// Postcondition (checked): A - c*lambda*B*K is Hurwitz for every nonzero
// Laplacian eigenvalue lambda.
// Throws NotStabilizable when seeding or the iteration fails, NoSpanningTree
// when the graph cannot support consensus, ConfigError on bad Q/R shapes.
GainDesign design_gains(const AgentDynamics& dyn, const DiGraph& g,
                        const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                        double safety_factor = 1.2);

// eta_i = sum_j a_ij (x_j - x_i), plus sum_j a_ij omega_ij when per-edge
// noise samples are supplied (keyed by in-neighbor j).
Eigen::VectorXd local_tracking_error(
    const DiGraph& g, const std::vector<Eigen::VectorXd>& x, int i,
    const std::map<int, Eigen::VectorXd>* noise = nullptr);

Eigen::VectorXd nominal_control(const GainDesign& gains,
                                const Eigen::VectorXd& eta_i);

// One fixed-step RK4 step of xdot = A x + B u with u held constant (ZOH).
Eigen::VectorXd integrate_step(const AgentDynamics& dyn,
                               const Eigen::VectorXd& x_i,
                               const Eigen::VectorXd& u_i, double dt);

// Eigenvalues of A split into the full list and the imaginary-axis sublist;
// has_unstable reports any eigenvalue with real part above tolerance.
SpectrumClassification classify_A_spectrum(const AgentDynamics& dyn,
                                           double tolerance = 1e-8);

// Sigma_i = sum_j a_ij^2 Sigma_ij: covariance of the aggregate noise entering
// agent i's tracking error. Zero matrix when no in-edge carries noise.
Eigen::MatrixXd aggregate_noise_covariance(const DiGraph& g,
                                           const NoiseModel& noise, int i,
                                           int n_x);

}  // namespace rescon
