#include "rescon/dynamics.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "rescon/errors.hpp"

namespace rescon {

namespace {

double max_real_eigenvalue(const Eigen::MatrixXcd& M) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M, false);
  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < M.rows(); ++k) {
    worst = std::max(worst, es.eigenvalues()(k).real());
  }
  return worst;
}

bool is_hurwitz(const Eigen::MatrixXcd& M, double tol = 0.0) {
  return max_real_eigenvalue(M) < -tol;
}

}  // namespace

const Eigen::MatrixXd* NoiseModel::covariance(int head, int tail) const {
  const auto it = edge_cov.find({head, tail});
  if (it != edge_cov.end()) return &it->second;
  if (default_cov.size() > 0) return &default_cov;
  return nullptr;
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& F,
                               const Eigen::MatrixXd& C) {
  const Eigen::Index n = F.rows();
  if (F.cols() != n || C.rows() != n || C.cols() != n) {
    throw DimensionMismatch("lyapunov solve needs square same-size F, C");
  }
  // vec(F'P) = (I kron F') vec(P), vec(PF) = (F' kron I) vec(P).
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n * n, n * n);
  const Eigen::MatrixXd Ft = F.transpose();
  const Eigen::MatrixXd In = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index bi = 0; bi < n; ++bi) {
    M.block(bi * n, bi * n, n, n) += Ft;
    for (Eigen::Index bj = 0; bj < n; ++bj) {
      M.block(bi * n, bj * n, n, n) += Ft(bi, bj) * In;
    }
  }
  Eigen::VectorXd c(Eigen::Map<const Eigen::VectorXd>(C.data(), n * n));
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible()) {
    throw Error("lyapunov equation is singular (eigenvalue pair sums to zero)");
  }
  const Eigen::VectorXd pv = lu.solve(c);
  Eigen::MatrixXd P(Eigen::Map<const Eigen::MatrixXd>(pv.data(), n, n));
  if ((F.transpose() * P + P * F - C).norm() > 1e-8 * (1.0 + C.norm())) {
    throw Error("lyapunov solve failed residual check");
  }
  return P;
}

GainDesign design_gains(const AgentDynamics& dyn, const DiGraph& g,
                        const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                        double safety_factor) {
  const int n = dyn.n_x();
  const int m = dyn.n_u();
  if (dyn.A.rows() != dyn.A.cols() || dyn.B.rows() != n) {
    throw DimensionMismatch("A must be square and B row-conformant");
  }
  if (Q.rows() != n || Q.cols() != n || R.rows() != m || R.cols() != m) {
    throw ConfigError("Q must be n_x x n_x and R n_u x n_u");
  }
  if (safety_factor <= 1.0) {
    throw ConfigError("coupling safety factor must exceed 1");
  }
  if (!has_spanning_tree(g)) {
    throw NoSpanningTree("gain design requires a spanning tree");
  }

  // Coupling gain from the smallest real part among nonzero Laplacian
  // eigenvalues (the zero eigenvalue carries the consensus direction).
  const Eigen::MatrixXd L = laplacian(g);
  Eigen::EigenSolver<Eigen::MatrixXd> les(L, false);
  double min_re = std::numeric_limits<double>::infinity();
  const double ztol = 1e-8 * (1.0 + L.norm());
  for (Eigen::Index k = 0; k < L.rows(); ++k) {
    const std::complex<double> lam = les.eigenvalues()(k);
    if (std::abs(lam) <= ztol) continue;
    min_re = std::min(min_re, lam.real());
  }
  if (!std::isfinite(min_re) || min_re <= 0.0) {
    throw NoSpanningTree("no usable nonzero Laplacian eigenvalue");
  }
  const double c = safety_factor / (2.0 * min_re);

  if (dyn.B.norm() == 0.0) {
    throw NotStabilizable("zero input matrix");
  }

  // Bass-shift stabilizing seed: with beta exceeding the spectral abscissa,
  // (A + beta I) Z + Z (A + beta I)' = 2 B B' has Z > 0 for a controllable
  // pair, and K0 = B' Z^-1 makes A - B K0 Hurwitz.
  const double beta =
      2.0 * std::max(1.0, max_real_eigenvalue(dyn.A.cast<std::complex<double>>())) +
      dyn.A.norm();
  const Eigen::MatrixXd As = dyn.A + beta * Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd K0;
  try {
    // solve_lyapunov solves F'P + PF = C; transpose to match As Z + Z As'.
    const Eigen::MatrixXd Z =
        solve_lyapunov(As.transpose(), 2.0 * dyn.B * dyn.B.transpose());
    Eigen::FullPivLU<Eigen::MatrixXd> zlu(Z);
    if (!zlu.isInvertible()) throw NotStabilizable("singular Bass-shift seed");
    K0 = dyn.B.transpose() * zlu.inverse();
  } catch (const Error&) {
    throw NotStabilizable("failed to construct a stabilizing seed gain");
  }
  if (!is_hurwitz((dyn.A - dyn.B * K0).cast<std::complex<double>>())) {
    throw NotStabilizable("seed gain does not stabilize (A, B)");
  }

  const Eigen::LLT<Eigen::MatrixXd> rllt(R);
  if (rllt.info() != Eigen::Success) {
    throw ConfigError("R must be positive definite");
  }

  // Kleinman-Newton: each iterate solves a Lyapunov equation for the current
  // closed loop and refreshes the gain; converges quadratically to the
  // stabilizing Riccati solution.
  Eigen::MatrixXd K = K0;
  Eigen::MatrixXd P;
  bool converged = false;
  for (int it = 0; it < 200; ++it) {
    const Eigen::MatrixXd Acl = dyn.A - dyn.B * K;
    P = solve_lyapunov(Acl, -(Q + K.transpose() * R * K));
    P = 0.5 * (P + P.transpose());
    K = rllt.solve(dyn.B.transpose() * P);
    const Eigen::MatrixXd res = dyn.A.transpose() * P + P * dyn.A + Q -
                                P * dyn.B * rllt.solve(dyn.B.transpose() * P);
    if (res.norm() < 1e-10) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NotStabilizable("Riccati iteration did not converge");
  }

  GainDesign out{P, K, c};

  // Invariant: the design must place A - c*lambda*B*K in the open left half
  // plane for every nonzero Laplacian eigenvalue lambda.
  const Eigen::MatrixXcd Ac = dyn.A.cast<std::complex<double>>();
  const Eigen::MatrixXcd BKc = (dyn.B * K).cast<std::complex<double>>();
  for (Eigen::Index k = 0; k < L.rows(); ++k) {
    const std::complex<double> lam = les.eigenvalues()(k);
    if (std::abs(lam) <= ztol) continue;
    if (!is_hurwitz(Ac - c * lam * BKc)) {
      throw NotStabilizable("coupling gain fails the per-eigenvalue test");
    }
  }
  return out;
}

Eigen::VectorXd local_tracking_error(
    const DiGraph& g, const std::vector<Eigen::VectorXd>& x, int i,
    const std::map<int, Eigen::VectorXd>* noise) {
  if (i < 0 || i >= g.size()) throw ConfigError("agent index out of range");
  if (static_cast<int>(x.size()) != g.size()) {
    throw DimensionMismatch("state list size must match agent count");
  }
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(x[i].size());
  for (const int j : g.in_neighbors(i)) {
    const double a = g.weight(i, j);
    eta += a * (x[j] - x[i]);
    if (noise != nullptr) {
      const auto it = noise->find(j);
      if (it != noise->end()) eta += a * it->second;
    }
  }
  return eta;
}

Eigen::VectorXd nominal_control(const GainDesign& gains,
                                const Eigen::VectorXd& eta_i) {
  if (gains.K.cols() != eta_i.size()) {
    throw DimensionMismatch("gain/state dimension mismatch");
  }
  return gains.c * (gains.K * eta_i);
}

Eigen::VectorXd integrate_step(const AgentDynamics& dyn,
                               const Eigen::VectorXd& x_i,
                               const Eigen::VectorXd& u_i, double dt) {
  if (dt <= 0.0) throw ConfigError("integration step must be positive");
  const Eigen::VectorXd bu = dyn.B * u_i;
  const auto f = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return dyn.A * x + bu;
  };
  const Eigen::VectorXd k1 = f(x_i);
  const Eigen::VectorXd k2 = f(x_i + 0.5 * dt * k1);
  const Eigen::VectorXd k3 = f(x_i + 0.5 * dt * k2);
  const Eigen::VectorXd k4 = f(x_i + dt * k3);
  return x_i + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

SpectrumClassification classify_A_spectrum(const AgentDynamics& dyn,
                                           double tolerance) {
  SpectrumClassification out;
  Eigen::EigenSolver<Eigen::MatrixXd> es(dyn.A, false);
  for (Eigen::Index k = 0; k < dyn.A.rows(); ++k) {
    const std::complex<double> lam = es.eigenvalues()(k);
    out.eigenvalues.push_back(lam);
    if (std::abs(lam.real()) < tolerance) out.marginal.push_back(lam);
    if (lam.real() > tolerance) out.has_unstable = true;
  }
  return out;
}

Eigen::MatrixXd aggregate_noise_covariance(const DiGraph& g,
                                           const NoiseModel& noise, int i,
                                           int n_x) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_x, n_x);
  for (const int j : g.in_neighbors(i)) {
    const Eigen::MatrixXd* cov = noise.covariance(i, j);
    if (cov == nullptr) continue;
    const double a = g.weight(i, j);
    out += a * a * (*cov);
  }
  return out;
}

}  // namespace rescon
