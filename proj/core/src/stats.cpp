#include "rescon/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "rescon/errors.hpp"

namespace rescon {

namespace {

constexpr double kLogDirectLimit = 690.0;   // exp() still finite below this
constexpr double kLogSaturation = 230.2585; // log(1e100)

double sq(double x) { return x * x; }

}  // namespace

double folded_gaussian_kl(const FoldedGaussianParams& p,
                          const FoldedGaussianParams& q) {
  // Identical parameters: KL is zero by definition. The closed form also
  // cancels to zero algebraically here, but the direct evaluation of its
  // exponential terms overflows for large mu/sigma, so short-circuit.
  if (p.mu == q.mu && p.sigma2 == q.sigma2) return 0.0;

  if (p.sigma2 <= kDegenerateVarianceFloor ||
      q.sigma2 <= kDegenerateVarianceFloor) {
    throw DegenerateVariance("folded KL with variance at or below floor");
  }

  const double mu1 = p.mu, s21 = p.sigma2;
  const double mu2 = q.mu, s22 = q.sigma2;

  const double t1 = 0.5 * (std::log(s22 / s21) - 1.0 + s21 / s22) +
                    0.5 * sq(mu2 - mu1) / s22;

  const double r1 = sq(mu1) / s21;
  const double ratio = s21 / s22;
  const double rho1 = mu1 - 2.0 * mu2 * ratio;
  const double rho2 = mu1 + 2.0 * mu2 * ratio;
  const double rho3 = mu1 - 4.0 * mu2 * ratio;
  const double rho4 = mu1 + 4.0 * mu2 * ratio;

  // Six exponential terms as (coefficient, exponent) pairs:
  //   0.5*e^{4 r1} - 0.5*e^{12 r1}
  //   + e^{-r1/2} * (0.5*e^{rho3^2/(2 s21)} + 0.5*e^{rho4^2/(2 s21)}
  //                  - e^{rho1^2/(2 s21)} - e^{rho2^2/(2 s21)})
  const double half_inv = 0.5 / s21;
  const std::array<double, 6> coeff = {0.5, -0.5, 0.5, 0.5, -1.0, -1.0};
  const std::array<double, 6> expo = {
      4.0 * r1,
      12.0 * r1,
      -0.5 * r1 + sq(rho3) * half_inv,
      -0.5 * r1 + sq(rho4) * half_inv,
      -0.5 * r1 + sq(rho1) * half_inv,
      -0.5 * r1 + sq(rho2) * half_inv,
  };

  const double emax = *std::max_element(expo.begin(), expo.end());
  if (emax <= kLogDirectLimit) {
    double s = 0.0;
    for (int k = 0; k < 6; ++k) s += coeff[k] * std::exp(expo[k]);
    return t1 + 1.0 + s;
  }

  // Shifted summation: factor out the dominant exponent so the relative
  // weights stay representable, then reapply it in log space.
  double shifted = 0.0;
  for (int k = 0; k < 6; ++k) {
    const double d = expo[k] - emax;
    if (d > -745.0) shifted += coeff[k] * std::exp(d);
  }
  if (shifted == 0.0) return t1 + 1.0;
  const double log_mag = emax + std::log(std::abs(shifted));
  const double sign = shifted > 0.0 ? 1.0 : -1.0;
  if (log_mag >= kLogSaturation) return sign * kKlSaturation;
  return t1 + 1.0 + sign * std::exp(log_mag);
}

double gaussian_kl(const GaussianParams& p, const GaussianParams& q) {
  const Eigen::Index d = p.mu.size();
  if (q.mu.size() != d || p.Sigma.rows() != d || p.Sigma.cols() != d ||
      q.Sigma.rows() != d || q.Sigma.cols() != d) {
    throw DimensionMismatch("gaussian KL dimension mismatch");
  }

  const Eigen::LLT<Eigen::MatrixXd> lp(p.Sigma);
  const Eigen::LLT<Eigen::MatrixXd> lq(q.Sigma);
  if (lp.info() != Eigen::Success || lq.info() != Eigen::Success) {
    throw DegenerateVariance("gaussian KL requires positive definite covariances");
  }

  double logdet_p = 0.0, logdet_q = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    logdet_p += 2.0 * std::log(lp.matrixL()(k, k));
    logdet_q += 2.0 * std::log(lq.matrixL()(k, k));
  }

  const Eigen::MatrixXd qinv_p = lq.solve(p.Sigma);
  const Eigen::VectorXd dm = p.mu - q.mu;
  const double quad = dm.dot(lq.solve(dm));

  return 0.5 * (logdet_q - logdet_p - static_cast<double>(d) +
                qinv_p.trace() + quad);
}

namespace {

struct SimpsonCtx {
  const std::function<double(double)>* integrand;
  int max_depth;
};

double integrand_eval(const std::function<double(double)>& p,
                      const std::function<double(double)>& q, double x) {
  const double px = p(x);
  if (px < 1e-300) return 0.0;  // lim_{p->0} p log(p/q) = 0
  double qx = q(x);
  if (qx < 1e-300) qx = 1e-300;
  return px * std::log(px / qx);
}

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth <= 0) throw QuadratureFailure("adaptive quadrature depth exhausted");
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double kl_numeric_oracle(const std::function<double(double)>& p_density,
                         const std::function<double(double)>& q_density,
                         double lo, double hi, double abs_tol) {
  if (!(hi > lo)) throw ConfigError("quadrature interval must be nonempty");
  const std::function<double(double)> f = [&](double x) {
    return integrand_eval(p_density, q_density, x);
  };
  const double m = 0.5 * (lo + hi);
  const double fa = f(lo), fm = f(m), fb = f(hi);
  const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, lo, hi, fa, fm, fb, whole, abs_tol, 60);
}

double folded_gaussian_density(double x, const FoldedGaussianParams& p) {
  if (x < 0.0) return 0.0;
  const double s = std::sqrt(p.sigma2);
  const double c = 1.0 / (std::sqrt(2.0 * M_PI) * s);
  return c * (std::exp(-sq(x - p.mu) / (2.0 * p.sigma2)) +
              std::exp(-sq(x + p.mu) / (2.0 * p.sigma2)));
}

double folded_gaussian_mean(double mu, double sigma2) {
  const double s = std::sqrt(sigma2);
  return s * std::sqrt(2.0 / M_PI) * std::exp(-sq(mu) / (2.0 * sigma2)) +
         mu * std::erf(mu / (s * std::sqrt(2.0)));
}

FoldedGaussianParams window_estimate_folded(
    const std::vector<double>& samples) {
  if (samples.size() < 8) {
    throw TooFewSamples("folded fit needs at least 8 samples");
  }
  double m = 0.0, m2 = 0.0;
  for (double x : samples) {
    if (x < 0.0) throw ConfigError("folded fit samples must be nonnegative");
    m += x;
    m2 += x * x;
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  return folded_fit_from_moments(m * inv, m2 * inv);
}

FoldedGaussianParams folded_fit_from_moments(double m, double m2) {
  if (m2 < kCovarianceFloor) return {0.0, kCovarianceFloor};

  // E|X| and E X^2 determine (mu, sigma2) through
  //   E X^2 = mu^2 + sigma^2,
  //   E|X| = folded_gaussian_mean(mu, sigma2).
  // At mu = 0 the mean saturates at sqrt(2*m2/pi); below that bound only
  // the zero-mean solution exists.
  const double zero_mean_bound = std::sqrt(2.0 * m2 / M_PI);
  if (m <= zero_mean_bound * (1.0 + 1e-12)) return {0.0, m2};

  double lo = 0.0, hi = m;  // folded mean >= mu, so the root is in [0, m]
  for (int it = 0; it < 60 && hi - lo > 1e-13 * (1.0 + m); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double s2 = std::max(m2 - mid * mid, kCovarianceFloor);
    if (folded_gaussian_mean(mid, s2) < m) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double mu = 0.5 * (lo + hi);
  return {mu, std::max(m2 - mu * mu, kCovarianceFloor)};
}

GaussianParams window_estimate_gaussian(
    const std::vector<Eigen::VectorXd>& samples) {
  if (samples.empty()) throw TooFewSamples("gaussian fit with no samples");
  const Eigen::Index d = samples.front().size();
  if (static_cast<Eigen::Index>(samples.size()) < d + 2) {
    throw TooFewSamples("gaussian fit needs at least d + 2 samples");
  }
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& x : samples) {
    if (x.size() != d) throw DimensionMismatch("inconsistent sample dimension");
    mean += x;
  }
  mean /= static_cast<double>(samples.size());

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (const auto& x : samples) {
    const Eigen::VectorXd c = x - mean;
    cov += c * c.transpose();
  }
  cov /= static_cast<double>(samples.size());
  cov += kCovarianceFloor * Eigen::MatrixXd::Identity(d, d);
  return {mean, cov};
}

}  // namespace rescon
