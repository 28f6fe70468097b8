#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace rescon {

/// Parameters of the Gaussian underlying a folded Gaussian |X|,
/// X ~ N(mu, sigma2). Canonical form keeps mu >= 0 (the fold makes the
/// sign unobservable).
struct FoldedGaussianParams {
  double mu = 0.0;
  double sigma2 = 1.0;
};

/// Multivariate Gaussian parameters.
struct GaussianParams {
  Eigen::VectorXd mu;
  Eigen::MatrixXd Sigma;
};

/// Regularization floor added to estimated covariances.
inline constexpr double kCovarianceFloor = 1e-9;

/// Variances at or below this are treated as degenerate by the KL
/// closed forms.
inline constexpr double kDegenerateVarianceFloor = 1e-10;

/// Saturation magnitude for the folded KL closed form when its
/// exponential terms overflow double range.
inline constexpr double kKlSaturation = 1e100;

/// Closed-form KL divergence D(p || q) between folded Gaussians.
///
/// Implements a truncated-series closed form: a Gaussian part
///   T1 = 0.5*(log(s2q/s2p) - 1 + s2p/s2q) + 0.5*(muq - mup)^2/s2q
/// plus 1 plus six exponential correction terms built from
/// rho_{1..4} = mup -+ {2,4}*muq*s2p/s2q. The expression is exact when
/// both means are zero (it reduces to T1, the half-normal KL) and exactly
/// zero when p == q; away from those cases it carries an O(mu^2)
/// approximation error, so its agreement with numeric quadrature holds
/// only for small |mu|/sigma (measured envelope: about 0.05 for 10%
/// relative / 0.02 absolute accuracy; see README). Values are evaluated
/// in log space and saturate at +-1e100 instead of overflowing.
///
/// Throws DegenerateVariance when either sigma2 <= kDegenerateVarianceFloor
/// (except in the exact p == q case, which returns 0 by identity).
double folded_gaussian_kl(const FoldedGaussianParams& p,
                          const FoldedGaussianParams& q);

/// KL divergence D(p || q) between multivariate Gaussians:
/// 0.5*(log(det Sq/det Sp) - d + tr(Sq^-1 Sp) + (mp-mq)' Sq^-1 (mp-mq)).
/// Throws DimensionMismatch on unequal dimensions and DegenerateVariance
/// when a covariance is not positive definite.
double gaussian_kl(const GaussianParams& p, const GaussianParams& q);

/// Numeric KL oracle: adaptive-Simpson quadrature of
/// p(x) * log(p(x)/q(x)) over [lo, hi] to the given absolute tolerance.
/// Test-grade ground truth for the closed forms.
/// Throws QuadratureFailure if the recursion cannot reach the tolerance.
double kl_numeric_oracle(const std::function<double(double)>& p_density,
                         const std::function<double(double)>& q_density,
                         double lo, double hi, double abs_tol = 1e-8);

/// Folded Gaussian density at x >= 0.
double folded_gaussian_density(double x, const FoldedGaussianParams& p);

/// Mean of |X| for X ~ N(mu, sigma2).
double folded_gaussian_mean(double mu, double sigma2);

/// Method-of-moments fit of a folded Gaussian to nonnegative samples:
/// matches the sample mean and second moment exactly. Falls back to
/// (mu = 0, sigma2 = second moment) when the sample mean is at or below
/// the zero-mean bound sqrt(2*m2/pi), where the two parameters are no
/// longer separately identifiable.
/// Needs at least 8 samples (TooFewSamples); samples must be >= 0
/// (ConfigError).
FoldedGaussianParams window_estimate_folded(const std::vector<double>& samples);

/// Same fit from precomputed window moments: m the sample mean of |X|,
/// m2 the sample mean of X^2. Lets rolling-window callers skip the pass
/// over the buffer.
FoldedGaussianParams folded_fit_from_moments(double m, double m2);

/// Sample mean and covariance (population normalization) of vector
/// samples, regularized by kCovarianceFloor * I.
/// Needs at least d + 2 samples (TooFewSamples).
GaussianParams window_estimate_gaussian(
    const std::vector<Eigen::VectorXd>& samples);

}  // namespace rescon
