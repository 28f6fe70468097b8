#include "rescon/window.hpp"

#include "rescon/errors.hpp"

namespace rescon {

namespace {
constexpr long long kResumPeriod = 8192;
}

RollingScalarWindow::RollingScalarWindow(int capacity) {
  if (capacity < 1) throw ConfigError("window capacity must be positive");
  buf_.assign(static_cast<size_t>(capacity), 0.0);
}

void RollingScalarWindow::push(double x) {
  if (full()) {
    const double old = buf_[head_];
    sum_ -= old;
    sum_sq_ -= old * old;
  } else {
    ++count_;
  }
  buf_[head_] = x;
  head_ = (head_ + 1) % static_cast<int>(buf_.size());
  sum_ += x;
  sum_sq_ += x * x;
  if (++pushes_ % kResumPeriod == 0) recompute();
}

double RollingScalarWindow::mean() const {
  if (count_ == 0) throw TooFewSamples("mean of empty window");
  return sum_ / count_;
}

double RollingScalarWindow::mean_sq() const {
  if (count_ == 0) throw TooFewSamples("moment of empty window");
  return sum_sq_ / count_;
}

std::vector<double> RollingScalarWindow::contents() const {
  std::vector<double> out;
  out.reserve(count_);
  const int n = static_cast<int>(buf_.size());
  const int start = full() ? head_ : 0;
  for (int k = 0; k < count_; ++k) out.push_back(buf_[(start + k) % n]);
  return out;
}

void RollingScalarWindow::recompute() {
  sum_ = 0.0;
  sum_sq_ = 0.0;
  const int n = static_cast<int>(buf_.size());
  const int start = full() ? head_ : 0;
  for (int k = 0; k < count_; ++k) {
    const double x = buf_[(start + k) % n];
    sum_ += x;
    sum_sq_ += x * x;
  }
}

RollingVectorWindow::RollingVectorWindow(int capacity, int dim) {
  if (capacity < 1) throw ConfigError("window capacity must be positive");
  if (dim < 1) throw ConfigError("window dimension must be positive");
  buf_.assign(static_cast<size_t>(capacity), Eigen::VectorXd::Zero(dim));
  sum_ = Eigen::VectorXd::Zero(dim);
  sum_outer_ = Eigen::MatrixXd::Zero(dim, dim);
}

void RollingVectorWindow::push(const Eigen::VectorXd& x) {
  if (x.size() != sum_.size()) {
    throw DimensionMismatch("window sample dimension mismatch");
  }
  if (full()) {
    const Eigen::VectorXd& old = buf_[head_];
    sum_ -= old;
    sum_outer_ -= old * old.transpose();
  } else {
    ++count_;
  }
  buf_[head_] = x;
  head_ = (head_ + 1) % static_cast<int>(buf_.size());
  sum_ += x;
  sum_outer_ += x * x.transpose();
  if (++pushes_ % kResumPeriod == 0) recompute();
}

Eigen::VectorXd RollingVectorWindow::mean() const {
  if (count_ == 0) throw TooFewSamples("mean of empty window");
  return sum_ / count_;
}

Eigen::MatrixXd RollingVectorWindow::covariance(double floor) const {
  if (count_ == 0) throw TooFewSamples("covariance of empty window");
  const Eigen::VectorXd mu = sum_ / count_;
  Eigen::MatrixXd cov = sum_outer_ / count_ - mu * mu.transpose();
  cov = 0.5 * (cov + cov.transpose());
  cov += floor * Eigen::MatrixXd::Identity(dim(), dim());
  return cov;
}

GaussianParams RollingVectorWindow::gaussian(double floor) const {
  return {mean(), covariance(floor)};
}

std::vector<Eigen::VectorXd> RollingVectorWindow::contents() const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(count_);
  const int n = static_cast<int>(buf_.size());
  const int start = full() ? head_ : 0;
  for (int k = 0; k < count_; ++k) out.push_back(buf_[(start + k) % n]);
  return out;
}

void RollingVectorWindow::recompute() {
  sum_.setZero();
  sum_outer_.setZero();
  const int n = static_cast<int>(buf_.size());
  const int start = full() ? head_ : 0;
  for (int k = 0; k < count_; ++k) {
    const Eigen::VectorXd& x = buf_[(start + k) % n];
    sum_ += x;
    sum_outer_ += x * x.transpose();
  }
}

}  // namespace rescon
