#pragma once

#include <vector>

#include <Eigen/Dense>

#include "rescon/stats.hpp"

namespace rescon {

// Fixed-capacity sliding windows with O(1) running moments. Removal-based
// accumulators drift over long runs, so both classes resum exactly from the
// buffer every few thousand pushes.

class RollingScalarWindow {
 public:
  explicit RollingScalarWindow(int capacity);

  void push(double x);  // evicts the oldest sample once full
  bool full() const { return count_ == static_cast<int>(buf_.size()); }
  int size() const { return count_; }
  int capacity() const { return static_cast<int>(buf_.size()); }

  double mean() const;
  double mean_sq() const;
  std::vector<double> contents() const;  // oldest to newest

 private:
  void recompute();

  std::vector<double> buf_;
  int head_ = 0;
  int count_ = 0;
  double sum_ = 0.0;
  double sum_sq_ = 0.0;
  long long pushes_ = 0;
};

class RollingVectorWindow {
 public:
  RollingVectorWindow(int capacity, int dim);

  void push(const Eigen::VectorXd& x);
  bool full() const { return count_ == static_cast<int>(buf_.size()); }
  int size() const { return count_; }
  int capacity() const { return static_cast<int>(buf_.size()); }
  int dim() const { return static_cast<int>(sum_.size()); }

  Eigen::VectorXd mean() const;
  // Population covariance of the buffer contents plus floor * I.
  Eigen::MatrixXd covariance(double floor) const;
  GaussianParams gaussian(double floor) const;
  std::vector<Eigen::VectorXd> contents() const;  // oldest to newest

 private:
  void recompute();

  std::vector<Eigen::VectorXd> buf_;
  int head_ = 0;
  int count_ = 0;
  Eigen::VectorXd sum_;
  Eigen::MatrixXd sum_outer_;
  long long pushes_ = 0;
};

}  // namespace rescon
