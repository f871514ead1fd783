// Copyright 2026 The PVC Authors
// Adam with bias correction; per-parameter first/second moments.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pvc/errors.hpp"
#include "pvc/nn/param.hpp"

namespace pvc::nn {

class Adam {
 public:
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void attach(const ParamRefs& params) {
    params_ = params;
    m_.clear();
    v_.clear();
    for (const Tensor* p : params) {
      m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    }
    step_ = 0;
  }

  void step(double lr) {
    if (params_.empty()) throw ContractViolation("optimizer not attached");
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
    for (size_t i = 0; i < params_.size(); ++i) {
      Tensor* p = params_[i];
      m_[i] = beta1 * m_[i] + (1.0 - beta1) * p->grad;
      v_[i] = (beta2 * v_[i].array() +
               (1.0 - beta2) * p->grad.array().square())
                  .matrix();
      Eigen::ArrayXXd mhat = m_[i].array() / bc1;
      Eigen::ArrayXXd vhat = v_[i].array() / bc2;
      p->value.array() -= lr * mhat / (vhat.sqrt() + epsilon);
    }
  }

  uint64_t step_count() const { return step_; }
  void set_step_count(uint64_t t) { step_ = t; }

  size_t size() const { return params_.size(); }
  const Mat& first_moment(size_t i) const { return m_[i]; }
  const Mat& second_moment(size_t i) const { return v_[i]; }
  Mat& first_moment(size_t i) { return m_[i]; }
  Mat& second_moment(size_t i) { return v_[i]; }
  const ParamRefs& params() const { return params_; }

 private:
  ParamRefs params_;
  std::vector<Mat> m_, v_;
  uint64_t step_ = 0;
};

}  // namespace pvc::nn
