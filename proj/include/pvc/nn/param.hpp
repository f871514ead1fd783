// Copyright 2026 The PVC Authors
// Trainable parameter tensors with accumulated gradients.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "pvc/errors.hpp"
#include "pvc/rng.hpp"

namespace pvc::nn {

using Mat = Eigen::MatrixXd;
using Row = Eigen::RowVectorXd;

struct Tensor {
  std::string name;
  Mat value;
  Mat grad;

  void resize(Eigen::Index rows, Eigen::Index cols) {
    value.setZero(rows, cols);
    grad.setZero(rows, cols);
  }

  void zero_grad() { grad.setZero(); }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) entries.
  void init_uniform(Rng& rng, Eigen::Index fan_in) {
    double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(
                             fan_in, 1)));
    for (Eigen::Index r = 0; r < value.rows(); ++r)
      for (Eigen::Index c = 0; c < value.cols(); ++c)
        value(r, c) = rng.uniform(-bound, bound);
  }

  Eigen::Index size() const { return value.size(); }
};

using ParamRefs = std::vector<Tensor*>;

inline void zero_grads(const ParamRefs& params) {
  for (Tensor* p : params) p->zero_grad();
}

inline Eigen::Index param_count(const ParamRefs& params) {
  Eigen::Index n = 0;
  for (const Tensor* p : params) n += p->size();
  return n;
}

inline void check_unique_names(const ParamRefs& params) {
  std::vector<std::string> names;
  names.reserve(params.size());
  for (const Tensor* p : params) names.push_back(p->name);
  std::sort(names.begin(), names.end());
  for (size_t i = 0; i + 1 < names.size(); ++i)
    if (names[i] == names[i + 1])
      throw ContractViolation("duplicate parameter name: " + names[i]);
}

}  // namespace pvc::nn
