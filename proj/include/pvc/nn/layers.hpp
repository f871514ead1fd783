// Copyright 2026 The PVC Authors
// Dense layers with hand-derived backward passes. Caches hold exactly what
// the backward pass reads; forward is pure given parameters.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Core>
#include <string>

#include "pvc/errors.hpp"
#include "pvc/nn/param.hpp"

namespace pvc::nn {

inline Mat tanh_forward(const Mat& x) {
  return x.array().tanh().matrix();
}

/// d/dx tanh given the cached tanh output y.
inline Mat tanh_backward(const Mat& y, const Mat& dy) {
  return (dy.array() * (1.0 - y.array().square())).matrix();
}

inline Mat sigmoid(const Mat& x) {
  return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

// ---------------------------------------------------------------------------
// Linear: rows are observations, y = x W + b.
// ---------------------------------------------------------------------------

struct Linear {
  Tensor w, b;

  void init(const std::string& name, Eigen::Index in, Eigen::Index out,
            Rng& rng) {
    w.name = name + ".w";
    b.name = name + ".b";
    w.resize(in, out);
    b.resize(1, out);
    w.init_uniform(rng, in);
    b.init_uniform(rng, in);
  }

  void collect(ParamRefs& out) {
    out.push_back(&w);
    out.push_back(&b);
  }

  struct Cache {
    Mat x;
  };

  Mat forward(const Mat& x, Cache& cache) const {
    cache.x = x;
    return (x * w.value).rowwise() + b.value.row(0);
  }

  Mat backward(const Cache& cache, const Mat& dy) {
    w.grad += cache.x.transpose() * dy;
    b.grad += dy.colwise().sum();
    return dy * w.value.transpose();
  }
};

// ---------------------------------------------------------------------------
// Embedding: integer ids -> table rows.
// ---------------------------------------------------------------------------

struct Embedding {
  Tensor table;

  void init(const std::string& name, Eigen::Index vocab, Eigen::Index dim,
            Rng& rng) {
    table.name = name;
    table.resize(vocab, dim);
    table.init_uniform(rng, dim);
  }

  void collect(ParamRefs& out) { out.push_back(&table); }

  struct Cache {
    Eigen::VectorXi ids;
  };

  Mat forward(const Eigen::VectorXi& ids, Cache& cache) const {
    for (Eigen::Index i = 0; i < ids.size(); ++i)
      if (ids(i) < 0 || ids(i) >= table.value.rows())
        throw ContractViolation("embedding index out of range: " +
                                std::to_string(ids(i)));
    cache.ids = ids;
    Mat out(ids.size(), table.value.cols());
    for (Eigen::Index i = 0; i < ids.size(); ++i)
      out.row(i) = table.value.row(ids(i));
    return out;
  }

  void backward(const Cache& cache, const Mat& dy) {
    for (Eigen::Index i = 0; i < cache.ids.size(); ++i)
      table.grad.row(cache.ids(i)) += dy.row(i);
  }
};

// ---------------------------------------------------------------------------
// Time pooling / upsampling used around the prosody convolution stack.
// ---------------------------------------------------------------------------

/// Max over non-overlapping pairs of frames; an odd tail forms its own block,
/// so the output has ceil(T/2) rows.
struct MaxPoolTime2 {
  struct Cache {
    Eigen::Index in_rows = 0;
    Eigen::MatrixX<Eigen::Index> argmax;  // out_rows x D, source row index
  };

  static Mat forward(const Mat& x, Cache& cache) {
    const Eigen::Index T = x.rows(), D = x.cols();
    const Eigen::Index out_rows = (T + 1) / 2;
    cache.in_rows = T;
    cache.argmax.resize(out_rows, D);
    Mat y(out_rows, D);
    for (Eigen::Index b = 0; b < out_rows; ++b) {
      Eigen::Index r0 = 2 * b;
      Eigen::Index r1 = std::min(r0 + 1, T - 1);
      for (Eigen::Index d = 0; d < D; ++d) {
        if (r1 > r0 && x(r1, d) > x(r0, d)) {
          y(b, d) = x(r1, d);
          cache.argmax(b, d) = r1;
        } else {
          y(b, d) = x(r0, d);
          cache.argmax(b, d) = r0;
        }
      }
    }
    return y;
  }

  static Mat backward(const Cache& cache, const Mat& dy) {
    Mat dx = Mat::Zero(cache.in_rows, dy.cols());
    for (Eigen::Index b = 0; b < dy.rows(); ++b)
      for (Eigen::Index d = 0; d < dy.cols(); ++d)
        dx(cache.argmax(b, d), d) += dy(b, d);
    return dx;
  }
};

/// Nearest-neighbor x2 along time, truncated to target_rows.
struct UpsampleTime2 {
  struct Cache {
    Eigen::Index in_rows = 0;
    Eigen::Index out_rows = 0;
  };

  static Mat forward(const Mat& x, Eigen::Index target_rows, Cache& cache) {
    if (target_rows > 2 * x.rows())
      throw ContractViolation("upsample target exceeds 2x input length");
    cache.in_rows = x.rows();
    cache.out_rows = target_rows;
    Mat y(target_rows, x.cols());
    for (Eigen::Index t = 0; t < target_rows; ++t) y.row(t) = x.row(t / 2);
    return y;
  }

  static Mat backward(const Cache& cache, const Mat& dy) {
    Mat dx = Mat::Zero(cache.in_rows, dy.cols());
    for (Eigen::Index t = 0; t < cache.out_rows; ++t)
      dx.row(t / 2) += dy.row(t);
    return dx;
  }
};

}  // namespace pvc::nn
