// Copyright 2026 The PVC Authors
// Same-padded stride-1 convolutions via im2col, with exact backward passes.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Core>
#include <string>

#include "pvc/errors.hpp"
#include "pvc/nn/param.hpp"

namespace pvc::nn {

// ---------------------------------------------------------------------------
// Conv1dTime: input T x Cin, kernel K over time, output T x Cout.
// Weight layout: (K*Cin) x Cout, row = k*Cin + cin.
// ---------------------------------------------------------------------------

struct Conv1dTime {
  Tensor w, b;
  int kernel = 5;
  int cin = 0, cout = 0;

  void init(const std::string& name, int channels_in, int channels_out,
            int kernel_size, Rng& rng) {
    if (kernel_size % 2 == 0)
      throw ContractViolation("conv kernel must be odd for same padding");
    kernel = kernel_size;
    cin = channels_in;
    cout = channels_out;
    w.name = name + ".w";
    b.name = name + ".b";
    w.resize(static_cast<Eigen::Index>(kernel) * cin, cout);
    b.resize(1, cout);
    w.init_uniform(rng, static_cast<Eigen::Index>(kernel) * cin);
    b.init_uniform(rng, static_cast<Eigen::Index>(kernel) * cin);
  }

  void collect(ParamRefs& out) {
    out.push_back(&w);
    out.push_back(&b);
  }

  struct Cache {
    Mat cols;  // T x (K*Cin)
  };

  Mat forward(const Mat& x, Cache& cache) const {
    if (x.cols() != cin) throw ContractViolation("conv1d channel mismatch");
    const Eigen::Index T = x.rows();
    const int half = kernel / 2;
    cache.cols.setZero(T, static_cast<Eigen::Index>(kernel) * cin);
    for (Eigen::Index t = 0; t < T; ++t)
      for (int k = 0; k < kernel; ++k) {
        Eigen::Index src = t + k - half;
        if (src < 0 || src >= T) continue;
        cache.cols.block(t, static_cast<Eigen::Index>(k) * cin, 1, cin) =
            x.row(src);
      }
    return (cache.cols * w.value).rowwise() + b.value.row(0);
  }

  Mat backward(const Cache& cache, const Mat& dy) {
    w.grad += cache.cols.transpose() * dy;
    b.grad += dy.colwise().sum();
    Mat dcols = dy * w.value.transpose();
    const Eigen::Index T = dy.rows();
    const int half = kernel / 2;
    Mat dx = Mat::Zero(T, cin);
    for (Eigen::Index t = 0; t < T; ++t)
      for (int k = 0; k < kernel; ++k) {
        Eigen::Index src = t + k - half;
        if (src < 0 || src >= T) continue;
        dx.row(src) +=
            dcols.block(t, static_cast<Eigen::Index>(k) * cin, 1, cin);
      }
    return dx;
  }
};

// ---------------------------------------------------------------------------
// Conv2dMaps: 3x3 convolution over a (time x width) grid with M feature
// maps. Tensors are stored as (T*W) x M matrices, row index = t*W + x.
// Weight layout: (9*Min) x Mout, row = (dt*3 + dx)*Min + m.
// ---------------------------------------------------------------------------

struct Conv2dMaps {
  Tensor w, b;
  int min = 0, mout = 0;

  void init(const std::string& name, int maps_in, int maps_out, Rng& rng) {
    min = maps_in;
    mout = maps_out;
    w.name = name + ".w";
    b.name = name + ".b";
    w.resize(9 * static_cast<Eigen::Index>(min), mout);
    b.resize(1, mout);
    w.init_uniform(rng, 9 * static_cast<Eigen::Index>(min));
    b.init_uniform(rng, 9 * static_cast<Eigen::Index>(min));
  }

  void collect(ParamRefs& out) {
    out.push_back(&w);
    out.push_back(&b);
  }

  struct Cache {
    Mat cols;  // (T*W) x (9*Min)
    Eigen::Index T = 0, W = 0;
  };

  Mat forward(const Mat& x, Eigen::Index T, Eigen::Index W,
              Cache& cache) const {
    if (x.cols() != min || x.rows() != T * W)
      throw ContractViolation("conv2d shape mismatch");
    cache.T = T;
    cache.W = W;
    cache.cols.setZero(T * W, 9 * static_cast<Eigen::Index>(min));
    for (Eigen::Index t = 0; t < T; ++t)
      for (Eigen::Index xw = 0; xw < W; ++xw) {
        const Eigen::Index row = t * W + xw;
        for (int dt = -1; dt <= 1; ++dt)
          for (int dx = -1; dx <= 1; ++dx) {
            Eigen::Index st = t + dt, sx = xw + dx;
            if (st < 0 || st >= T || sx < 0 || sx >= W) continue;
            Eigen::Index tap = ((dt + 1) * 3 + (dx + 1)) *
                               static_cast<Eigen::Index>(min);
            cache.cols.block(row, tap, 1, min) = x.row(st * W + sx);
          }
      }
    return (cache.cols * w.value).rowwise() + b.value.row(0);
  }

  Mat backward(const Cache& cache, const Mat& dy) {
    w.grad += cache.cols.transpose() * dy;
    b.grad += dy.colwise().sum();
    Mat dcols = dy * w.value.transpose();
    Mat dx = Mat::Zero(cache.T * cache.W, min);
    for (Eigen::Index t = 0; t < cache.T; ++t)
      for (Eigen::Index xw = 0; xw < cache.W; ++xw) {
        const Eigen::Index row = t * cache.W + xw;
        for (int dt = -1; dt <= 1; ++dt)
          for (int dx_ = -1; dx_ <= 1; ++dx_) {
            Eigen::Index st = t + dt, sx = xw + dx_;
            if (st < 0 || st >= cache.T || sx < 0 || sx >= cache.W) continue;
            Eigen::Index tap = ((dt + 1) * 3 + (dx_ + 1)) *
                               static_cast<Eigen::Index>(min);
            dx.row(st * cache.W + sx) += dcols.block(row, tap, 1, min);
          }
      }
    return dx;
  }
};

}  // namespace pvc::nn
