// Copyright 2026 The PVC Authors
// Gated recurrent unit, forward and hand-derived backward over sequences.
//
//   z_t = sigmoid(x_t Wz + h_{t-1} Uz + bz)
//   r_t = sigmoid(x_t Wr + h_{t-1} Ur + br)
//   n_t = tanh(x_t Wn + r_t .* (h_{t-1} Un) + bn)
//   h_t = (1 - z_t) .* n_t + z_t .* h_{t-1}
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Core>
#include <string>

#include "pvc/errors.hpp"
#include "pvc/nn/param.hpp"

namespace pvc::nn {

struct Gru {
  Tensor wz, wr, wn;  // input -> hidden
  Tensor uz, ur, un;  // hidden -> hidden
  Tensor bz, br, bn;
  int input_dim = 0, hidden_dim = 0;

  void init(const std::string& name, int in, int hidden, Rng& rng) {
    input_dim = in;
    hidden_dim = hidden;
    auto setup = [&](Tensor& t, const char* suffix, Eigen::Index rows,
                     Eigen::Index cols, Eigen::Index fan_in) {
      t.name = name + "." + suffix;
      t.resize(rows, cols);
      t.init_uniform(rng, fan_in);
    };
    setup(wz, "wz", in, hidden, in);
    setup(wr, "wr", in, hidden, in);
    setup(wn, "wn", in, hidden, in);
    setup(uz, "uz", hidden, hidden, hidden);
    setup(ur, "ur", hidden, hidden, hidden);
    setup(un, "un", hidden, hidden, hidden);
    setup(bz, "bz", 1, hidden, in);
    setup(br, "br", 1, hidden, in);
    setup(bn, "bn", 1, hidden, in);
  }

  void collect(ParamRefs& out) {
    for (Tensor* t : {&wz, &wr, &wn, &uz, &ur, &un, &bz, &br, &bn})
      out.push_back(t);
  }

  struct Cache {
    Mat x;                  // T x in
    Mat z, r, n, hun;       // T x hidden (hun = h_{t-1} Un)
    Mat h;                  // (T+1) x hidden, row 0 is the initial state
  };

  /// One recurrence step without caching; for inference loops.
  Row step(const Row& x, const Row& hprev) const {
    Row az = x * wz.value + hprev * uz.value + bz.value.row(0);
    Row ar = x * wr.value + hprev * ur.value + br.value.row(0);
    Row z = (1.0 / (1.0 + (-az.array()).exp())).matrix();
    Row r = (1.0 / (1.0 + (-ar.array()).exp())).matrix();
    Row an = x * wn.value + (r.array() * (hprev * un.value).array()).matrix() +
             bn.value.row(0);
    Row n = an.array().tanh().matrix();
    return ((1.0 - z.array()) * n.array() + z.array() * hprev.array())
        .matrix();
  }

  /// Runs the recurrence over all rows of x; returns T x hidden states.
  Mat forward(const Mat& x, Cache& cache) const {
    if (x.cols() != input_dim) throw ContractViolation("gru input mismatch");
    const Eigen::Index T = x.rows();
    cache.x = x;
    cache.z.resize(T, hidden_dim);
    cache.r.resize(T, hidden_dim);
    cache.n.resize(T, hidden_dim);
    cache.hun.resize(T, hidden_dim);
    cache.h.setZero(T + 1, hidden_dim);
    for (Eigen::Index t = 0; t < T; ++t) {
      Row hprev = cache.h.row(t);
      Row az = x.row(t) * wz.value + hprev * uz.value + bz.value.row(0);
      Row ar = x.row(t) * wr.value + hprev * ur.value + br.value.row(0);
      Row z = (1.0 / (1.0 + (-az.array()).exp())).matrix();
      Row r = (1.0 / (1.0 + (-ar.array()).exp())).matrix();
      Row hun_t = hprev * un.value;
      Row an = x.row(t) * wn.value + (r.array() * hun_t.array()).matrix() +
               bn.value.row(0);
      Row n = an.array().tanh().matrix();
      cache.z.row(t) = z;
      cache.r.row(t) = r;
      cache.n.row(t) = n;
      cache.hun.row(t) = hun_t;
      cache.h.row(t + 1) = ((1.0 - z.array()) * n.array() +
                            z.array() * hprev.array())
                               .matrix();
    }
    return cache.h.bottomRows(T);
  }

  /// dh is the upstream gradient on each emitted hidden state.
  /// Accumulates parameter gradients; returns the input gradient.
  Mat backward(const Cache& cache, const Mat& dh) {
    const Eigen::Index T = cache.x.rows();
    Mat dx = Mat::Zero(T, input_dim);
    Row carry = Row::Zero(hidden_dim);
    for (Eigen::Index t = T - 1; t >= 0; --t) {
      Row total = dh.row(t) + carry;
      Row hprev = cache.h.row(t);
      Row z = cache.z.row(t), r = cache.r.row(t), n = cache.n.row(t);
      Row dn = (total.array() * (1.0 - z.array())).matrix();
      Row dz = (total.array() * (hprev.array() - n.array())).matrix();
      Row dhprev = (total.array() * z.array()).matrix();

      Row dan = (dn.array() * (1.0 - n.array().square())).matrix();
      wn.grad += cache.x.row(t).transpose() * dan;
      bn.grad += dan;
      dx.row(t) += dan * wn.value.transpose();
      Row dr = (dan.array() * cache.hun.row(t).array()).matrix();
      Row dhun = (dan.array() * r.array()).matrix();
      un.grad += hprev.transpose() * dhun;
      dhprev += dhun * un.value.transpose();

      Row dar = (dr.array() * r.array() * (1.0 - r.array())).matrix();
      wr.grad += cache.x.row(t).transpose() * dar;
      br.grad += dar;
      dx.row(t) += dar * wr.value.transpose();
      ur.grad += hprev.transpose() * dar;
      dhprev += dar * ur.value.transpose();

      Row daz = (dz.array() * z.array() * (1.0 - z.array())).matrix();
      wz.grad += cache.x.row(t).transpose() * daz;
      bz.grad += daz;
      dx.row(t) += daz * wz.value.transpose();
      uz.grad += hprev.transpose() * daz;
      dhprev += daz * uz.value.transpose();

      carry = dhprev;
    }
    return dx;
  }
};

/// Two independent recurrences, one over reversed time; outputs concatenated.
struct BiGru {
  Gru fwd, bwd;

  void init(const std::string& name, int in, int hidden, Rng& rng) {
    fwd.init(name + ".fwd", in, hidden, rng);
    bwd.init(name + ".bwd", in, hidden, rng);
  }

  void collect(ParamRefs& out) {
    fwd.collect(out);
    bwd.collect(out);
  }

  int output_dim() const { return fwd.hidden_dim + bwd.hidden_dim; }

  struct Cache {
    Gru::Cache fwd, bwd;
  };

  Mat forward(const Mat& x, Cache& cache) const {
    Mat hf = fwd.forward(x, cache.fwd);
    Mat hb = bwd.forward(x.colwise().reverse(), cache.bwd);
    Mat out(x.rows(), output_dim());
    out.leftCols(fwd.hidden_dim) = hf;
    out.rightCols(bwd.hidden_dim) = hb.colwise().reverse();
    return out;
  }

  Mat backward(const Cache& cache, const Mat& dout) {
    Mat dhf = dout.leftCols(fwd.hidden_dim);
    Mat dhb = dout.rightCols(bwd.hidden_dim).colwise().reverse();
    Mat dx = fwd.backward(cache.fwd, dhf);
    dx += bwd.backward(cache.bwd, dhb).colwise().reverse();
    return dx;
  }
};

}  // namespace pvc::nn
