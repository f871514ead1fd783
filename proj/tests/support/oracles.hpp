// Copyright 2026 The PVC Authors
// Independent scalar-loop oracles used by unit and acceptance tests.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cmath>
#include <vector>

#include "pvc/nn/gru.hpp"

namespace pvc_test {

/// Plain-loop recurrence with the same update equations as pvc::nn::Gru,
/// written against raw scalars so it shares no code with the implementation.
inline std::vector<std::vector<double>> gru_scalar_oracle(
    const pvc::nn::Gru& g, const pvc::nn::Mat& x) {
  const int H = g.hidden_dim, I = g.input_dim;
  std::vector<std::vector<double>> h(x.rows() + 1,
                                     std::vector<double>(H, 0.0));
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    for (int j = 0; j < H; ++j) {
      double az = g.bz.value(0, j), ar = g.br.value(0, j);
      double an_x = g.bn.value(0, j), hun = 0.0;
      for (int i = 0; i < I; ++i) {
        az += x(t, i) * g.wz.value(i, j);
        ar += x(t, i) * g.wr.value(i, j);
        an_x += x(t, i) * g.wn.value(i, j);
      }
      for (int k = 0; k < H; ++k) {
        az += h[t][k] * g.uz.value(k, j);
        ar += h[t][k] * g.ur.value(k, j);
        hun += h[t][k] * g.un.value(k, j);
      }
      double z = sig(az), r = sig(ar);
      double n = std::tanh(an_x + r * hun);
      h[t + 1][j] = (1.0 - z) * n + z * h[t][j];
    }
  }
  h.erase(h.begin());
  return h;
}

}  // namespace pvc_test
