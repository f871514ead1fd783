// Copyright 2026 The PVC Authors
// Finite-difference checks for every layer type in isolation.
//
// Licensed under the Apache License, Version 2.0

#include <catch2/catch_amalgamated.hpp>

#include "pvc/nn/adam.hpp"
#include "pvc/nn/conv.hpp"
#include "pvc/nn/gru.hpp"
#include "pvc/nn/layers.hpp"
#include "support/test_util.hpp"

using namespace pvc;
using namespace pvc::nn;
using pvc_test::finite_difference_check;
using pvc_test::input_gradient_check;
using pvc_test::random_mat;

namespace {
constexpr double kTol = 1e-4;
}

TEST_CASE("linear layer gradients match finite differences", "[nn]") {
  Rng rng(41);
  Linear lin;
  lin.init("lin", 5, 3, rng);
  Mat x = random_mat(rng, 7, 5);
  Mat w_loss = random_mat(rng, 7, 3);
  auto loss = [&] {
    Linear::Cache c;
    return (lin.forward(x, c).array() * w_loss.array()).sum();
  };
  ParamRefs params;
  lin.collect(params);
  zero_grads(params);
  Linear::Cache cache;
  lin.forward(x, cache);
  Mat dx = lin.backward(cache, w_loss);
  REQUIRE(finite_difference_check(params, loss) < kTol);
  REQUIRE(input_gradient_check(x, dx, loss) < kTol);
}

TEST_CASE("embedding gradients land only on looked-up rows", "[nn]") {
  Rng rng(42);
  Embedding emb;
  emb.init("emb", 6, 4, rng);
  Eigen::VectorXi ids(5);
  ids << 0, 3, 3, 5, 1;
  Mat w_loss = random_mat(rng, 5, 4);
  auto loss = [&] {
    Embedding::Cache c;
    return (emb.forward(ids, c).array() * w_loss.array()).sum();
  };
  ParamRefs params;
  emb.collect(params);
  zero_grads(params);
  Embedding::Cache cache;
  emb.forward(ids, cache);
  emb.backward(cache, w_loss);
  REQUIRE(finite_difference_check(params, loss) < kTol);
  // Rows 2 and 4 were never looked up.
  REQUIRE(emb.table.grad.row(2).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(emb.table.grad.row(4).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE_THROWS_AS(
      [&] {
        Eigen::VectorXi bad(1);
        bad << 6;
        Embedding::Cache c;
        emb.forward(bad, c);
      }(),
      ContractViolation);
}

TEST_CASE("conv1d gradients match finite differences", "[nn]") {
  Rng rng(43);
  Conv1dTime conv;
  conv.init("conv", 3, 4, 5, rng);
  Mat x = random_mat(rng, 8, 3);
  Mat w_loss = random_mat(rng, 8, 4);
  auto loss = [&] {
    Conv1dTime::Cache c;
    return (conv.forward(x, c).array() * w_loss.array()).sum();
  };
  ParamRefs params;
  conv.collect(params);
  zero_grads(params);
  Conv1dTime::Cache cache;
  conv.forward(x, cache);
  Mat dx = conv.backward(cache, w_loss);
  REQUIRE(finite_difference_check(params, loss) < kTol);
  REQUIRE(input_gradient_check(x, dx, loss) < kTol);
}

TEST_CASE("conv2d gradients match finite differences", "[nn]") {
  Rng rng(44);
  Conv2dMaps conv;
  conv.init("conv2", 2, 3, rng);
  const Eigen::Index T = 4, W = 5;
  Mat x = random_mat(rng, T * W, 2);
  Mat w_loss = random_mat(rng, T * W, 3);
  auto loss = [&] {
    Conv2dMaps::Cache c;
    return (conv.forward(x, T, W, c).array() * w_loss.array()).sum();
  };
  ParamRefs params;
  conv.collect(params);
  zero_grads(params);
  Conv2dMaps::Cache cache;
  conv.forward(x, T, W, cache);
  Mat dx = conv.backward(cache, w_loss);
  REQUIRE(finite_difference_check(params, loss) < kTol);
  REQUIRE(input_gradient_check(x, dx, loss) < kTol);
}

TEST_CASE("max-pool and upsample round trip lengths and gradients", "[nn]") {
  Rng rng(45);
  for (Eigen::Index T : {2, 3, 7, 8}) {
    Mat x = random_mat(rng, T, 3);
    MaxPoolTime2::Cache pc;
    Mat pooled = MaxPoolTime2::forward(x, pc);
    REQUIRE(pooled.rows() == (T + 1) / 2);
    UpsampleTime2::Cache uc;
    Mat up = UpsampleTime2::forward(pooled, T, uc);
    REQUIRE(up.rows() == T);

    Mat w_loss = random_mat(rng, T, 3);
    auto loss = [&] {
      MaxPoolTime2::Cache c1;
      UpsampleTime2::Cache c2;
      Mat y = UpsampleTime2::forward(MaxPoolTime2::forward(x, c1), T, c2);
      return (y.array() * w_loss.array()).sum();
    };
    Mat dpooled = UpsampleTime2::backward(uc, w_loss);
    Mat dx = MaxPoolTime2::backward(pc, dpooled);
    REQUIRE(input_gradient_check(x, dx, loss) < kTol);
  }
}

TEST_CASE("gru gradients match finite differences", "[nn]") {
  Rng rng(46);
  Gru gru;
  gru.init("gru", 3, 4, rng);
  Mat x = random_mat(rng, 6, 3);
  Mat w_loss = random_mat(rng, 6, 4);
  auto loss = [&] {
    Gru::Cache c;
    return (gru.forward(x, c).array() * w_loss.array()).sum();
  };
  ParamRefs params;
  gru.collect(params);
  zero_grads(params);
  Gru::Cache cache;
  gru.forward(x, cache);
  Mat dx = gru.backward(cache, w_loss);
  REQUIRE(finite_difference_check(params, loss) < kTol);
  REQUIRE(input_gradient_check(x, dx, loss) < kTol);
}

TEST_CASE("gru step matches the sequence forward", "[nn]") {
  Rng rng(47);
  Gru gru;
  gru.init("gru", 3, 4, rng);
  Mat x = random_mat(rng, 5, 3);
  Gru::Cache cache;
  Mat h_seq = gru.forward(x, cache);
  Row h = Row::Zero(4);
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    h = gru.step(x.row(t), h);
    REQUIRE((h - h_seq.row(t)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("bidirectional gru gradients match finite differences", "[nn]") {
  Rng rng(48);
  BiGru bigru;
  bigru.init("bigru", 3, 2, rng);
  Mat x = random_mat(rng, 5, 3);
  Mat w_loss = random_mat(rng, 5, 4);
  auto loss = [&] {
    BiGru::Cache c;
    return (bigru.forward(x, c).array() * w_loss.array()).sum();
  };
  ParamRefs params;
  bigru.collect(params);
  zero_grads(params);
  BiGru::Cache cache;
  bigru.forward(x, cache);
  Mat dx = bigru.backward(cache, w_loss);
  REQUIRE(finite_difference_check(params, loss) < kTol);
  REQUIRE(input_gradient_check(x, dx, loss) < kTol);
}

TEST_CASE("adam decreases a quadratic", "[nn]") {
  Rng rng(49);
  Tensor t;
  t.name = "q";
  t.resize(3, 3);
  t.init_uniform(rng, 3);
  ParamRefs params{&t};
  Adam adam;
  adam.attach(params);
  double initial = t.value.squaredNorm();
  for (int i = 0; i < 200; ++i) {
    t.zero_grad();
    t.grad = 2.0 * t.value;  // d/dx ||x||^2
    adam.step(0.05);
  }
  REQUIRE(t.value.squaredNorm() < 0.01 * initial);
}

TEST_CASE("parameter names must be unique", "[nn]") {
  Tensor a, b;
  a.name = b.name = "same";
  a.resize(1, 1);
  b.resize(1, 1);
  ParamRefs params{&a, &b};
  REQUIRE_THROWS_AS(check_unique_names(params), ContractViolation);
}
