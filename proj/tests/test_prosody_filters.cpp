// Copyright 2026 The PVC Authors
//
// Licensed under the Apache License, Version 2.0

#include <catch2/catch_amalgamated.hpp>
#include <vector>

#include "pvc/prosody_filters.hpp"
#include "support/oracles.hpp"
#include "support/test_util.hpp"

using namespace pvc;
using pvc_test::finite_difference_check;
using pvc_test::gru_scalar_oracle;
using pvc_test::random_mat;

namespace {

FramePhoneMap map_from(const std::vector<int>& v) {
  FramePhoneMap m;
  m.phone_of_frame = v;
  return m;
}

std::vector<int> expected_timestamps(int T, int tau) {
  std::vector<int> expect;
  for (int t = tau - 1; t < T; t += tau) expect.push_back(t);
  if (T % tau != 0) expect.push_back(T - 1);
  return expect;
}

}  // namespace

TEST_CASE("rdpf with T=128 tau=32 selects {31,63,95,127}", "[rdpf]") {
  Rng rng(61);
  nn::Mat p = random_mat(rng, 128, 4);
  Filtered f = rdpf(p, 32, RdpfMode::kDeterministic);
  REQUIRE(f.selected == std::vector<int>{31, 63, 95, 127});
  REQUIRE(f.data.rows() == 128);
}

TEST_CASE("rdpf with tau=1 is the identity", "[rdpf]") {
  Rng rng(62);
  nn::Mat p = random_mat(rng, 9, 4);
  Filtered f = rdpf(p, 1, RdpfMode::kDeterministic);
  REQUIRE(f.data == p);
  REQUIRE(f.selected.size() == 9);
  for (int t = 0; t < 9; ++t) REQUIRE(f.selected[t] == t);
}

TEST_CASE("rdpf T=6 tau=2 repeats v1 v3 v5", "[rdpf]") {
  Rng rng(63);
  nn::Mat p = random_mat(rng, 6, 3);
  Filtered f = rdpf(p, 2, RdpfMode::kDeterministic);
  // Hand-applied timestamp rule: {1, 3, 5}, each repeated over its block.
  REQUIRE(f.selected == std::vector<int>{1, 3, 5});
  for (int b = 0; b < 3; ++b) {
    REQUIRE(f.data.row(2 * b) == p.row(2 * b + 1));
    REQUIRE(f.data.row(2 * b + 1) == p.row(2 * b + 1));
  }
}

TEST_CASE("rdpf deterministic timestamps follow the formula", "[rdpf]") {
  Rng rng(64);
  for (int trial = 0; trial < 40; ++trial) {
    int T = 1 + static_cast<int>(rng.integer(200));
    int tau = 1 + static_cast<int>(rng.integer(T));
    nn::Mat p = random_mat(rng, T, 4);
    Filtered f = rdpf(p, tau, RdpfMode::kDeterministic);
    REQUIRE(f.selected == expected_timestamps(T, tau));
    // Exact piecewise constancy per block.
    for (size_t b = 0; b < f.blocks.size(); ++b)
      for (int t = f.blocks[b].first; t < f.blocks[b].second; ++t)
        REQUIRE(f.data.row(t) == p.row(f.selected[b]));
  }
}

TEST_CASE("rdpf random mode is seed-reproducible and block-confined",
          "[rdpf]") {
  Rng rng(65);
  nn::Mat p = random_mat(rng, 50, 4);
  Filtered a = rdpf(p, 7, RdpfMode::kRandom, 99);
  Filtered b = rdpf(p, 7, RdpfMode::kRandom, 99);
  REQUIRE(a.selected == b.selected);
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Filtered f = rdpf(p, 7, RdpfMode::kRandom, seed);
    REQUIRE(f.selected.size() == f.blocks.size());
    for (size_t i = 0; i < f.blocks.size(); ++i) {
      REQUIRE(f.selected[i] >= f.blocks[i].first);
      REQUIRE(f.selected[i] < f.blocks[i].second);
    }
  }
}

TEST_CASE("rdpf by-phone variant groups on segments", "[rdpf]") {
  Rng rng(66);
  nn::Mat p = random_mat(rng, 6, 4);
  FramePhoneMap map = map_from({0, 0, 1, 2, 2, 2});
  Filtered f = rdpf_by_phone(p, map, RdpfMode::kDeterministic);
  REQUIRE(f.selected == std::vector<int>{1, 2, 5});
  REQUIRE(f.blocks.size() == 3);
}

TEST_CASE("rdpf contract errors", "[rdpf]") {
  Rng rng(67);
  nn::Mat p = random_mat(rng, 4, 4);
  REQUIRE_THROWS_AS(rdpf(p, 0, RdpfMode::kDeterministic), ContractViolation);
}

TEST_CASE("adpf on the hua2 layout repeats phone-final hidden states",
          "[adpf]") {
  Rng rng(68);
  AdpfParams params;
  params.init(4, 4, rng);
  nn::Mat p = random_mat(rng, 6, 4);
  FramePhoneMap map = map_from({0, 0, 1, 2, 2, 2});
  Filtered f = adpf(p, map, params);
  auto h = gru_scalar_oracle(params.gru, p);
  std::vector<int> expect_rows = {1, 1, 2, 5, 5, 5};
  for (int t = 0; t < 6; ++t)
    for (int d = 0; d < 4; ++d)
      REQUIRE(f.data(t, d) ==
              Catch::Approx(h[expect_rows[t]][d]).margin(1e-12));
  REQUIRE(f.selected == std::vector<int>{1, 2, 5});
}

TEST_CASE("adpf with one phone repeats the last hidden state", "[adpf]") {
  Rng rng(69);
  AdpfParams params;
  params.init(4, 4, rng);
  nn::Mat p = random_mat(rng, 10, 4);
  Filtered f = adpf(p, map_from(std::vector<int>(10, 0)), params);
  for (int t = 0; t < 10; ++t) REQUIRE(f.data.row(t) == f.data.row(9));
}

TEST_CASE("zero input, state and biases give zero output", "[adpf]") {
  Rng rng(70);
  AdpfParams params;
  params.init(4, 4, rng);
  params.gru.bz.value.setZero();
  params.gru.br.value.setZero();
  params.gru.bn.value.setZero();
  nn::Mat p = nn::Mat::Zero(7, 4);
  Filtered f = adpf(p, map_from({0, 0, 0, 1, 1, 2, 2}), params);
  REQUIRE(f.data.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adpf gradients match finite differences on T=8 with 2 phones",
          "[adpf]") {
  Rng rng(71);
  AdpfParams params;
  params.init(4, 4, rng);
  nn::Mat p = random_mat(rng, 8, 4);
  FramePhoneMap map = map_from({0, 0, 0, 0, 1, 1, 1, 1});
  nn::Mat w_loss = random_mat(rng, 8, 4);
  auto loss = [&] {
    return (adpf(p, map, params).data.array() * w_loss.array()).sum();
  };
  nn::ParamRefs prefs;
  params.collect(prefs);
  nn::zero_grads(prefs);
  AdpfCache cache;
  adpf(p, map, params, &cache);
  nn::Mat dp = adpf_backward(params, cache, w_loss);
  REQUIRE(finite_difference_check(prefs, loss) < 1e-4);
  REQUIRE(pvc_test::input_gradient_check(p, dp, loss) < 1e-4);
}

TEST_CASE("gradient for a phone's block never reaches later frames",
          "[adpf]") {
  Rng rng(72);
  AdpfParams params;
  params.init(3, 3, rng);
  nn::Mat p = random_mat(rng, 9, 3);
  FramePhoneMap map = map_from({0, 0, 0, 1, 1, 1, 2, 2, 2});
  // Upstream touches only phone 0's output rows.
  nn::Mat upstream = nn::Mat::Zero(9, 3);
  upstream.topRows(3) = random_mat(rng, 3, 3);
  AdpfCache cache;
  adpf(p, map, params, &cache);
  nn::zero_grads([&] {
    nn::ParamRefs refs;
    params.collect(refs);
    return refs;
  }());
  nn::Mat dp = adpf_backward(params, cache, upstream);
  // Phone 0 ends at frame 2; frames 3.. get nothing.
  REQUIRE(dp.bottomRows(6).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero upstream gradient gives zero parameter gradient", "[adpf]") {
  Rng rng(73);
  AdpfParams params;
  params.init(3, 3, rng);
  nn::ParamRefs refs;
  params.collect(refs);
  nn::zero_grads(refs);
  nn::Mat p = random_mat(rng, 6, 3);
  AdpfCache cache;
  adpf(p, map_from({0, 0, 1, 1, 2, 2}), params, &cache);
  adpf_backward(params, cache, nn::Mat::Zero(6, 3));
  for (auto* t : refs) REQUIRE(t->grad.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adpf prefix causality", "[adpf]") {
  Rng rng(74);
  AdpfParams params;
  params.init(4, 4, rng);
  nn::Mat p = random_mat(rng, 12, 4);
  AdpfCache full_cache;
  adpf(p, map_from(std::vector<int>(12, 0)), params, &full_cache);
  for (int k : {3, 7, 11}) {
    AdpfCache prefix_cache;
    adpf(p.topRows(k), map_from(std::vector<int>(k, 0)), params,
         &prefix_cache);
    for (int t = 0; t < k; ++t)
      REQUIRE((prefix_cache.gru.h.row(t + 1) - full_cache.gru.h.row(t + 1))
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
  }
}

TEST_CASE("adpf equals select-and-repeat of phone-final hidden states",
          "[adpf]") {
  Rng rng(75);
  for (int trial = 0; trial < 10; ++trial) {
    int T = 5 + static_cast<int>(rng.integer(40));
    AdpfParams params;
    params.init(4, 4, rng);
    nn::Mat p = random_mat(rng, T, 4);
    // Random monotone phone map.
    std::vector<int> pm(T);
    int phone = 0;
    for (int t = 1; t < T; ++t) {
      if (rng.uniform() < 0.25) ++phone;
      pm[t] = phone;
    }
    FramePhoneMap map = map_from(pm);
    Filtered f = adpf(p, map, params);
    auto h = gru_scalar_oracle(params.gru, p);
    for (int t = 0; t < T; ++t) {
      // Find this phone's final frame.
      int fin = t;
      while (fin + 1 < T && pm[fin + 1] == pm[t]) ++fin;
      for (int d = 0; d < 4; ++d)
        REQUIRE(f.data(t, d) == Catch::Approx(h[fin][d]).margin(1e-9));
    }
  }
}
