// Copyright 2026 The lmdecide Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "lmdecide/expert_data.hpp"
#include "lmdecide/rlft.hpp"

using namespace lmdecide;

namespace {

MatrixXd RandomPhi(Rng& rng, int k) {
  std::normal_distribution<double> n01;
  return MatrixXd::NullaryExpr(k, kArmFeatureDim, [&] { return n01(rng); });
}

VectorXd RandomVec(Rng& rng, int n) {
  std::normal_distribution<double> n01;
  return VectorXd::NullaryExpr(n, [&] { return n01(rng); });
}

}  // namespace

TEST_CASE("rewards-to-go and the per-step baseline") {
  std::vector<double> r = {1.0, 0.0, 2.0};
  CHECK(RewardsToGo(r) == std::vector<double>{3.0, 2.0, 2.0});
  auto adv = McAdvantages({{1.0, 1.0}, {0.0, 3.0, 1.0}});
  // Step 0 returns 2 and 4 (mean 3); step 1: 1 and 4 (mean 2.5); step 2: 1.
  CHECK(adv[0][0] == doctest::Approx(-1.0));
  CHECK(adv[1][0] == doctest::Approx(1.0));
  CHECK(adv[0][1] == doctest::Approx(-1.5));
  CHECK(adv[1][1] == doctest::Approx(1.5));
  CHECK(adv[1][2] == doctest::Approx(0.0));
}

TEST_CASE("GAE reduces to known special cases") {
  std::vector<double> r = {1.0, -0.5, 2.0, 0.25};
  std::vector<double> v = {0.3, 0.1, -0.2, 0.7, 0.0};
  // lambda = 1, gamma = 1: advantage = return-to-go minus value.
  auto mc = GaeAdvantages(r, v, 1.0, 1.0);
  auto rtg = RewardsToGo(r);
  for (int t = 0; t < 4; ++t) CHECK(mc[t] == doctest::Approx(rtg[t] - v[t]));
  // lambda = 0: one-step TD error.
  auto td = GaeAdvantages(r, v, 0.9, 0.0);
  for (int t = 0; t < 4; ++t) CHECK(td[t] == doctest::Approx(r[t] + 0.9 * v[t + 1] - v[t]));
}

TEST_CASE("reward normalizer matches a two-pass computation") {
  Rng rng(5);
  std::normal_distribution<double> d(3.0, 2.0);
  RewardNormalizer norm;
  CHECK(norm.Normalize(4.0) == 4.0);
  std::vector<double> xs;
  for (int i = 0; i < 500; ++i) {
    xs.push_back(d(rng));
    norm.Update(xs.back());
  }
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= xs.size();
  CHECK(norm.mean == doctest::Approx(mean));
  CHECK(norm.Normalize(5.0) == doctest::Approx((5.0 - mean) / std::sqrt(var)).epsilon(1e-3));
  CHECK(ShapeReward(1.0, false, nullptr, 0.5) == doctest::Approx(1.0 - 5.0 + 0.5));
  CHECK(ShapeReward(1.0, true, nullptr) == 1.0);
}

TEST_CASE("advantage normalization") {
  std::vector<double> a = {1.0, 2.0, 3.0, 4.0};
  NormalizeAdvantages(a);
  double m = 0.0, s = 0.0;
  for (double x : a) m += x;
  for (double x : a) s += x * x;
  CHECK(m == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s / 4 == doctest::Approx(1.0));
  std::vector<double> flat = {2.0, 2.0};
  NormalizeAdvantages(flat);
  CHECK(flat == std::vector<double>{0.0, 0.0});
}

TEST_CASE("clipped surrogate per-sample cases") {
  const double eps = 0.2;
  // Positive advantage, ratio above 1 + eps: clipped.
  CHECK(PpoKlLoss(std::log(1.5), 0.0, 2.0, 0.0, eps, 0.0) == doctest::Approx(1.2 * 2.0));
  // Positive advantage, ratio below 1 - eps: unclipped ratio is smaller.
  CHECK(PpoKlLoss(std::log(0.5), 0.0, 2.0, 0.0, eps, 0.0) == doctest::Approx(0.5 * 2.0));
  // Negative advantage, ratio above 1 + eps: unclipped is more pessimistic.
  CHECK(PpoKlLoss(std::log(1.5), 0.0, -1.0, 0.0, eps, 0.0) == doctest::Approx(-1.5));
  // Negative advantage, ratio below 1 - eps: clipped.
  CHECK(PpoKlLoss(std::log(0.5), 0.0, -1.0, 0.0, eps, 0.0) == doctest::Approx(-0.8));
  CHECK(PpoKlLoss(0.0, 0.0, 1.0, 0.3, eps, 0.1) == doctest::Approx(1.0 - 0.03));
  CHECK_THROWS_AS(PpoKlLoss(1000.0, 0.0, 1.0, 0.0, eps, 0.0), NumericalError);
}

TEST_CASE("KL to the reference and its gradient") {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    MatrixXd phi = RandomPhi(rng, 2 + trial % 5);
    VectorXd w = RandomVec(rng, kArmFeatureDim), ref = RandomVec(rng, kArmFeatureDim);
    CHECK(KlToReference<double>(w, ref, phi) >= 0.0);
    CHECK(KlToReference<double>(w, w, phi) == doctest::Approx(0.0).epsilon(1e-14));
    VectorXd g = KlGrad(w, ref, phi);
    for (int i = 0; i < kArmFeatureDim; ++i) {
      VectorXd wp = w, wm = w;
      wp[i] += 1e-6;
      wm[i] -= 1e-6;
      double fd = (KlToReference<double>(wp, ref, phi) - KlToReference<double>(wm, ref, phi)) / 2e-6;
      CHECK(g[i] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("SFT loss gradient matches finite differences") {
  Rng rng(2);
  std::vector<SftExample> data;
  for (int i = 0; i < 12; ++i) data.push_back({RandomPhi(rng, 4), UniformIndex(rng, 4)});
  VectorXd w = RandomVec(rng, kArmFeatureDim);
  VectorXd g = SftGrad(w, data);
  for (int i = 0; i < kArmFeatureDim; ++i) {
    VectorXd wp = w, wm = w;
    wp[i] += 1e-6;
    wm[i] -= 1e-6;
    CHECK(g[i] == doctest::Approx((SftLoss(wp, data) - SftLoss(wm, data)) / 2e-6).epsilon(1e-6));
  }
  CHECK_THROWS_AS(SftLoss(w, {}), ConfigError);
}

TEST_CASE("learning-rate schedule warms up linearly and decays to the floor") {
  TrainConfig c;
  c.lr_peak = 1.0;
  c.lr_final = 0.1;
  c.warmup_steps = 10;
  c.total_updates = 110;
  CHECK(LearningRate(0, c) == doctest::Approx(0.1));
  CHECK(LearningRate(9, c) == doctest::Approx(1.0));
  CHECK(LearningRate(10, c) == doctest::Approx(1.0));
  CHECK(LearningRate(60, c) == doctest::Approx(0.55));
  CHECK(LearningRate(110, c) == doctest::Approx(0.1));
  CHECK(LearningRate(500, c) == doctest::Approx(0.1));
}

TEST_CASE("parameter flattening and persistence") {
  Params p = GreedyPriorParams();
  p.value_weights[2] = 0.125;
  VectorXd flat = FlattenParams(p);
  CHECK(flat.size() == kArmFeatureDim + kStateFeatureDim);
  Params q = Params::Zero();
  UnflattenParams(flat, q);
  CHECK(q.weights == p.weights);
  CHECK(q.value_weights == p.value_weights);

  auto dir = std::filesystem::temp_directory_path() / "lmdecide_rlft_test";
  std::filesystem::create_directories(dir);
  SaveParams(p, dir / "p.json");
  Params r = LoadParams(dir / "p.json");
  CHECK(r.weights == p.weights);
  CHECK(r.reference == p.reference);
  CHECK(r.value_weights == p.value_weights);

  Checkpoint c{17, p, q, RewardNormalizer{1.5, 2.0, 3}, SerializeRng(Rng(4)), 2};
  SaveCheckpoint(c, TrainConfig{}, dir / "c.json");
  Checkpoint back = LoadCheckpoint(dir / "c.json");
  CHECK(back.update == 17);
  CHECK(back.cursor == 2);
  CHECK(back.phase_normalizer.mean == 1.5);
  CHECK(back.phase_normalizer.count == 3);
  CHECK(back.phase_rng == c.phase_rng);
  CHECK(back.params.weights == p.weights);
  std::filesystem::remove_all(dir);
  CHECK_THROWS(LoadParams(dir / "missing.json"));
}

TEST_CASE("train config validation") {
  TrainConfig c;
  c.Validate();
  c.clip_eps = 1.5;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  c = TrainConfig{};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  c = TrainConfig{};
  c.gamma = 0.0;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
}

TEST_CASE("rollout buffers hold exactly the configured step count") {
  BanditPool pool = MakePool(ParseEnvPreset("mab:gauss:k5:med"), 8, 1);
  EnvFactory factory = [&pool](int i) { return std::make_unique<BanditEnv>(pool.instances[i]); };
  TrainConfig c;
  c.rollout_steps = 130;
  c.subset_size = 3;
  for (auto mode : {AdvantageMode::kRewardsToGo, AdvantageMode::kGae}) {
    c.advantage_mode = mode;
    RewardNormalizer norm;
    Rng rng(3);
    auto buf = CollectRollouts(factory, pool.size(), GreedyPriorParams(), {}, c, norm, rng);
    CHECK(buf.size() == 130);
    // Whole episodes are simulated; the tail past the budget only feeds statistics.
    CHECK(norm.count == 150);
    for (const auto& e : buf) {
      CHECK(e.phi.rows() == 5);
      CHECK(e.old_logprob <= 0.0);
      CHECK(std::isfinite(e.advantage));
    }
    CHECK(buf.back().episode == 2);
    CHECK(buf.back().step == 29);
  }
}

TEST_CASE("training is reproducible and logs every update") {
  BanditPool pool = MakePool(ParseEnvPreset("mab:gauss:k3:low"), 8, 1);
  EnvFactory factory = [&pool](int i) { return std::make_unique<BanditEnv>(pool.instances[i]); };
  TrainConfig c;
  c.total_updates = 12;
  c.rollout_steps = 100;
  c.batch_size = 32;
  c.subset_size = 2;
  c.eval_every = 5;
  c.lr_peak = 0.05;
  c.warmup_steps = 2;
  int evals = 0;
  TrainHooks hooks;
  hooks.evaluate = [&evals](const Params&) { return static_cast<double>(++evals); };
  auto a = TrainRlft(factory, pool.size(), GreedyPriorParams(), c, {}, hooks);
  auto b = TrainRlft(factory, pool.size(), GreedyPriorParams(), c);
  CHECK(a.updates == 12);
  CHECK(a.log.size() == 12);
  CHECK(a.phases == 3);
  CHECK(evals == 3);
  CHECK(a.log[4].eval_metric.has_value());
  CHECK(a.log[11].eval_metric.has_value());
  CHECK_FALSE(a.log[5].eval_metric.has_value());
  CHECK(a.params.weights == b.params.weights);
  CHECK(a.params.reference == GreedyPriorParams().reference);
  CHECK(TrainLogLine(a.log[0]).find("1,") == 0);
}

TEST_CASE("SFT imitates the UCB expert") {
  ExpertConfig ec;
  ec.n_rollouts = 20;
  ec.include_prompt = false;
  auto data = ExpertSftExamples(ec);
  CHECK(data.size() == 20 * 50);
  SftConfig sc;
  sc.steps = 300;
  sc.lr = 0.5;
  auto res = TrainSft(data, Params::Zero(), sc);
  CHECK(res.losses.size() == 300);
  CHECK(res.losses.back() < 0.5 * res.losses.front());
  int agree = 0;
  for (const auto& ex : data) {
    Eigen::Index best;
    (ex.phi * res.params.weights).maxCoeff(&best);
    agree += best == ex.action;
  }
  CHECK(agree > 0.7 * data.size());
  std::vector<SftExample> bad = {{MatrixXd::Zero(2, kArmFeatureDim), 5}};
  CHECK_THROWS_AS(TrainSft(bad, Params::Zero(), sc), ConfigError);
}
