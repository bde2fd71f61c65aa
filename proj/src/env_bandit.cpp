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

#include "lmdecide/env_bandit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

namespace lmdecide {

namespace {

constexpr const char* kColors[] = {
    "red",    "green",  "blue",   "yellow", "orange", "purple", "cyan",
    "magenta", "lime",  "teal",   "pink",   "brown",  "gray",   "navy",
    "olive",  "maroon", "silver", "gold",   "indigo", "violet", "white",
    "black",  "beige",  "coral",  "turquoise"};
constexpr int kNumColors = sizeof(kColors) / sizeof(kColors[0]);

constexpr const char* kMovies[] = {
    "star_wars_(1977)",
    "contact_(1997)",
    "fargo_(1996)",
    "return_of_the_jedi_(1983)",
    "liar_liar_(1997)",
    "english_patient,_the_(1996)",
    "scream_(1996)",
    "toy_story_(1995)",
    "air_force_one_(1997)",
    "independence_day_(id4)_(1996)",
    "raiders_of_the_lost_ark_(1981)",
    "godfather,_the_(1972)",
    "pulp_fiction_(1994)",
    "twelve_monkeys_(1995)",
    "silence_of_the_lambs,_the_(1991)",
    "jerry_maguire_(1996)",
    "chasing_amy_(1997)",
    "rock,_the_(1996)",
    "empire_strikes_back,_the_(1980)",
    "star_trek:_first_contact_(1996)"};
constexpr int kNumMovies = sizeof(kMovies) / sizeof(kMovies[0]);

constexpr const char* kProfessions[] = {
    "administrator", "artist",    "doctor",    "educator", "engineer",
    "entertainment", "executive", "healthcare", "homemaker", "lawyer",
    "librarian",     "marketing", "programmer", "retired",  "salesman",
    "scientist",     "student",   "technician", "writer",   "other"};
constexpr const char* kLocations[] = {
    "Santa Clara county, CA", "Cook county, IL",       "King county, WA",
    "Travis county, TX",      "Middlesex county, MA",  "Fulton county, GA",
    "Maricopa county, AZ",    "Hennepin county, MN",   "Denver county, CO",
    "Multnomah county, OR",   "Wake county, NC",       "Orange county, FL"};

constexpr double kPreferenceSigma = 0.05;

int ParseArmCount(std::string_view tok) {
  if (tok.size() < 2 || tok[0] != 'k') {
    throw ConfigError("bad arm-count token '" + std::string(tok) + "'");
  }
  try {
    return std::stoi(std::string(tok.substr(1)));
  } catch (const std::exception&) {
    throw ConfigError("bad arm-count token '" + std::string(tok) + "'");
  }
}

NoiseLevel ParseNoise(std::string_view tok) {
  if (tok == "low") return NoiseLevel::kLow;
  if (tok == "med" || tok == "medium") return NoiseLevel::kMedium;
  if (tok == "high") return NoiseLevel::kHigh;
  throw ConfigError("bad noise level '" + std::string(tok) + "'");
}

std::vector<std::string_view> SplitColons(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(':', start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string_view ToString(Scenario s) {
  return s == Scenario::kButton ? "button" : "numeric";
}

std::string_view ToString(NoiseLevel n) {
  switch (n) {
    case NoiseLevel::kLow:
      return "low";
    case NoiseLevel::kMedium:
      return "med";
    case NoiseLevel::kHigh:
      return "high";
  }
  return "med";
}

double ArmSpec::Sample(Rng& rng) const {
  if (dist == ArmDistribution::kBernoulli) {
    return Uniform01(rng) < mean ? 1.0 : 0.0;
  }
  std::normal_distribution<double> normal(mean, sigma);
  return normal(rng);
}

std::vector<std::string> BanditInstance::Labels() const {
  std::vector<std::string> out;
  out.reserve(arms.size());
  for (const auto& a : arms) out.push_back(a.label);
  return out;
}

int BanditInstance::ArmIndex(std::string_view label) const {
  std::string norm = ToLower(Trim(label));
  for (int i = 0; i < num_arms(); ++i) {
    if (ToLower(arms[i].label) == norm) return i;
  }
  throw UnknownActionError("unknown arm '" + std::string(label) + "'");
}

int BanditInstance::OptimalArm() const {
  int best = 0;
  for (int i = 1; i < num_arms(); ++i) {
    if (arms[i].mean > arms[best].mean) best = i;
  }
  return best;
}

double BanditInstance::OptimalMean() const { return arms[OptimalArm()].mean; }

std::vector<std::string> ButtonLabels(int k) {
  std::vector<std::string> out;
  for (int i = 0; i < k; ++i) {
    if (i < kNumColors) {
      out.emplace_back(kColors[i]);
    } else {
      out.push_back(std::string(kColors[i % kNumColors]) +
                    std::to_string(i / kNumColors + 1));
    }
  }
  return out;
}

std::vector<std::string> NumericLabels(int k) {
  std::vector<std::string> out;
  for (int i = 0; i < k; ++i) out.push_back(std::to_string(i));
  return out;
}

std::vector<std::string> ScenarioLabels(Scenario scenario, int k) {
  return scenario == Scenario::kButton ? ButtonLabels(k) : NumericLabels(k);
}

double GaussianSigma(NoiseLevel noise) {
  switch (noise) {
    case NoiseLevel::kLow:
      return 0.1;
    case NoiseLevel::kMedium:
      return 1.0;
    case NoiseLevel::kHigh:
      return 3.0;
  }
  return 1.0;
}

double BernoulliGap(NoiseLevel noise) {
  switch (noise) {
    case NoiseLevel::kLow:
      return 0.5;
    case NoiseLevel::kMedium:
      return 0.2;
    case NoiseLevel::kHigh:
      return 0.1;
  }
  return 0.2;
}

BanditInstance MakeGaussianMab(int k, double sigma, Scenario scenario,
                               std::uint64_t seed, int horizon) {
  if (k < 2) throw ConfigError("a bandit needs at least 2 arms");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (horizon < 1) throw ConfigError("horizon must be positive");
  BanditInstance inst;
  inst.scenario = scenario;
  inst.horizon = horizon;
  inst.rng_seed = seed;
  inst.noise = sigma <= 0.1 ? NoiseLevel::kLow
               : sigma <= 1.0 ? NoiseLevel::kMedium
                              : NoiseLevel::kHigh;
  Rng rng(seed);
  auto labels = ScenarioLabels(scenario, k);
  for (int i = 0; i < k; ++i) {
    inst.arms.push_back(
        {labels[i], ArmDistribution::kGaussian, Uniform01(rng), sigma});
  }
  inst.pull_counts.assign(k, 0);
  return inst;
}

BanditInstance MakeBernoulliMab(int k, double gap, Scenario scenario,
                                std::uint64_t seed, int horizon) {
  if (k < 2) throw ConfigError("a bandit needs at least 2 arms");
  if (!(gap > 0.0 && gap <= 1.0)) throw ConfigError("gap must be in (0, 1]");
  if (horizon < 1) throw ConfigError("horizon must be positive");
  BanditInstance inst;
  inst.scenario = scenario;
  inst.horizon = horizon;
  inst.rng_seed = seed;
  inst.noise = gap >= 0.5 ? NoiseLevel::kLow
               : gap >= 0.2 ? NoiseLevel::kMedium
                            : NoiseLevel::kHigh;
  Rng rng(seed);
  int best = UniformIndex(rng, k);
  auto labels = ScenarioLabels(scenario, k);
  for (int i = 0; i < k; ++i) {
    double p = i == best ? 0.5 + gap / 2.0 : 0.5 - gap / 2.0;
    inst.arms.push_back({labels[i], ArmDistribution::kBernoulli, p, 0.0});
  }
  inst.pull_counts.assign(k, 0);
  return inst;
}

double StepBandit(BanditInstance& instance, int arm, Rng& rng) {
  if (arm < 0 || arm >= instance.num_arms()) {
    throw UnknownActionError("arm index out of range");
  }
  if (instance.pull_counts.size() != instance.arms.size()) {
    instance.pull_counts.assign(instance.arms.size(), 0);
  }
  ++instance.pull_counts[arm];
  return instance.arms[arm].Sample(rng);
}

double StepBandit(BanditInstance& instance, std::string_view action_label,
                  Rng& rng) {
  return StepBandit(instance, instance.ArmIndex(action_label), rng);
}

double CumulativeRegret(const BanditInstance& instance,
                        std::span<const std::string> actions) {
  double best = instance.OptimalMean();
  double total = 0.0;
  for (const auto& a : actions) {
    total += best - instance.arms[instance.ArmIndex(a)].mean;
  }
  return total;
}

std::vector<double> RegretCurve(const BanditInstance& instance,
                                std::span<const int> actions) {
  double best = instance.OptimalMean();
  std::vector<double> curve;
  curve.reserve(actions.size());
  double total = 0.0;
  for (int a : actions) {
    if (a < 0 || a >= instance.num_arms()) {
      throw UnknownActionError("arm index out of range");
    }
    total += best - instance.arms[a].mean;
    curve.push_back(total);
  }
  return curve;
}

// ---------------------------------------------------------------------------

std::string UserProfile::Describe() const {
  std::string prefs = "[";
  for (Eigen::Index i = 0; i < preferences.size(); ++i) {
    if (i) prefs += ", ";
    prefs += Format2(preferences[i]);
  }
  prefs += "]";
  return "This person is a " + std::to_string(age) + "-year-old " + gender +
         ", working as a " + profession + " and live in " + location +
         ". The user has some numerical values that represent their true "
         "implicit preference or taste for all movies: " +
         prefs;
}

int ContextualInstance::MovieIndex(std::string_view label) const {
  std::string norm = ToLower(Trim(label));
  for (int i = 0; i < num_arms(); ++i) {
    if (ToLower(movies[i]) == norm) return i;
  }
  throw UnknownActionError("unknown movie '" + std::string(label) + "'");
}

std::vector<std::string> MovieLabels(int k) {
  std::vector<std::string> out;
  for (int i = 0; i < k; ++i) {
    if (i < kNumMovies) {
      out.emplace_back(kMovies[i]);
    } else {
      out.push_back("movie_" + std::to_string(i));
    }
  }
  return out;
}

ContextualInstance MakeContextual(int k, int n_users, double reward_sigma,
                                  std::uint64_t seed, int horizon) {
  if (k < 2) throw ConfigError("a contextual bandit needs at least 2 movies");
  if (n_users < 1) throw ConfigError("n_users must be positive");
  if (reward_sigma < 0.0) throw ConfigError("reward_sigma must be >= 0");
  ContextualInstance inst;
  inst.movies = MovieLabels(k);
  inst.reward_sigma = reward_sigma;
  inst.horizon = horizon;
  inst.rng_seed = seed;
  Rng rng(seed);
  std::normal_distribution<double> pref(0.0, kPreferenceSigma);
  constexpr int kNumProfessions = sizeof(kProfessions) / sizeof(kProfessions[0]);
  constexpr int kNumLocations = sizeof(kLocations) / sizeof(kLocations[0]);
  inst.users.reserve(n_users);
  for (int u = 0; u < n_users; ++u) {
    UserProfile p;
    p.gender = Uniform01(rng) < 0.5 ? "man" : "woman";
    p.age = 18 + UniformIndex(rng, 53);
    p.profession = kProfessions[UniformIndex(rng, kNumProfessions)];
    p.location = kLocations[UniformIndex(rng, kNumLocations)];
    p.preferences.resize(k);
    for (int i = 0; i < k; ++i) p.preferences[i] = pref(rng);
    inst.users.push_back(std::move(p));
  }
  return inst;
}

double StepContextual(const ContextualInstance& instance, int user_index,
                      int action, Rng& rng) {
  if (user_index < 0 || user_index >= static_cast<int>(instance.users.size())) {
    throw ConfigError("user index out of range");
  }
  if (action < 0 || action >= instance.num_arms()) {
    throw UnknownActionError("movie index out of range");
  }
  double r = instance.users[user_index].preferences[action];
  if (instance.reward_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, instance.reward_sigma);
    r += noise(rng);
  }
  return r;
}

double StepContextual(const ContextualInstance& instance, int user_index,
                      std::string_view action_label, Rng& rng) {
  return StepContextual(instance, user_index, instance.MovieIndex(action_label),
                        rng);
}

// ---------------------------------------------------------------------------

EnvPreset ParseEnvPreset(std::string_view id) {
  auto parts = SplitColons(id);
  EnvPreset p;
  p.id = std::string(id);
  if (parts[0] == "mab") {
    if (parts.size() < 4 || parts.size() > 5) {
      throw ConfigError("mab preset needs mab:<dist>:k<N>:<noise>[:<scenario>]");
    }
    p.family = EnvFamily::kMab;
    if (parts[1] == "gauss") {
      p.dist = ArmDistribution::kGaussian;
    } else if (parts[1] == "bern") {
      p.dist = ArmDistribution::kBernoulli;
    } else {
      throw ConfigError("unknown arm distribution '" + std::string(parts[1]) + "'");
    }
    p.k = ParseArmCount(parts[2]);
    p.noise = ParseNoise(parts[3]);
    if (parts.size() == 5) {
      if (parts[4] == "button") {
        p.scenario = Scenario::kButton;
      } else if (parts[4] == "numeric") {
        p.scenario = Scenario::kNumeric;
      } else {
        throw ConfigError("unknown scenario '" + std::string(parts[4]) + "'");
      }
    }
  } else if (parts[0] == "cb") {
    if (parts.size() != 3 || parts[1] != "movielens") {
      throw ConfigError("contextual preset needs cb:movielens:k<N>");
    }
    p.family = EnvFamily::kContextual;
    p.k = ParseArmCount(parts[2]);
  } else if (parts[0] == "ttt") {
    if (parts.size() != 2) throw ConfigError("tic-tac-toe preset needs ttt:<opponent>");
    p.family = EnvFamily::kTicTacToe;
    p.k = 9;
    p.opponent = std::string(parts[1]);
    if (p.opponent != "random" && p.opponent != "mcts" && p.opponent != "mcts-noisy") {
      throw ConfigError("unknown opponent '" + p.opponent + "'");
    }
  } else {
    throw ConfigError("unknown environment preset '" + std::string(id) + "'");
  }
  if (p.k < 2) throw ConfigError("a preset needs at least 2 actions");
  return p;
}

BanditInstance MakeMab(const EnvPreset& preset, std::uint64_t seed) {
  if (preset.family != EnvFamily::kMab) {
    throw ConfigError("preset '" + preset.id + "' is not a multi-armed bandit");
  }
  if (preset.dist == ArmDistribution::kGaussian) {
    return MakeGaussianMab(preset.k, GaussianSigma(preset.noise), preset.scenario,
                           seed, preset.horizon);
  }
  return MakeBernoulliMab(preset.k, BernoulliGap(preset.noise), preset.scenario,
                          seed, preset.horizon);
}

BanditPool MakePool(const EnvPreset& preset, int size, std::uint64_t seed) {
  if (size < 1) throw ConfigError("pool size must be positive");
  BanditPool pool;
  pool.preset_id = preset.id;
  pool.seed = seed;
  pool.instances.reserve(size);
  for (int i = 0; i < size; ++i) {
    pool.instances.push_back(
        MakeMab(preset, SubSeed(seed, "pool/" + std::to_string(i))));
  }
  return pool;
}

std::vector<int> SamplePoolSubset(int pool_size, int subset_size, Rng& rng) {
  if (subset_size > pool_size || subset_size < 1) {
    throw ConfigError("subset size must be in [1, pool size]");
  }
  // Partial Fisher-Yates.
  std::vector<int> idx(pool_size);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < subset_size; ++i) {
    int j = i + UniformIndex(rng, pool_size - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(subset_size);
  return idx;
}

void SavePool(const BanditPool& pool, const std::filesystem::path& path) {
  nlohmann::json j;
  j["preset"] = pool.preset_id;
  j["seed"] = pool.seed;
  j["instances"] = nlohmann::json::array();
  for (const auto& inst : pool.instances) {
    nlohmann::json ji;
    ji["seed"] = inst.rng_seed;
    ji["scenario"] = ToString(inst.scenario);
    ji["noise"] = ToString(inst.noise);
    ji["horizon"] = inst.horizon;
    ji["arms"] = nlohmann::json::array();
    for (const auto& a : inst.arms) {
      ji["arms"].push_back(
          {{"label", a.label},
           {"dist", a.dist == ArmDistribution::kGaussian ? "gaussian" : "bernoulli"},
           {"mean", a.mean},
           {"sigma", a.sigma}});
    }
    j["instances"].push_back(std::move(ji));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write pool file " + path.string());
  out << j.dump(2) << "\n";
}

BanditPool LoadPool(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read pool file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    BanditPool pool;
    pool.preset_id = j.at("preset").get<std::string>();
    pool.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& ji : j.at("instances")) {
      BanditInstance inst;
      inst.rng_seed = ji.at("seed").get<std::uint64_t>();
      inst.scenario = ji.at("scenario") == "button" ? Scenario::kButton
                                                    : Scenario::kNumeric;
      inst.noise = ParseNoise(ji.at("noise").get<std::string>());
      inst.horizon = ji.at("horizon").get<int>();
      for (const auto& ja : ji.at("arms")) {
        ArmSpec a;
        a.label = ja.at("label").get<std::string>();
        a.dist = ja.at("dist") == "gaussian" ? ArmDistribution::kGaussian
                                             : ArmDistribution::kBernoulli;
        a.mean = ja.at("mean").get<double>();
        a.sigma = ja.at("sigma").get<double>();
        inst.arms.push_back(std::move(a));
      }
      inst.pull_counts.assign(inst.arms.size(), 0);
      pool.instances.push_back(std::move(inst));
    }
    return pool;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed pool file: ") + e.what());
  }
}

}  // namespace lmdecide
