#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "gridres/error.hpp"
#include "gridres/ppo.hpp"
#include "oracles.hpp"

using namespace gridres;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

// batch whose importance ratios sit away from the clip kinks
std::vector<LossSample> fixed_batch(const Agent& agent, const PpoHyperparams& hp,
                                    std::mt19937_64& rng, int n) {
  std::vector<LossSample> batch;
  const double offsets[] = {0.05, -0.08, 0.12, -0.03, 0.5, -0.6, 0.0, 0.09};
  for (int i = 0; i < n; ++i) {
    LossSample s;
    s.input = random_vec(rng, agent.input_dim());
    s.weather = i % 3 == 0 ? 1.0 : 0.0;
    if (agent.kind == AgentKind::kStrategic) {
      s.action[0] = static_cast<int>(rng() % 6);
    } else {
      for (auto& b : s.action) b = static_cast<int>(rng() & 1u);
    }
    auto h = agent.actor.forward(s.input);
    double lp = action_log_prob(agent, h, s.weather, s.action, hp);
    s.old_log_prob = lp - offsets[i % 8];
    s.advantage = (i % 2 ? -1.0 : 1.0) * (0.5 + 0.25 * i);
    s.ret = std::normal_distribution<double>(0.0, 2.0)(rng);
    batch.push_back(s);
  }
  return batch;
}

struct GradCheck {
  double max_rel = 0.0;
  size_t count = 0;
};

GradCheck check_gradients(Agent agent, const PpoHyperparams& hp, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  // move away from the near-zero output layer so every weight matters
  for (auto& p : agent.actor.params()) p += std::normal_distribution<double>(0.0, 0.05)(rng);
  auto batch = fixed_batch(agent, hp, rng, 8);
  std::vector<double> ga, gc;
  ppo_loss(agent, batch, hp, &ga, &gc);

  GradCheck out;
  auto compare = [&](const std::vector<double>& analytic, const std::vector<double>& numeric) {
    for (size_t i = 0; i < analytic.size(); ++i) {
      double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-6});
      out.max_rel = std::max(out.max_rel, std::abs(analytic[i] - numeric[i]) / denom);
      ++out.count;
    }
  };
  auto na = oracle::numeric_gradient(
      [&](std::vector<double>& x) {
        Agent a = agent;
        a.actor.params() = x;
        return ppo_loss(a, batch, hp, nullptr, nullptr).total;
      },
      agent.actor.params(), 1e-5);
  compare(ga, na);
  auto nc = oracle::numeric_gradient(
      [&](std::vector<double>& x) {
        Agent a = agent;
        a.critic.params() = x;
        return ppo_loss(a, batch, hp, nullptr, nullptr).total;
      },
      agent.critic.params(), 1e-5);
  compare(gc, nc);
  return out;
}

ExperienceBuffer random_buffer(const Agent& agent, std::mt19937_64& rng, int n) {
  PpoHyperparams hp;
  ExperienceBuffer buf;
  for (int i = 0; i < n; ++i) {
    Transition t;
    t.input = random_vec(rng, agent.input_dim());
    t.weather = (i / 7) % 2;
    auto h = agent.actor.forward(t.input);
    if (agent.kind == AgentKind::kStrategic) {
      auto p = strategic_probs(h, t.weather);
      t.action[0] = sample_strategic(p, rng).action;
    } else {
      for (auto& b : t.action) b = static_cast<int>(rng() & 1u);
    }
    t.log_prob = action_log_prob(agent, h, t.weather, t.action, hp);
    t.reward = t.action[0] == 2 ? 1.0 : -0.2;
    t.value = agent.critic.forward(t.input)[0];
    t.done = i % 20 == 19;
    buf.add(t);
  }
  return buf;
}

}  // namespace

TEST_CASE("strategic distribution and emergency bias") {
  std::vector<double> zero(6, 0.0);
  auto u = strategic_probs(zero, 0.0);
  for (double p : u) CHECK(std::abs(p - 1.0 / 6) < 1e-15);
  auto b = strategic_probs(zero, 1.0);
  std::vector<double> alpha(kEmergencyAlpha.begin(), kEmergencyAlpha.end());
  CHECK(std::abs(b[5] - oracle::softmax_at(alpha, 5)) < 1e-15);
  CHECK(std::abs(b[5] - 0.68784) < 1e-5);
  CHECK(std::abs(b[4] - 0.25304) < 1e-5);
  CHECK(std::max_element(b.begin(), b.end()) - b.begin() == 5);

  std::array<double, 6> none{};
  std::mt19937_64 rng(1);
  auto h = random_vec(rng, 6);
  CHECK(strategic_probs(h, 0.0, none) == strategic_probs(h, 1.0, none));

  auto shifted = h;
  for (auto& x : shifted) x += 17.5;
  auto p1 = strategic_probs(h, 1.0), p2 = strategic_probs(shifted, 1.0);
  double sum = 0.0;
  for (int i = 0; i < 6; ++i) {
    CHECK(std::abs(p1[i] - p2[i]) < 1e-12);
    CHECK(p1[i] > 0.0);
    sum += p1[i];
  }
  CHECK(std::abs(sum - 1.0) < 1e-9);
  std::vector<double> bad{0, 0, 0, NAN, 0, 0};
  CHECK_THROWS_AS(strategic_probs(bad, 0.0), NumericError);
}

TEST_CASE("tactical distribution") {
  std::vector<double> zero(11, 0.0);
  auto p0 = tactical_probs(zero, 0.0);
  for (double p : p0.switches) CHECK(p == 0.5);
  auto p1 = tactical_probs(zero, 1.0);
  for (double p : p1.switches) CHECK(std::abs(p - oracle::sigmoid(2.0)) < 1e-15);
  CHECK(std::abs(p1.switches[0] - 0.88080) < 1e-5);
  CHECK(p0.grid == p1.grid);
}

TEST_CASE("joint tactical probability normalizes") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    auto tp = tactical_probs(random_vec(rng, 11, 2.0), trial % 2);
    double total = 0.0;
    for (unsigned bits = 0; bits < (1u << 11); ++bits) {
      TacticalAction a;
      for (int i = 0; i < 10; ++i) a.switches[i] = (bits >> i) & 1u;
      a.grid = (bits >> 10) & 1u;
      total += std::exp(joint_log_prob(tp, a));
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
  }
  TacticalProbs half;
  half.switches.fill(0.5);
  CHECK(std::abs(joint_log_prob(half, TacticalAction{}) - 11 * std::log(0.5)) < 1e-12);
  CHECK(std::abs(joint_log_prob(half, TacticalAction{}) + 7.62462) < 1e-5);
  TacticalProbs sure;
  sure.switches.fill(1.0 - 1e-12);
  sure.grid = 1.0 - 1e-12;
  TacticalAction ones;
  ones.switches.fill(1);
  ones.grid = 1;
  double lp = joint_log_prob(sure, ones);
  CHECK(lp <= 0.0);
  CHECK(lp > -1e-6);
}

TEST_CASE("entropies") {
  std::vector<double> u(6, 1.0 / 6);
  CHECK(std::abs(entropy_strategic(u) - std::log(6.0)) < 1e-12);
  CHECK(std::abs(entropy_strategic(u) - 1.79176) < 1e-5);
  CHECK(entropy_strategic(std::vector<double>{0, 0, 1, 0, 0, 0}) == 0.0);
  CHECK(std::abs(entropy_strategic(std::vector<double>{0.5, 0.5, 0, 0, 0, 0}) - std::log(2.0)) <
        1e-12);
  TacticalProbs half;
  half.switches.fill(0.5);
  CHECK(std::abs(entropy_tactical(half) - 11 * std::log(2.0)) < 1e-12);
  TacticalProbs edge;
  edge.switches.fill(1.0);
  edge.grid = 0.0;
  // clamped to [1e-8, 1 - 1e-8]: 11 * (1e-8 * ln(1e8) + 1e-8)
  CHECK(entropy_tactical(edge) < 11 * 2e-7);
  for (double p : {0.1, 0.3, 0.49}) {
    TacticalProbs t;
    t.switches.fill(p);
    t.grid = p;
    CHECK(entropy_tactical(t) < entropy_tactical(half));
  }
}

TEST_CASE("sampling") {
  std::vector<double> onehot{0, 0, 0, 1, 0, 0};
  std::mt19937_64 rng(5);
  auto s = sample_strategic(onehot, rng);
  CHECK(s.action == 3);
  CHECK(std::abs(s.log_prob - std::log1p(-kProbFloor)) < 1e-15);

  std::vector<double> u(6, 1.0 / 6);
  std::array<int, 6> counts{};
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[sample_strategic(u, rng).action];
  for (int c : counts) CHECK(std::abs(double(c) / n - 1.0 / 6) < 0.01);

  std::mt19937_64 a(9), b(9);
  CHECK(sample_strategic(u, a).action == sample_strategic(u, b).action);

  auto tp = tactical_probs(std::vector<double>(11, 0.3), 1.0);
  auto ts = sample_tactical(tp, rng);
  CHECK(ts.log_prob == joint_log_prob(tp, ts.action));
}

TEST_CASE("gae hand cases") {
  std::vector<std::uint8_t> d1{0};
  auto r1 = gae(std::vector<double>{1.0}, std::vector<double>{0.0, 0.0}, d1, 0.99, 0.95);
  CHECK(r1.advantages[0] == 1.0);
  std::vector<std::uint8_t> d2{0, 0};
  auto r2 = gae(std::vector<double>{1.0, 1.0}, std::vector<double>{0, 0, 0}, d2, 0.99, 0.95);
  CHECK(std::abs(r2.advantages[0] - 1.9405) < 1e-12);
  CHECK(r2.advantages[1] == 1.0);
  CHECK_THROWS_AS(gae(std::vector<double>{1.0}, std::vector<double>{0.0}, d1, 0.99, 0.95),
                  DomainError);
}

TEST_CASE("gae against the brute-force sum") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 1 + static_cast<int>(rng() % 20);
    auto r = random_vec(rng, n);
    auto v = random_vec(rng, n + 1);
    std::vector<std::uint8_t> d(n);
    for (auto& x : d) x = rng() % 5 == 0;
    double gamma = trial % 3 == 0 ? 1.0 : 0.99;
    double lambda = trial % 3 == 0 ? 1.0 : (trial % 3 == 1 ? 0.0 : 0.95);
    auto res = gae(r, v, d, gamma, lambda);
    auto ref = oracle::gae_bruteforce(r, v, d, gamma, lambda);
    for (int t = 0; t < n; ++t) {
      REQUIRE(std::abs(res.advantages[t] - ref[t]) <= 1e-10);
      REQUIRE(std::abs(res.returns[t] - (res.advantages[t] + v[t])) <= 1e-12);
      if (lambda == 0.0) {
        double td = r[t] + gamma * (d[t] ? 0.0 : v[t + 1]) - v[t];
        REQUIRE(res.advantages[t] == td);
      }
    }
  }
}

TEST_CASE("gae with unit discount is return minus value") {
  std::vector<double> r{1, 2, 3, 4};
  std::vector<double> v{0.5, -1, 2, 0.25, 9};
  std::vector<std::uint8_t> d{0, 0, 0, 1};
  auto res = gae(r, v, d, 1.0, 1.0);
  CHECK(res.advantages[0] == 10.0 - 0.5);
  CHECK(res.advantages[2] == 7.0 - 2.0);
}

TEST_CASE("clipped surrogate") {
  CHECK(clipped_surrogate(1.5, 1.0, 0.2) == doctest::Approx(1.2));
  CHECK(clipped_surrogate(1.5, -1.0, 0.2) == -1.5);
  CHECK(clipped_surrogate(0.5, 1.0, 0.2) == 0.5);
  CHECK(clipped_surrogate(0.5, -1.0, 0.2) == doctest::Approx(-0.8));
}

TEST_CASE("analytic gradients match finite differences") {
  PpoHyperparams hp;
  auto s = check_gradients(Agent::make(AgentKind::kStrategic, hp, 21, 16), hp, 1);
  auto t = check_gradients(Agent::make(AgentKind::kTactical, hp, 22, 16), hp, 2);
  CHECK(s.max_rel < 1e-4);
  CHECK(t.max_rel < 1e-4);
}

TEST_CASE("one-parameter surrogate gradient") {
  // a lone logit offset on action 0 of a two-way softmax written out by hand
  auto surrogate = [](double theta, double old_lp, double adv) {
    double lp = theta - std::log(std::exp(theta) + 1.0);
    return clipped_surrogate(std::exp(lp - old_lp), adv, 0.2);
  };
  double theta = 0.3, old_lp = std::log(0.55), adv = 1.7;
  double lp = theta - std::log(std::exp(theta) + 1.0);
  double ratio = std::exp(lp - old_lp);
  REQUIRE(std::abs(ratio - 1.0) < 0.2);
  double p = std::exp(lp);
  double analytic = adv * ratio * (1.0 - p);
  double h = 1e-5;
  double numeric =
      (surrogate(theta + h, old_lp, adv) - surrogate(theta - h, old_lp, adv)) / (2 * h);
  CHECK(std::abs(analytic - numeric) / std::abs(numeric) < 1e-4);
}

TEST_CASE("zero advantages leave only value and entropy terms") {
  PpoHyperparams hp;
  hp.c2 = 0.0;
  auto agent = Agent::make(AgentKind::kStrategic, hp, 4, 16);
  std::mt19937_64 rng(4);
  auto batch = fixed_batch(agent, hp, rng, 8);
  for (auto& s : batch) s.advantage = 0.0;
  std::vector<double> ga, gc;
  auto terms = ppo_loss(agent, batch, hp, &ga, &gc);
  CHECK(terms.policy == 0.0);
  for (double g : ga) CHECK(g == 0.0);
  CHECK(std::any_of(gc.begin(), gc.end(), [](double g) { return g != 0.0; }));
}

TEST_CASE("update determinism and buffer hygiene") {
  PpoHyperparams hp;
  auto base = Agent::make(AgentKind::kStrategic, hp, 7, 32);
  std::mt19937_64 rng(7);
  auto buf = random_buffer(base, rng, 300);
  auto copy = buf.items;
  Agent a = base, b = base;
  std::mt19937_64 ra(1), rb(1);
  auto sa = ppo_update(a, buf, hp, ra);
  auto sb = ppo_update(b, buf, hp, rb);
  CHECK(a.actor.params() == b.actor.params());
  CHECK(a.critic.params() == b.critic.params());
  CHECK(sa.kl_trace == sb.kl_trace);
  CHECK(buf.size() == copy.size());
  CHECK(buf.items[17].input == copy[17].input);
  CHECK(sa.epochs_run >= 1);
  CHECK(sa.epochs_run <= hp.epochs);
  CHECK(a.actor.params() != base.actor.params());
  ExperienceBuffer empty;
  CHECK_THROWS_AS(ppo_update(a, empty, hp, ra), DomainError);
}

TEST_CASE("kl early stopping contract") {
  PpoHyperparams hp;
  hp.lr_strategic = 0.05;
  hp.target_kl = 0.002;
  auto agent = Agent::make(AgentKind::kStrategic, hp, 8, 32);
  std::mt19937_64 rng(8);
  auto buf = random_buffer(agent, rng, 640);
  auto st = ppo_update(agent, buf, hp, rng);
  const double limit = hp.kl_stop_factor * hp.target_kl;
  REQUIRE(st.early_stopped);
  REQUIRE(!st.kl_trace.empty());
  CHECK(st.kl_trace.back() > limit);
  for (size_t i = 0; i + 1 < st.kl_trace.size(); ++i) CHECK(st.kl_trace[i] <= limit);
  CHECK(st.minibatches == static_cast<int>(st.kl_trace.size()) - 1);
  CHECK(st.kl_trace.front() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("acting") {
  PpoHyperparams hp;
  auto s = Agent::make(AgentKind::kStrategic, hp, 3);
  std::mt19937_64 rng(3);
  std::vector<double> obs(20, 0.0);
  obs[0] = 1.0;
  auto d = act(s, obs, 1.0, hp, rng, true, false);
  CHECK(d.action[0] == 5);
  CHECK(d.probs.size() == 6);
  CHECK(s.obs_stats.count == 0);
  act(s, obs, 1.0, hp, rng, false, true);
  CHECK(s.obs_stats.count == 1);

  auto t = Agent::make(AgentKind::kTactical, hp, 4);
  auto dt = act(t, std::vector<double>(21, 0.0), 1.0, hp, rng, true, false);
  for (int i = 0; i < 10; ++i) CHECK(dt.action[i] == 1);
  CHECK_THROWS_AS(act(t, std::vector<double>(20, 0.0), 0.0, hp, rng, true, false), DomainError);
}

TEST_CASE("mlp forward rejects non-finite input") {
  Mlp m({3, 4, 2});
  std::mt19937_64 rng(1);
  m.init_orthogonal(rng, 1.0, 1.0);
  CHECK_THROWS_AS(m.forward({1.0, NAN, 0.0}), NumericError);
  CHECK(m.num_params() == 3 * 4 + 4 + 4 * 2 + 2);
}

TEST_CASE("orthogonal init has orthonormal rows") {
  Mlp m({8, 8, 3});
  std::mt19937_64 rng(2);
  m.init_orthogonal(rng, 1.0, 1.0);
  const auto& p = m.params();
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 8; ++k) dot += p[i * 8 + k] * p[j * 8 + k];
      CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-12);
    }
  }
}
