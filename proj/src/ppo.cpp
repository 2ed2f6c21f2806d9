#include "gridres/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gridres/error.hpp"

namespace gridres {
namespace {

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// log sigma(z) without overflow
double log_sigmoid(double z) {
  if (z >= 0.0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

double clamp_prob(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

std::vector<double> softmax(std::span<const double> z) {
  double mx = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - mx);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

double log_sum_exp(std::span<const double> z) {
  double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - mx);
  return mx + std::log(s);
}

void clip_norm(std::vector<double>& g, double max_norm) {
  double sq = 0.0;
  for (double v : g) sq += v * v;
  double norm = std::sqrt(sq);
  if (norm > max_norm) {
    double s = max_norm / (norm + 1e-12);
    for (auto& v : g) v *= s;
  }
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

// ---- distributions

std::vector<double> strategic_probs(std::span<const double> logits, double w,
                                    const std::array<double, kNumStrategicActions>& alpha) {
  if (logits.size() != kNumStrategicActions) throw DomainError("strategic head needs 6 logits");
  std::array<double, kNumStrategicActions> z{};
  for (int i = 0; i < kNumStrategicActions; ++i) {
    if (!std::isfinite(logits[i])) throw NumericError("non-finite strategic logit");
    z[i] = logits[i] + w * alpha[i];
  }
  return softmax(z);
}

TacticalProbs tactical_probs(std::span<const double> logits, double w, double bias) {
  if (logits.size() != kNumTacticalOutputs) throw DomainError("tactical head needs 11 logits");
  TacticalProbs p;
  for (int i = 0; i < 10; ++i) {
    if (!std::isfinite(logits[i])) throw NumericError("non-finite switch logit");
    p.switches[i] = sigmoid(logits[i] + w * bias);
  }
  if (!std::isfinite(logits[10])) throw NumericError("non-finite grid logit");
  p.grid = sigmoid(logits[10]);
  return p;
}

StrategicSample sample_strategic(std::span<const double> probs, std::mt19937_64& rng) {
  double u = unit_uniform(rng);
  double cum = 0.0;
  int pick = -1;
  for (size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) {
      pick = static_cast<int>(i);
      break;
    }
  }
  if (pick < 0) {
    // rounding left u above the final cumulative sum
    for (size_t i = probs.size(); i-- > 0;) {
      if (probs[i] > 0.0) {
        pick = static_cast<int>(i);
        break;
      }
    }
  }
  return {pick, std::log(clamp_prob(probs[pick]))};
}

TacticalSample sample_tactical(const TacticalProbs& p, std::mt19937_64& rng) {
  TacticalSample s;
  for (int i = 0; i < 10; ++i) s.action.switches[i] = unit_uniform(rng) < p.switches[i] ? 1 : 0;
  s.action.grid = unit_uniform(rng) < p.grid ? 1 : 0;
  s.log_prob = joint_log_prob(p, s.action);
  return s;
}

double joint_log_prob(const TacticalProbs& p, const TacticalAction& a) {
  double lp = 0.0;
  for (int i = 0; i < 10; ++i) {
    double q = clamp_prob(p.switches[i]);
    lp += a.switches[i] ? std::log(q) : std::log(1.0 - q);
  }
  double g = clamp_prob(p.grid);
  lp += a.grid ? std::log(g) : std::log(1.0 - g);
  return lp;
}

double entropy_strategic(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

namespace {
double bernoulli_entropy(double p) {
  double q = clamp_prob(p);
  return -q * std::log(q) - (1.0 - q) * std::log(1.0 - q);
}
}  // namespace

double entropy_tactical(const TacticalProbs& p) {
  double h = bernoulli_entropy(p.grid);
  for (double s : p.switches) h += bernoulli_entropy(s);
  return h;
}

// ---- advantage estimation

GaeResult gae(std::span<const double> rewards, std::span<const double> values,
              std::span<const std::uint8_t> dones, double gamma, double lambda) {
  const size_t n = rewards.size();
  if (values.size() != n + 1 || dones.size() != n) {
    throw DomainError("gae needs len(values) = len(rewards) + 1 = len(dones) + 1");
  }
  GaeResult r;
  r.advantages.assign(n, 0.0);
  r.returns.assign(n, 0.0);
  double next = 0.0;
  for (size_t t = n; t-- > 0;) {
    double mask = dones[t] ? 0.0 : 1.0;
    double delta = rewards[t] + gamma * values[t + 1] * mask - values[t];
    next = delta + gamma * lambda * mask * next;
    r.advantages[t] = next;
    r.returns[t] = next + values[t];
  }
  return r;
}

double clipped_surrogate(double ratio, double advantage, double clip) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - clip, 1.0 + clip) * advantage);
}

// ---- agents

Agent Agent::make(AgentKind kind, const PpoHyperparams& hp, std::uint64_t seed, int hidden) {
  Agent a;
  a.kind = kind;
  const int in = kind == AgentKind::kStrategic ? 20 : 21;
  const int out = kind == AgentKind::kStrategic ? kNumStrategicActions : kNumTacticalOutputs;
  a.actor = Mlp({in, hidden, hidden, out});
  a.critic = Mlp({in, hidden, hidden, 1});
  std::mt19937_64 rng(seed);
  a.actor.init_orthogonal(rng, std::sqrt(2.0), 0.01);
  a.critic.init_orthogonal(rng, std::sqrt(2.0), 1.0);
  const double lr = kind == AgentKind::kStrategic ? hp.lr_strategic : hp.lr_tactical;
  a.actor_opt = Adam(a.actor.num_params(), lr);
  a.critic_opt = Adam(a.critic.num_params(), lr);
  a.obs_stats = VectorRunningStats(in);
  return a;
}

namespace {

// log-probability of the action and its gradient with respect to the logits
double log_prob_and_grad(const Agent& agent, std::span<const double> h, double w,
                         const std::array<int, kNumTacticalOutputs>& action,
                         const PpoHyperparams& hp, std::vector<double>* grad) {
  if (agent.kind == AgentKind::kStrategic) {
    std::array<double, kNumStrategicActions> z{};
    for (int i = 0; i < kNumStrategicActions; ++i) z[i] = h[i] + w * hp.alpha[i];
    const int a = action[0];
    double lp = z[a] - log_sum_exp(z);
    if (grad) {
      auto p = softmax(z);
      grad->assign(kNumStrategicActions, 0.0);
      for (int i = 0; i < kNumStrategicActions; ++i) (*grad)[i] = (i == a ? 1.0 : 0.0) - p[i];
    }
    return lp;
  }
  double lp = 0.0;
  if (grad) grad->assign(kNumTacticalOutputs, 0.0);
  for (int i = 0; i < kNumTacticalOutputs; ++i) {
    double z = i < 10 ? h[i] + w * hp.switch_bias : h[i];
    int bit = action[i];
    lp += bit ? log_sigmoid(z) : log_sigmoid(-z);
    if (grad) (*grad)[i] = bit - sigmoid(z);
  }
  return lp;
}

double entropy_and_grad(const Agent& agent, std::span<const double> h, std::vector<double>* grad) {
  if (agent.kind == AgentKind::kStrategic) {
    auto q = softmax(h);
    double lse = log_sum_exp(h);
    double H = 0.0;
    std::vector<double> logq(q.size());
    for (size_t i = 0; i < q.size(); ++i) {
      logq[i] = h[i] - lse;
      H -= q[i] * logq[i];
    }
    if (grad) {
      grad->assign(q.size(), 0.0);
      for (size_t i = 0; i < q.size(); ++i) (*grad)[i] = -q[i] * (logq[i] + H);
    }
    return H;
  }
  double H = 0.0;
  if (grad) grad->assign(h.size(), 0.0);
  for (size_t i = 0; i < h.size(); ++i) {
    double q = sigmoid(h[i]);
    H -= q * log_sigmoid(h[i]) + (1.0 - q) * log_sigmoid(-h[i]);
    if (grad) (*grad)[i] = -q * (1.0 - q) * h[i];
  }
  return H;
}

}  // namespace

double action_log_prob(const Agent& agent, std::span<const double> logits, double weather,
                       const std::array<int, kNumTacticalOutputs>& action,
                       const PpoHyperparams& hp) {
  return log_prob_and_grad(agent, logits, weather, action, hp, nullptr);
}

double head_entropy(const Agent& agent, std::span<const double> logits) {
  return entropy_and_grad(agent, logits, nullptr);
}

LossTerms ppo_loss(const Agent& agent, std::span<const LossSample> batch, const PpoHyperparams& hp,
                   std::vector<double>* actor_grad, std::vector<double>* critic_grad) {
  if (batch.empty()) throw DomainError("empty loss batch");
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  if (actor_grad) actor_grad->assign(agent.actor.num_params(), 0.0);
  if (critic_grad) critic_grad->assign(agent.critic.num_params(), 0.0);
  const bool want_grad = actor_grad || critic_grad;

  LossTerms L;
  Mlp::Tape ta, tc;
  std::vector<double> dlogp, dH;
  for (const auto& s : batch) {
    auto h = agent.actor.forward(s.input, want_grad ? &ta : nullptr);
    auto v = agent.critic.forward(s.input, want_grad ? &tc : nullptr);

    double lp = log_prob_and_grad(agent, h, s.weather, s.action, hp, want_grad ? &dlogp : nullptr);
    double ratio = std::exp(lp - s.old_log_prob);
    double surr1 = ratio * s.advantage;
    double surr2 = std::clamp(ratio, 1.0 - hp.clip, 1.0 + hp.clip) * s.advantage;
    L.policy -= std::min(surr1, surr2) * inv_n;
    L.approx_kl += (s.old_log_prob - lp) * inv_n;
    if (std::abs(ratio - 1.0) > hp.clip) L.clip_fraction += inv_n;

    double H = entropy_and_grad(agent, h, want_grad ? &dH : nullptr);
    L.entropy += H * inv_n;
    double err = v[0] - s.ret;
    L.value += err * err * inv_n;

    if (actor_grad) {
      std::vector<double> g(h.size(), 0.0);
      // the unclipped branch is the active one of the min
      if (surr1 <= surr2) {
        for (size_t i = 0; i < h.size(); ++i) g[i] -= s.advantage * ratio * dlogp[i] * inv_n;
      }
      for (size_t i = 0; i < h.size(); ++i) g[i] -= hp.c2 * dH[i] * inv_n;
      agent.actor.backward(ta, g, *actor_grad);
    }
    if (critic_grad) {
      std::vector<double> g{hp.c1 * 2.0 * err * inv_n};
      agent.critic.backward(tc, g, *critic_grad);
    }
  }
  L.total = L.policy + hp.c1 * L.value - hp.c2 * L.entropy;
  if (!std::isfinite(L.total)) throw NumericError("non-finite PPO loss");
  return L;
}

UpdateStats ppo_update(Agent& agent, const ExperienceBuffer& buffer, const PpoHyperparams& hp,
                       std::mt19937_64& rng) {
  if (buffer.empty()) throw DomainError("ppo_update on an empty buffer");
  const size_t n = buffer.size();
  std::vector<double> rewards(n), values(n + 1, 0.0);
  std::vector<std::uint8_t> dones(n);
  for (size_t i = 0; i < n; ++i) {
    rewards[i] = buffer.items[i].reward;
    values[i] = buffer.items[i].value;
    dones[i] = buffer.items[i].done ? 1 : 0;
  }
  auto est = gae(rewards, values, dones, hp.gamma, hp.lambda);

  double mean = std::accumulate(est.advantages.begin(), est.advantages.end(), 0.0) / n;
  double var = 0.0;
  for (double a : est.advantages) var += (a - mean) * (a - mean);
  double sd = std::max(std::sqrt(var / n), 1e-8);

  std::vector<LossSample> samples(n);
  for (size_t i = 0; i < n; ++i) {
    const auto& t = buffer.items[i];
    samples[i] = {t.input, t.weather, t.action, t.log_prob, (est.advantages[i] - mean) / sd,
                  est.returns[i]};
  }

  // mean(old - new) over the whole batch, actor only
  auto batch_kl = [&]() {
    double kl = 0.0;
    for (const auto& s : samples) {
      auto h = agent.actor.forward(s.input);
      kl += s.old_log_prob - action_log_prob(agent, h, s.weather, s.action, hp);
    }
    return kl / static_cast<double>(n);
  };

  UpdateStats st;
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<LossSample> mb;
  std::vector<double> ga, gc;
  const double kl_limit = hp.kl_stop_factor * hp.target_kl;
  const size_t mb_size = static_cast<size_t>(std::max(1, hp.minibatch));
  for (int epoch = 0; epoch < hp.epochs && !st.early_stopped; ++epoch) {
    ++st.epochs_run;
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t start = 0; start < n; start += mb_size) {
      if (hp.target_kl > 0.0) {
        double kl = batch_kl();
        st.kl_trace.push_back(kl);
        if (kl > kl_limit) {
          st.early_stopped = true;
          break;
        }
      }
      mb.clear();
      for (size_t k = start; k < std::min(n, start + mb_size); ++k) mb.push_back(samples[order[k]]);
      auto terms = ppo_loss(agent, mb, hp, &ga, &gc);
      ++st.minibatches;
      st.policy_loss += terms.policy;
      st.value_loss += terms.value;
      st.entropy += terms.entropy;
      if (!all_finite(ga) || !all_finite(gc)) throw NumericError("non-finite PPO gradient");
      clip_norm(ga, hp.grad_clip_norm);
      clip_norm(gc, hp.grad_clip_norm);
      agent.actor_opt.step(agent.actor.params(), ga);
      agent.critic_opt.step(agent.critic.params(), gc);
    }
  }
  st.approx_kl = batch_kl();
  if (st.minibatches == 0) {
    // stopped before the first step; report the loss at the current parameters
    auto terms = ppo_loss(agent, samples, hp, nullptr, nullptr);
    st.policy_loss = terms.policy;
    st.value_loss = terms.value;
    st.entropy = terms.entropy;
    return st;
  }
  const double m = static_cast<double>(st.minibatches);
  st.policy_loss /= m;
  st.value_loss /= m;
  st.entropy /= m;
  return st;
}

// ---- acting

Decision act(Agent& agent, const std::vector<double>& raw, double weather,
             const PpoHyperparams& hp, std::mt19937_64& rng, bool greedy, bool learn_stats) {
  if (static_cast<int>(raw.size()) != agent.input_dim()) throw DomainError("observation width");
  if (learn_stats) agent.obs_stats.push(raw);
  Decision d;
  d.input = agent.scale(raw);
  auto h = agent.actor.forward(d.input);
  d.value = agent.critic.forward(d.input)[0];
  if (agent.kind == AgentKind::kStrategic) {
    d.probs = strategic_probs(h, weather, hp.alpha);
    if (greedy) {
      d.action[0] = static_cast<int>(std::max_element(d.probs.begin(), d.probs.end()) -
                                     d.probs.begin());
    } else {
      d.action[0] = sample_strategic(d.probs, rng).action;
    }
  } else {
    auto tp = tactical_probs(h, weather, hp.switch_bias);
    d.probs.assign(tp.switches.begin(), tp.switches.end());
    d.probs.push_back(tp.grid);
    if (greedy) {
      for (int i = 0; i < kNumTacticalOutputs; ++i) d.action[i] = d.probs[i] > 0.5 ? 1 : 0;
    } else {
      auto s = sample_tactical(tp, rng);
      for (int i = 0; i < 10; ++i) d.action[i] = s.action.switches[i];
      d.action[10] = s.action.grid;
    }
  }
  d.log_prob = action_log_prob(agent, h, weather, d.action, hp);
  return d;
}

}  // namespace gridres
