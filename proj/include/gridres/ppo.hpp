#ifndef GRIDRES_PPO_HPP_
#define GRIDRES_PPO_HPP_

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "gridres/nn.hpp"
#include "gridres/running_stats.hpp"

namespace gridres {

inline constexpr int kNumStrategicActions = 6;
inline constexpr int kNumTacticalOutputs = 11;  // 10 switches + grid
inline constexpr std::array<double, kNumStrategicActions> kEmergencyAlpha{0.0, 0.5, 1.0,
                                                                         2.0, 4.0, 5.0};
inline constexpr double kSwitchBias = 2.0;
inline constexpr double kProbFloor = 1e-8;

struct PpoHyperparams {
  double lr_strategic = 3e-4;
  double lr_tactical = 3e-5;
  double gamma = 0.99;
  double lambda = 0.95;
  double clip = 0.2;
  double c1 = 0.5;
  double c2 = 0.01;
  int minibatch = 64;
  int epochs = 4;
  int update_every = 25;
  double grad_clip_norm = 0.5;
  double kl_stop_factor = 1.5;
  double target_kl = 0.01;
  std::array<double, kNumStrategicActions> alpha = kEmergencyAlpha;
  double switch_bias = kSwitchBias;
};

// ---- distributions

// softmax(h + w * alpha)
std::vector<double> strategic_probs(std::span<const double> logits, double w,
                                    const std::array<double, kNumStrategicActions>& alpha =
                                        kEmergencyAlpha);

struct TacticalProbs {
  std::array<double, 10> switches{};
  double grid = 0.5;
};
// sigma(h_i + w * bias) per switch, sigma(h_grid) for the grid head
TacticalProbs tactical_probs(std::span<const double> logits, double w, double bias = kSwitchBias);

struct StrategicSample {
  int action = 0;
  double log_prob = 0.0;
};
StrategicSample sample_strategic(std::span<const double> probs, std::mt19937_64& rng);

struct TacticalAction {
  std::array<std::uint8_t, 10> switches{};
  int grid = 0;
};
struct TacticalSample {
  TacticalAction action;
  double log_prob = 0.0;
};
TacticalSample sample_tactical(const TacticalProbs& p, std::mt19937_64& rng);

// probabilities are clamped to [1e-8, 1 - 1e-8] before the log
double joint_log_prob(const TacticalProbs& p, const TacticalAction& a);

double entropy_strategic(std::span<const double> probs);
double entropy_tactical(const TacticalProbs& p);

// ---- advantage estimation

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};
// values has one more entry than rewards; dones[t] cuts the bootstrap after t
GaeResult gae(std::span<const double> rewards, std::span<const double> values,
              std::span<const std::uint8_t> dones, double gamma, double lambda);

double clipped_surrogate(double ratio, double advantage, double clip);

// ---- agents

enum class AgentKind { kStrategic, kTactical };

// Actor and critic for one level of the hierarchy, with its own observation
// scaling statistics and optimizers.
struct Agent {
  AgentKind kind = AgentKind::kStrategic;
  Mlp actor;
  Mlp critic;
  Adam actor_opt;
  Adam critic_opt;
  VectorRunningStats obs_stats;

  static Agent make(AgentKind kind, const PpoHyperparams& hp, std::uint64_t seed,
                    int hidden = 64);
  int input_dim() const { return actor.input_dim(); }
  int output_dim() const { return actor.output_dim(); }
  std::vector<double> scale(const std::vector<double>& raw) const { return obs_stats.apply(raw); }
};

// one transition, input already scaled
struct Transition {
  std::vector<double> input;
  double weather = 0.0;
  std::array<int, kNumTacticalOutputs> action{};  // strategic uses action[0]
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
};

struct ExperienceBuffer {
  std::vector<Transition> items;
  void add(Transition t) { items.push_back(std::move(t)); }
  size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
  void clear() { items.clear(); }
};

// log-probability of a stored action under the agent's current actor
double action_log_prob(const Agent& agent, std::span<const double> logits, double weather,
                       const std::array<int, kNumTacticalOutputs>& action,
                       const PpoHyperparams& hp);
// entropy of the unbiased head distribution
double head_entropy(const Agent& agent, std::span<const double> logits);

struct LossSample {
  std::vector<double> input;
  double weather = 0.0;
  std::array<int, kNumTacticalOutputs> action{};
  double old_log_prob = 0.0;
  double advantage = 0.0;
  double ret = 0.0;
};

struct LossTerms {
  double total = 0.0;
  double policy = 0.0;   // -mean clipped surrogate
  double value = 0.0;    // mean squared error
  double entropy = 0.0;  // mean
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

// L = -clip + c1 * value - c2 * entropy, averaged over the batch. Gradients are
// written (not accumulated) when the pointers are non-null.
LossTerms ppo_loss(const Agent& agent, std::span<const LossSample> batch, const PpoHyperparams& hp,
                   std::vector<double>* actor_grad, std::vector<double>* critic_grad);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;  // whole-batch value after the last step
  int epochs_run = 0;
  int minibatches = 0;
  bool early_stopped = false;
  // whole-batch approx KL checked before each minibatch step, in order
  std::vector<double> kl_trace;
};

// Clipped PPO over the buffer. The buffer is left untouched.
UpdateStats ppo_update(Agent& agent, const ExperienceBuffer& buffer, const PpoHyperparams& hp,
                       std::mt19937_64& rng);

// ---- acting

struct Decision {
  std::array<int, kNumTacticalOutputs> action{};
  double log_prob = 0.0;
  double value = 0.0;
  std::vector<double> input;  // scaled
  std::vector<double> probs;  // biased head probabilities
};

// Scales raw input (pushing it into the statistics first when `learn_stats`),
// runs actor and critic, then samples or picks the mode.
Decision act(Agent& agent, const std::vector<double>& raw, double weather,
             const PpoHyperparams& hp, std::mt19937_64& rng, bool greedy, bool learn_stats);

}  // namespace gridres

#endif  // GRIDRES_PPO_HPP_
