#include <filesystem>
#include <memory>

#include "doctest.h"
#include "gridres/error.hpp"
#include "gridres/kv_config.hpp"
#include "gridres/training.hpp"

using namespace gridres;
namespace fs = std::filesystem;

namespace {

std::shared_ptr<const GridNetwork> feeder() {
  static auto net = std::make_shared<const GridNetwork>(
      load_feeder(GRIDRES_DATA_DIR "/ieee123_simplified.feeder"));
  return net;
}

// short episodes keep the loop tests quick
GridEnv short_env(int length = 4) {
  auto cfg = EnvConfig::load(GRIDRES_DATA_DIR "/env.conf");
  cfg.episode_length = length;
  return GridEnv::create(feeder(), cfg, EconomicParameters{});
}

struct Agents {
  Agent s, t;
};
Agents agents(std::uint64_t seed, const PpoHyperparams& hp = {}) {
  return {Agent::make(AgentKind::kStrategic, hp, seed, 16),
          Agent::make(AgentKind::kTactical, hp, seed + 1, 16)};
}

fs::path temp_root(const std::string& name) {
  auto p = fs::temp_directory_path() / ("gridres_train_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.episodes = 0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = {};
  c.strategic_share = 1.5;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = {};
  c.update_every = 0;
  CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("single episode: no update, one final checkpoint") {
  auto env = short_env();
  auto a = agents(1);
  TrainConfig cfg;
  cfg.episodes = 1;
  cfg.checkpoint_dir = temp_root("one");
  auto res = train(cfg, env, a.s, a.t);
  CHECK(res.update_rounds == 0);
  CHECK(res.metrics.updates.empty());
  REQUIRE(res.checkpoints_written.size() == 1);
  CHECK(res.checkpoints_written[0].filename() == "ckpt_1");
  CHECK(res.strategic_buffer_after == 4);
  CHECK(res.tactical_buffer_after == 4);
  fs::remove_all(cfg.checkpoint_dir);
}

TEST_CASE("update cadence and buffer clearing") {
  auto env = short_env(2);
  auto a = agents(2);
  TrainConfig cfg;
  cfg.episodes = 50;
  cfg.update_every = 25;
  cfg.checkpoint_interval = 20;
  cfg.keep_checkpoints = 2;
  cfg.checkpoint_dir = temp_root("cadence");
  auto res = train(cfg, env, a.s, a.t);
  CHECK(res.update_rounds == 2);
  REQUIRE(res.metrics.updates.size() == 4);
  CHECK(res.metrics.updates[0].agent == "strategic");
  CHECK(res.metrics.updates[1].agent == "tactical");
  CHECK(res.metrics.updates[3].update == 2);
  CHECK(res.strategic_buffer_after == 0);
  CHECK(res.tactical_buffer_after == 0);
  CHECK(res.metrics.episode_rewards.size() == 50);
  // ckpt_20, ckpt_40 and the final ckpt_50, two retained
  CHECK(res.checkpoints_written.size() == 3);
  auto kept = list_checkpoints(cfg.checkpoint_dir);
  REQUIRE(kept.size() == 2);
  CHECK(kept[1].filename() == "ckpt_50");

  cfg.episodes = 24;
  auto b = agents(2);
  auto env2 = short_env(2);
  auto res2 = train(cfg, env2, b.s, b.t);
  CHECK(res2.update_rounds == 0);
  CHECK(res2.strategic_buffer_after == 48);
  fs::remove_all(cfg.checkpoint_dir);
}

TEST_CASE("reward split between the agents") {
  auto env = short_env(5);
  auto a = agents(3);
  TrainConfig cfg;
  cfg.episodes = 3;
  int steps = 0;
  double worst = 0.0;
  TrainHooks hooks;
  hooks.on_step = [&](double r, double s, double t) {
    ++steps;
    worst = std::max(worst, std::abs(s + t - r));
    CHECK(s == doctest::Approx(0.6 * r));
    CHECK(t == doctest::Approx(0.4 * r));
  };
  int episodes_seen = 0;
  hooks.on_episode = [&](int ep, double) { CHECK(ep == ++episodes_seen); };
  train(cfg, env, a.s, a.t, hooks);
  CHECK(steps == 15);
  CHECK(worst <= 1e-12);
  CHECK(episodes_seen == 3);
}

TEST_CASE("training is reproducible") {
  auto run = [] {
    auto env = short_env(3);
    auto a = agents(4);
    TrainConfig cfg;
    cfg.episodes = 10;
    cfg.update_every = 5;
    train(cfg, env, a.s, a.t);
    return std::make_pair(a.s.actor.params(), a.t.critic.params());
  };
  CHECK(run() == run());
}

TEST_CASE("moving average") {
  TrainingMetrics m;
  for (int i = 1; i <= 49; ++i) m.episode_rewards.push_back(i);
  for (size_t i = 0; i < 49; ++i) CHECK_FALSE(m.moving_average(i));
  CHECK(m.recent_average() == 25.0);
  for (int i = 50; i <= 100; ++i) m.episode_rewards.push_back(i);
  CHECK(*m.moving_average(49) == 25.5);
  CHECK(*m.moving_average(99) == 75.5);
  CHECK(m.recent_average() == 75.5);
  TrainingMetrics c;
  c.episode_rewards.assign(80, 5.0);
  for (size_t i = 49; i < 80; ++i) CHECK(*c.moving_average(i) == 5.0);
}

TEST_CASE("metrics csv round trip and errors") {
  TrainingMetrics m;
  for (int i = 0; i < 60; ++i) m.episode_rewards.push_back(0.1 * i - 2.0);
  UpdateRecord u{1, "strategic", {}};
  u.stats.approx_kl = 0.0042;
  u.stats.entropy = 1.7;
  m.updates.push_back(u);
  u.agent = "tactical";
  m.updates.push_back(u);

  auto rows = parse_rewards_csv(rewards_csv(m));
  REQUIRE(rows.size() == 60);
  CHECK(rows[0].episode == 1);
  CHECK(rows[0].reward == m.episode_rewards[0]);
  CHECK_FALSE(rows[48].moving_avg);
  CHECK(*rows[59].moving_avg == *m.moving_average(59));
  auto ups = parse_updates_csv(updates_csv(m));
  REQUIRE(ups.size() == 2);
  CHECK(ups[1].agent == "tactical");
  CHECK(ups[0].approx_kl == 0.0042);

  auto line_of = [](auto fn, const char* text) {
    try {
      fn(text);
    } catch (const DataError& e) {
      return e.line();
    }
    return -1;
  };
  auto pr = [](const char* t) { parse_rewards_csv(t); };
  auto pu = [](const char* t) { parse_updates_csv(t); };
  CHECK(line_of(pr, "episode,reward,moving_avg50\n1,2,\n2,x,\n") == 3);
  CHECK(line_of(pr, "episode,reward,moving_avg50\n1,2\n") == 2);
  CHECK(line_of(pr, "wrong header\n") == 1);
  CHECK(line_of(pu, "update,agent,approx_kl,entropy\n1,critic,0,0\n") == 2);
  CHECK(parse_rewards_csv("episode,reward,moving_avg50\n").empty());
}

TEST_CASE("resume from a bad path starts fresh") {
  auto env = short_env(2);
  auto a = agents(5);
  TrainConfig cfg;
  cfg.episodes = 2;
  cfg.resume_path = temp_root("absent") / "ckpt_9";
  auto res = train(cfg, env, a.s, a.t);
  CHECK_FALSE(res.resumed);
  CHECK_FALSE(res.resume_error.empty());
  CHECK(res.start_episode == 0);
  CHECK(res.metrics.episode_rewards.size() == 2);
}

TEST_CASE("resume continues from the saved episode") {
  auto root = temp_root("resume");
  auto env = short_env(2);
  auto a = agents(6);
  TrainConfig cfg;
  cfg.episodes = 6;
  cfg.checkpoint_interval = 3;
  cfg.checkpoint_dir = root;
  train(cfg, env, a.s, a.t);

  auto b = agents(60);
  TrainConfig again = cfg;
  again.episodes = 10;
  again.resume_path = root / "ckpt_6";
  auto env2 = short_env(2);
  auto res = train(again, env2, b.s, b.t);
  CHECK(res.resumed);
  CHECK(res.start_episode == 6);
  CHECK(res.metrics.episode_rewards.size() == 4);
  fs::remove_all(root);
}

TEST_CASE("save-best skips non-improving intermediate checkpoints") {
  auto root = temp_root("best");
  auto env = short_env(2);
  auto a = agents(7);
  TrainConfig cfg;
  cfg.episodes = 12;
  cfg.checkpoint_interval = 2;
  cfg.save_best_only = true;
  cfg.keep_checkpoints = 100;
  cfg.checkpoint_dir = root;
  auto res = train(cfg, env, a.s, a.t);
  // the first interval always improves on -inf and the final save is unconditional
  CHECK(res.checkpoints_written.front().filename() == "ckpt_2");
  CHECK(res.checkpoints_written.back().filename() == "ckpt_12");
  CHECK(res.checkpoints_written.size() <= 6);
  std::vector<double> averages;
  for (const auto& p : res.checkpoints_written) {
    auto meta = meta_from_text(read_text_file(p / "meta.txt"));
    averages.push_back(meta.average_reward);
  }
  for (size_t i = 1; i + 1 < averages.size(); ++i) CHECK(averages[i] > averages[i - 1]);
  fs::remove_all(root);
}

TEST_CASE("greedy evaluation is deterministic and uses the eval length") {
  auto env = short_env(3);
  auto a = agents(8);
  PpoHyperparams hp;
  auto x = run_greedy_episode(env, a.s, a.t, hp, 123, 7);
  auto y = run_greedy_episode(env, a.s, a.t, hp, 123, 7);
  REQUIRE(x.size() == 7);
  auto tx = to_trace(x), ty = to_trace(y);
  CHECK(tx == ty);
  CHECK(a.s.obs_stats.count == 0);
  for (int i = 0; i < 7; ++i) CHECK(tx[i].t == i);
}
