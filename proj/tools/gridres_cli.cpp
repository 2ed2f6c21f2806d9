// gridres: train, evaluate, recommend and report for the switching agents.

#include <iostream>

#include <CLI11.hpp>

#include "gridres/commands.hpp"
#include "gridres/error.hpp"

using namespace gridres;

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical PPO switching agents for feeder resilience"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string feeder, env_cfg, econ_cfg, out_dir = ".";
  app.add_option("--feeder", feeder, "feeder description file")->check(CLI::ExistingFile);
  app.add_option("--env-config", env_cfg, "environment config")->check(CLI::ExistingFile);
  app.add_option("--econ-config", econ_cfg, "economic parameters")->check(CLI::ExistingFile);
  app.add_option("--seed", common.seed, "random seed");
  app.add_option("--out-dir", out_dir, "output directory");

  TrainOptions train;
  std::string resume;
  auto* tr = app.add_subcommand("train", "train both agents");
  tr->add_option("--episodes", train.episodes, "training episodes")->check(CLI::PositiveNumber);
  tr->add_option("--update-every", train.update_every, "episodes between PPO updates")->check(CLI::PositiveNumber);
  tr->add_option("--checkpoint-interval", train.checkpoint_interval, "episodes between checkpoints")->check(CLI::PositiveNumber);
  tr->add_flag("--save-best", train.save_best, "only keep improving checkpoints");
  tr->add_option("--keep", train.keep, "checkpoints to keep")->check(CLI::PositiveNumber);
  tr->add_option("--resume", resume, "checkpoint directory to resume from");

  EvaluateOptions eval;
  std::string eval_ckpt;
  auto* ev = app.add_subcommand("evaluate", "greedy evaluation episodes with economics");
  ev->add_option("--checkpoint", eval_ckpt, "checkpoint directory")->required();
  ev->add_option("--episodes", eval.episodes, "evaluation episodes")->check(CLI::PositiveNumber);

  RecommendOptions rec;
  std::string rec_ckpt;
  auto* rc = app.add_subcommand("recommend", "contingency analysis report");
  rc->add_option("--checkpoint", rec_ckpt, "checkpoint directory")->required();
  rc->add_option("--scenario", rec.scenarios, "scenario file or library name (repeatable)");

  ReportOptions rep;
  std::string rewards_csv, updates_csv;
  auto* rp = app.add_subcommand("report", "plot data from training metrics");
  rp->add_option("--rewards", rewards_csv, "episode,reward,moving_avg50 CSV");
  rp->add_option("--updates", updates_csv, "update,agent,approx_kl,entropy CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  common.feeder = feeder;
  common.env_config = env_cfg;
  common.econ_config = econ_cfg;
  common.out_dir = out_dir;
  try {
    if (*tr) {
      train.resume = resume;
      return cmd_train(common, train, std::cout);
    }
    if (*ev) {
      eval.checkpoint = eval_ckpt;
      return cmd_evaluate(common, eval, std::cout);
    }
    if (*rc) {
      rec.checkpoint = rec_ckpt;
      return cmd_recommend(common, rec, std::cout);
    }
    if (*rp) {
      rep.rewards_csv = rewards_csv;
      rep.updates_csv = updates_csv;
      return cmd_report(common, rep, std::cout);
    }
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitCheckpoint;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
