// Command-line front end: train, eval, compare, plot, ablate.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "scaffold/errors.hpp"
#include "scaffold/harness.hpp"

namespace fs = std::filesystem;
using namespace scaffold;

namespace {

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& evaluator, const std::string& out, std::optional<long> steps) {
  RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
  if (!evaluator.empty()) cfg.evaluator.kind = parse_evaluator_kind(evaluator);
  if (steps) cfg.total_train_steps = *steps;
  if (!out.empty()) cfg.output_dir = out;
  cfg.validate();

  auto run_one = [&](std::uint64_t s, const fs::path& dir) {
    const TrainResult r = train_to_dir(cfg, s, dir);
    const RunSummary sum = summarize(r.metrics, cfg.total_train_steps);
    const EvalResult ev = evaluate(r.qtable, cfg.task, cfg.eval_episodes, eval_seed(s));
    std::printf("seed %llu: %d episodes, train success %.3f, final mean length %.1f, "
                "eval success %.3f over %d episodes, %ld evaluator queries -> %s\n",
                static_cast<unsigned long long>(s), sum.episodes, sum.train_success_rate,
                sum.final_mean_episode_length, ev.success_rate, ev.episodes, r.total_queries,
                dir.string().c_str());
  };
  if (seed) {
    run_one(*seed, cfg.output_dir);
  } else {
    for (std::uint64_t s : cfg.seeds)
      run_one(s, fs::path(cfg.output_dir) / ("seed_" + std::to_string(s)));
  }
  return 0;
}

int cmd_eval(const std::string& qtable, const std::string& task_name, int episodes,
             std::uint64_t seed, const std::string& config_path) {
  TaskSpec task = config_path.empty() ? TaskSpec::defaults(parse_task_name(task_name))
                                      : RunConfig::load(config_path).task;
  if (!config_path.empty() && task_name != std::string(task_name_string(task.name)))
    throw ConfigError("--task", "does not match the task in " + config_path);
  const QTable q = QTable::load(qtable);
  const EvalResult r = evaluate(q, task, episodes, seed);
  std::printf("{\"success_rate\": %.6f, \"mean_episode_length\": %.3f, \"episodes\": %d}\n",
              r.success_rate, r.mean_episode_length, r.episodes);
  return 0;
}

int cmd_compare(const std::string& a, const std::string& b, const std::string& json_out) {
  const CompareReport rep = compare(fs::path(a), fs::path(b));
  std::cout << rep.table();
  if (!json_out.empty()) {
    std::ofstream out(json_out);
    if (!out) throw ArtifactError("cannot write " + json_out);
    out << rep.to_json().dump(2) << '\n';
  }
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& out, bool with_llm,
               std::optional<long> steps) {
  RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
  if (steps) cfg.total_train_steps = *steps;
  if (cfg.evaluator.flip_probability == 0.0) cfg.evaluator.flip_probability = 0.2;
  cfg.validate();
  const auto cells = run_ablation(cfg, out, with_llm);
  std::printf("%-14s %8s %6s %12s %12s\n", "evaluator", "interval", "seed", "eval_success",
              "final_len");
  for (const auto& c : cells)
    std::printf("%-14s %8d %6llu %12.3f %12.1f\n",
                std::string(evaluator_kind_name(c.kind)).c_str(), c.query_interval,
                static_cast<unsigned long long>(c.seed), c.eval.success_rate,
                c.summary.final_mean_episode_length);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive-feedback reinforcement learning on kinematic manipulation tasks"};
  app.require_subcommand(1);

  std::string config, evaluator, out;
  std::optional<std::uint64_t> seed;
  std::optional<long> steps;
  auto* train = app.add_subcommand("train", "Train one seed (or every configured seed)");
  train->add_option("--config", config, "Run config (JSON) or a run manifest");
  train->add_option("--seed", seed, "Train only this seed; --out is then the run directory");
  train->add_option("--evaluator", evaluator, "Override evaluator kind")
      ->check(CLI::IsMember({"oracle", "llm", "noisy", "noisy-oracle", "none", "unparsed"}));
  train->add_option("--out", out, "Output directory");
  train->add_option("--steps", steps, "Override total training steps");

  std::string qtable, task_name = "push_button";
  int episodes = 100;
  std::uint64_t eval_seed_value = 12345;
  auto* eval = app.add_subcommand("eval", "Greedy evaluation of a saved qtable");
  eval->add_option("--qtable", qtable, "qtable artifact")->required();
  eval->add_option("--task", task_name, "push_button or lift_object")
      ->check(CLI::IsMember({"push_button", "lift_object"}));
  eval->add_option("--episodes", episodes, "Number of evaluation episodes")
      ->check(CLI::PositiveNumber);
  eval->add_option("--seed", eval_seed_value, "Spawn seed for evaluation episodes");
  eval->add_option("--config", config, "Take the task geometry from this config");

  std::string dir_a, dir_b, json_out;
  auto* cmp = app.add_subcommand("compare", "Compare two run directories");
  cmp->add_option("dirA", dir_a)->required();
  cmp->add_option("dirB", dir_b)->required();
  cmp->add_option("--json", json_out, "Also write the machine-readable summary here");

  std::string plot_dir;
  int window = 20;
  auto* plot = app.add_subcommand("plot", "Render learning curves from metrics.jsonl");
  plot->add_option("dir", plot_dir)->required();
  plot->add_option("--window", window, "Moving-average window in episodes")
      ->check(CLI::PositiveNumber);

  bool with_llm = false;
  auto* ablate = app.add_subcommand("ablate", "Evaluator x query-interval ablation matrix");
  ablate->add_option("--config", config, "Base run config");
  ablate->add_option("--out", out, "Output directory")->required();
  ablate->add_flag("--with-llm", with_llm, "Include the llm evaluator column");
  ablate->add_option("--steps", steps, "Override total training steps");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(config, seed, evaluator, out, steps);
    if (*eval) return cmd_eval(qtable, task_name, episodes, eval_seed_value, config);
    if (*cmp) return cmd_compare(dir_a, dir_b, json_out);
    if (*plot) {
      plot_run(plot_dir, window);
      std::printf("wrote %s/learning_curves.svg and learning_curves.csv\n", plot_dir.c_str());
      return 0;
    }
    if (*ablate) return cmd_ablate(config, out, with_llm, steps);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ComparisonRefused& e) {
    std::fprintf(stderr, "compare refused: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
