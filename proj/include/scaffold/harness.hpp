#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scaffold/agent.hpp"
#include "scaffold/env.hpp"
#include "scaffold/feedback.hpp"
#include "scaffold/shaping.hpp"

namespace scaffold {

struct RunConfig {
  TaskSpec task = TaskSpec::push_button();
  EvaluatorConfig evaluator;
  ShapingConfig shaping;
  AgentConfig agent;
  PromptBundle prompts = PromptBundle::defaults();
  long total_train_steps = 60'000;
  int eval_episodes = 100;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string output_dir = "runs";

  void validate() const;

  // Sections task, evaluator, shaping, agent, run and (optionally) prompts with
  // inline template texts. A run manifest is accepted too; its embedded config
  // is used. Relative prompt paths resolve against `base_dir`.
  static RunConfig from_json(const nlohmann::ordered_json& doc,
                             const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);

  // Prompts are always written inline so the document is self-contained.
  nlohmann::ordered_json to_json() const;
  std::string hash() const;
};

struct VerdictCounts {
  long good = 0;
  long bad = 0;
  long unparsed = 0;

  long total() const { return good + bad + unparsed; }
  friend bool operator==(const VerdictCounts&, const VerdictCounts&) = default;
};

struct MetricsRecord {
  long step = 0;  // global training step at the end of the episode
  int episode = 0;
  double episode_return = 0.0;
  int episode_length = 0;
  bool success = false;
  long llm_queries = 0;
  VerdictCounts verdict_counts;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;

  nlohmann::ordered_json to_json() const;
  static MetricsRecord from_json(const nlohmann::json& j);
  std::string to_line() const { return to_json().dump(); }
};

struct TrainResult {
  QTable qtable;
  std::vector<MetricsRecord> metrics;
  long total_queries = 0;
  VerdictCounts verdicts;
  long descriptions_built = 0;
};

// Derived seeds per stream, so env spawns, exploration and evaluator noise are
// independent of each other.
std::uint64_t spawn_seed(std::uint64_t run_seed, int episode);
std::uint64_t agent_seed(std::uint64_t run_seed);
std::uint64_t noise_seed(std::uint64_t run_seed);
std::uint64_t eval_seed(std::uint64_t run_seed);

using EpisodeSink = std::function<void(const MetricsRecord&)>;

// Runs exactly cfg.total_train_steps environment steps. `evaluator` null means
// the baseline (no feedback channel). A trailing unfinished episode updates the
// table but produces no MetricsRecord.
TrainResult train(const RunConfig& cfg, std::uint64_t seed, Evaluator* evaluator,
                  const EpisodeSink& on_episode = {});

// Builds the evaluator from cfg.evaluator.
TrainResult train(const RunConfig& cfg, std::uint64_t seed, const EpisodeSink& on_episode = {});

struct EvalResult {
  double success_rate = 0.0;
  double mean_episode_length = 0.0;
  int episodes = 0;
};

// Greedy rollouts on fresh spawns; no evaluator involved. Throws
// ContractViolation when episodes <= 0.
EvalResult evaluate(const QTable& q, const TaskSpec& task, int episodes, std::uint64_t seed);

// --- run directories -------------------------------------------------------

struct RunPaths {
  std::filesystem::path dir;
  std::filesystem::path manifest() const { return dir / "manifest.json"; }
  std::filesystem::path metrics() const { return dir / "metrics.jsonl"; }
  std::filesystem::path qtable() const { return dir / "qtable.txt"; }
  std::filesystem::path eval() const { return dir / "eval.json"; }
};

nlohmann::ordered_json make_manifest(const RunConfig& cfg, std::uint64_t seed);

// Trains one seed, streaming metrics.jsonl (flushed per episode), then writes
// the qtable and the post-training evaluation.
TrainResult train_to_dir(const RunConfig& cfg, std::uint64_t seed, const std::filesystem::path& dir);

std::vector<MetricsRecord> read_metrics(const std::filesystem::path& path);
void write_metrics(const std::filesystem::path& path, const std::vector<MetricsRecord>& metrics);

// --- summaries and comparison ------------------------------------------------

struct RunSummary {
  std::string label;
  nlohmann::ordered_json task;
  long total_train_steps = 0;
  int episodes = 0;
  double train_success_rate = 0.0;
  // Area under the windowed success-rate curve, x normalized to [0, 1].
  double success_auc = 0.0;
  double mean_episode_length = 0.0;
  // Mean length of episodes ending in the last 10% of training steps.
  double final_mean_episode_length = 0.0;
  std::optional<double> eval_success_rate;
  std::optional<double> eval_mean_episode_length;
};

RunSummary summarize(const std::vector<MetricsRecord>& metrics, long total_train_steps,
                     int window = 20);
RunSummary load_run_summary(const std::filesystem::path& dir);

struct MetricComparison {
  std::string name;
  double a = 0.0;
  double b = 0.0;
  double delta = 0.0;  // b - a
  bool higher_is_better = true;
  // "a", "b" or "tie".
  std::string dominant;
};

struct CompareReport {
  std::string label_a;
  std::string label_b;
  std::vector<MetricComparison> metrics;

  std::string table() const;
  nlohmann::ordered_json to_json() const;
};

class ComparisonRefused : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws ComparisonRefused when the two runs used different task configs.
CompareReport compare(const RunSummary& a, const RunSummary& b);
CompareReport compare(const std::filesystem::path& dir_a, const std::filesystem::path& dir_b);

// --- plotting ----------------------------------------------------------------

std::vector<double> moving_average(const std::vector<double>& values, int window);

// Writes learning_curves.svg and learning_curves.csv next to metrics.jsonl.
void plot_run(const std::filesystem::path& dir, int window = 20);

// --- ablation ----------------------------------------------------------------

struct AblationCell {
  EvaluatorKind kind;
  int query_interval;
  std::uint64_t seed;
  EvalResult eval;
  RunSummary summary;
};

// {oracle, noisy-oracle, unparsed[, llm]} x {1, 4, 16} plus the baseline, one
// run directory per cell and seed under `out`.
std::vector<AblationCell> run_ablation(const RunConfig& base, const std::filesystem::path& out,
                                       bool include_llm);

}  // namespace scaffold
