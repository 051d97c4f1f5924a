#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "scaffold/env.hpp"
#include "scaffold/rng.hpp"
#include "scaffold/scene.hpp"

namespace scaffold {

enum class Verdict { GoodMove, BadMove, Unparsed };

std::string_view verdict_name(Verdict v);

// Case-insensitive keyphrase detection. When both phrases occur, the one whose
// last occurrence is later wins; neither gives Unparsed.
Verdict parse_verdict(std::string_view text);

enum class Phase { Approach, Grasp, Lift };

std::string_view phase_name(Phase p);

Phase oracle_infer_phase(const Transition& t, const TaskSpec& task);

// Scripted stand-in for the language model. The reply always contains exactly
// one of "good move" / "bad move".
std::string oracle_evaluate(const Transition& t, const TaskSpec& task);

// Swaps every "good move" with "bad move" and vice versa (case-insensitive).
std::string flip_verdict_text(std::string_view text);

// Draws exactly one uniform from `rng` per call.
std::string noisy_oracle_evaluate(const Transition& t, const TaskSpec& task,
                                  double flip_probability, Rng& rng);

// --- prompts ---------------------------------------------------------------

struct PromptBundle {
  std::string scene_mission;
  std::string eval_mission;

  static constexpr std::string_view kPlaceholders[] = {"{task_description}",
                                                       "{scene_description}", "{tool_results}"};

  // Throws ConfigError when a template is empty or a placeholder is missing
  // from both templates.
  void validate() const;

  static PromptBundle defaults();
  static PromptBundle from_files(const std::string& scene_path, const std::string& eval_path);
};

// Replaces every `{name}` for the given keys; other braces are left alone.
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& values);

// --- evaluator configuration ---------------------------------------------

enum class EvaluatorKind { None, Oracle, NoisyOracle, Unparsed, Llm };

std::string_view evaluator_kind_name(EvaluatorKind k);
// Accepts "none", "oracle", "noisy-oracle" (or "noisy"), "unparsed", "llm".
EvaluatorKind parse_evaluator_kind(std::string_view s);

struct EvaluatorConfig {
  EvaluatorKind kind = EvaluatorKind::Oracle;
  std::string endpoint_url = "http://127.0.0.1:8000/v1/chat/completions";
  std::string model_name = "vicuna-13b-v1.5";
  double timeout = 20.0;  // seconds, per request attempt
  int max_tool_rounds = 3;
  double flip_probability = 0.0;
  int retry_count = 1;
  double temperature = 0.0;
  // Empty means the built-in default prompt.
  std::string scene_prompt_file;
  std::string eval_prompt_file;

  void validate() const;
  static EvaluatorConfig from_json(const nlohmann::ordered_json& j);
  nlohmann::ordered_json to_json() const;

  static constexpr const char* kApiKeyEnv = "SCAFFOLD_API_KEY";
  static constexpr const char* kEndpointEnv = "SCAFFOLD_ENDPOINT_URL";
};

// --- chat endpoint ---------------------------------------------------------

struct ChatMessage {
  std::string role;
  std::string content;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  // First choice's message content, or nullopt once every attempt failed.
  virtual std::optional<std::string> complete(const std::vector<ChatMessage>& messages) = 0;
};

// OpenAI-style chat-completion client over HTTP(S).
class HttpChatClient : public ChatClient {
 public:
  // Reads the API key and endpoint override from the environment.
  explicit HttpChatClient(EvaluatorConfig cfg);

  std::optional<std::string> complete(const std::vector<ChatMessage>& messages) override;

  const std::string& endpoint() const { return endpoint_; }
  std::size_t attempts() const { return attempts_; }

  static nlohmann::json request_body(const std::string& model, double temperature,
                                     const std::vector<ChatMessage>& messages);
  // Content of choices[0].message.content; nullopt for any other shape.
  static std::optional<std::string> extract_content(const std::string& body);

 private:
  std::optional<std::string> attempt(const std::string& body);

  EvaluatorConfig cfg_;
  std::string endpoint_;
  std::string api_key_;
  std::size_t attempts_ = 0;
};

struct ToolCallResult {
  std::string line;
  bool ok = false;
};

// Scans `reply` for lines beginning with CALL and answers each one against
// `state`. Empty when the reply requests nothing.
std::vector<ToolCallResult> run_tool_calls(std::string_view reply, const Observation& state);

// The text sent as the first user message of an evaluation.
std::string first_round_prompt(const PromptBundle& prompts, const TaskSpec& task,
                               const SceneDescription& scene, const Observation& state);

// Round protocol against `client`: at most cfg.max_tool_rounds requests.
// Returns "" when the endpoint fails.
std::string llm_evaluate(const Transition& t, const TaskSpec& task, const PromptBundle& prompts,
                         const EvaluatorConfig& cfg, ChatClient& client,
                         const SceneDescription& scene);
std::string llm_evaluate(const Transition& t, const TaskSpec& task, const PromptBundle& prompts,
                         const EvaluatorConfig& cfg, ChatClient& client);

// --- evaluators used by the training loop ---------------------------------

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual std::string evaluate(const Transition& t, const TaskSpec& task,
                               const SceneDescription& scene) = 0;
  virtual EvaluatorKind kind() const = 0;
};

class OracleEvaluator final : public Evaluator {
 public:
  std::string evaluate(const Transition& t, const TaskSpec& task,
                       const SceneDescription&) override {
    return oracle_evaluate(t, task);
  }
  EvaluatorKind kind() const override { return EvaluatorKind::Oracle; }
};

class NoisyOracleEvaluator final : public Evaluator {
 public:
  NoisyOracleEvaluator(double flip_probability, std::uint64_t seed)
      : flip_probability_(flip_probability), rng_(seed) {}
  std::string evaluate(const Transition& t, const TaskSpec& task,
                       const SceneDescription&) override {
    return noisy_oracle_evaluate(t, task, flip_probability_, rng_);
  }
  EvaluatorKind kind() const override { return EvaluatorKind::NoisyOracle; }

 private:
  double flip_probability_;
  Rng rng_;
};

// Never produces a keyphrase.
class UnparsedEvaluator final : public Evaluator {
 public:
  std::string evaluate(const Transition&, const TaskSpec&, const SceneDescription&) override {
    return "I cannot judge this motion.";
  }
  EvaluatorKind kind() const override { return EvaluatorKind::Unparsed; }
};

class LlmEvaluator final : public Evaluator {
 public:
  LlmEvaluator(PromptBundle prompts, EvaluatorConfig cfg, std::unique_ptr<ChatClient> client);
  std::string evaluate(const Transition& t, const TaskSpec& task,
                       const SceneDescription& scene) override;
  EvaluatorKind kind() const override { return EvaluatorKind::Llm; }

 private:
  PromptBundle prompts_;
  EvaluatorConfig cfg_;
  std::unique_ptr<ChatClient> client_;
};

// nullptr for EvaluatorKind::None.
std::unique_ptr<Evaluator> make_evaluator(const EvaluatorConfig& cfg, const PromptBundle& prompts,
                                          std::uint64_t noise_seed);

}  // namespace scaffold
