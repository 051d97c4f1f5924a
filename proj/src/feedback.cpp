#include "scaffold/feedback.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include "default_prompts.hpp"
#include "scaffold/errors.hpp"

namespace scaffold {

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::GoodMove: return "good";
    case Verdict::BadMove: return "bad";
    case Verdict::Unparsed: return "unparsed";
  }
  return "?";
}

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

constexpr std::string_view kGood = "good move";
constexpr std::string_view kBad = "bad move";

}  // namespace

Verdict parse_verdict(std::string_view text) {
  const std::string lower = lowercase(text);
  const auto good = lower.rfind(kGood);
  const auto bad = lower.rfind(kBad);
  if (good == std::string::npos && bad == std::string::npos) return Verdict::Unparsed;
  if (bad == std::string::npos) return Verdict::GoodMove;
  if (good == std::string::npos) return Verdict::BadMove;
  return good > bad ? Verdict::GoodMove : Verdict::BadMove;
}

std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::Approach: return "approach";
    case Phase::Grasp: return "grasp";
    case Phase::Lift: return "lift";
  }
  return "?";
}

Phase oracle_infer_phase(const Transition& t, const TaskSpec& task) {
  if (task.name == TaskName::PushButton) return Phase::Approach;
  const SceneObject* target = task_target(t.before, task);
  if (target == nullptr) return Phase::Approach;
  if (t.before.gripper.grasped == target->id) return Phase::Lift;
  if (distance(t.before.gripper.position, target->position) < task.grasp_radius)
    return Phase::Grasp;
  return Phase::Approach;
}

std::string oracle_evaluate(const Transition& t, const TaskSpec& task) {
  const Phase phase = oracle_infer_phase(t, task);
  std::string reply = "Phase: " + std::string(phase_name(phase)) + ". ";
  if (goal_reached(t.after, task)) return reply + "The task is complete: good move.";

  const SceneObject* target = task_target(t.before, task);
  if (target == nullptr) return reply + "There is nothing to work on: bad move.";
  const SceneObject* target_after = t.after.find(target->id);
  const Vec3 after_pos = target_after ? target_after->position : target->position;
  const double d_before = distance(t.before.gripper.position, target->position);
  const double d_after = distance(t.after.gripper.position, after_pos);
  const std::string dist = " (" + format_meters(d_before) + " m -> " + format_meters(d_after) + " m)";
  const bool closer = d_after < d_before;

  switch (phase) {
    case Phase::Approach:
      return reply + (closer ? "The gripper moved closer to " + target->id + dist + ": good move."
                             : "The gripper did not get closer to " + target->id + dist +
                                   ": bad move.");
    case Phase::Grasp:
      if (t.action == Action::CloseGripper)
        return reply + "The gripper closed next to " + target->id + ": good move.";
      if (closer) return reply + "The gripper moved even closer to " + target->id + dist + ": good move.";
      return reply + "The gripper should close on " + target->id + ": bad move.";
    case Phase::Lift: {
      if (t.after.gripper.grasped != target->id)
        return reply + "The gripper let go of " + target->id + ": bad move.";
      const std::string heights =
          " (z " + format_meters(target->position.z) + " -> " + format_meters(after_pos.z) + ")";
      if (after_pos.z > target->position.z)
        return reply + target->id + " was raised" + heights + ": good move.";
      return reply + target->id + " was not raised" + heights + ": bad move.";
    }
  }
  return reply + "bad move.";
}

std::string flip_verdict_text(std::string_view text) {
  const std::string lower = lowercase(text);
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (lower.compare(i, kGood.size(), kGood) == 0) {
      out += text[i] == 'G' ? "Bad move" : "bad move";
      i += kGood.size();
    } else if (lower.compare(i, kBad.size(), kBad) == 0) {
      out += text[i] == 'B' ? "Good move" : "good move";
      i += kBad.size();
    } else {
      out += text[i++];
    }
  }
  return out;
}

std::string noisy_oracle_evaluate(const Transition& t, const TaskSpec& task,
                                  double flip_probability, Rng& rng) {
  const bool flip = uniform01(rng) < flip_probability;
  std::string reply = oracle_evaluate(t, task);
  return flip ? flip_verdict_text(reply) : reply;
}

// --- prompts ---------------------------------------------------------------

void PromptBundle::validate() const {
  if (scene_mission.empty()) throw ConfigError("evaluator.scene_prompt_file", "template is empty");
  if (eval_mission.empty()) throw ConfigError("evaluator.eval_prompt_file", "template is empty");
  for (auto p : kPlaceholders) {
    if (scene_mission.find(p) == std::string::npos && eval_mission.find(p) == std::string::npos)
      throw ConfigError("evaluator.prompts", "placeholder " + std::string(p) + " is not used");
  }
}

PromptBundle PromptBundle::defaults() {
  return {detail::kDefaultSceneMission, detail::kDefaultEvalMission};
}

namespace {

std::string read_file(const std::string& path, const char* key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(key, "cannot read prompt file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

PromptBundle PromptBundle::from_files(const std::string& scene_path, const std::string& eval_path) {
  PromptBundle b = defaults();
  if (!scene_path.empty()) b.scene_mission = read_file(scene_path, "evaluator.scene_prompt_file");
  if (!eval_path.empty()) b.eval_mission = read_file(eval_path, "evaluator.eval_prompt_file");
  b.validate();
  return b;
}

std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    bool replaced = false;
    if (tmpl[i] == '{') {
      for (const auto& [key, value] : values) {
        if (tmpl.compare(i + 1, key.size(), key) == 0 && i + 1 + key.size() < tmpl.size() &&
            tmpl[i + 1 + key.size()] == '}') {
          out += value;
          i += key.size() + 2;
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out += tmpl[i++];
  }
  return out;
}

// --- evaluator configuration ---------------------------------------------

std::string_view evaluator_kind_name(EvaluatorKind k) {
  switch (k) {
    case EvaluatorKind::None: return "none";
    case EvaluatorKind::Oracle: return "oracle";
    case EvaluatorKind::NoisyOracle: return "noisy-oracle";
    case EvaluatorKind::Unparsed: return "unparsed";
    case EvaluatorKind::Llm: return "llm";
  }
  return "?";
}

EvaluatorKind parse_evaluator_kind(std::string_view s) {
  if (s == "none") return EvaluatorKind::None;
  if (s == "oracle") return EvaluatorKind::Oracle;
  if (s == "noisy-oracle" || s == "noisy") return EvaluatorKind::NoisyOracle;
  if (s == "unparsed") return EvaluatorKind::Unparsed;
  if (s == "llm") return EvaluatorKind::Llm;
  throw ConfigError("evaluator.kind", "unknown evaluator '" + std::string(s) + "'");
}

void EvaluatorConfig::validate() const {
  if (!(timeout > 0)) throw ConfigError("evaluator.timeout", "must be > 0");
  if (max_tool_rounds < 1) throw ConfigError("evaluator.max_tool_rounds", "must be >= 1");
  if (!(flip_probability >= 0 && flip_probability <= 1))
    throw ConfigError("evaluator.flip_probability", "must be in [0, 1]");
  if (retry_count < 0) throw ConfigError("evaluator.retry_count", "must be >= 0");
  if (!(temperature >= 0)) throw ConfigError("evaluator.temperature", "must be >= 0");
  if (kind == EvaluatorKind::Llm && endpoint_url.empty())
    throw ConfigError("evaluator.endpoint_url", "required for the llm evaluator");
}

EvaluatorConfig EvaluatorConfig::from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw ConfigError("evaluator", "expected an object");
  EvaluatorConfig c;
  for (const auto& [k, v] : j.items()) {
    const std::string key = "evaluator." + k;
    auto str = [&]() {
      if (!v.is_string()) throw ConfigError(key, "expected a string");
      return v.get<std::string>();
    };
    auto num = [&]() {
      if (!v.is_number()) throw ConfigError(key, "expected a number");
      return v.get<double>();
    };
    auto integer = [&]() {
      if (!v.is_number_integer()) throw ConfigError(key, "expected an integer");
      return v.get<int>();
    };
    if (k == "kind") c.kind = parse_evaluator_kind(str());
    else if (k == "endpoint_url") c.endpoint_url = str();
    else if (k == "model_name") c.model_name = str();
    else if (k == "timeout") c.timeout = num();
    else if (k == "max_tool_rounds") c.max_tool_rounds = integer();
    else if (k == "flip_probability") c.flip_probability = num();
    else if (k == "retry_count") c.retry_count = integer();
    else if (k == "temperature") c.temperature = num();
    else if (k == "scene_prompt_file") c.scene_prompt_file = str();
    else if (k == "eval_prompt_file") c.eval_prompt_file = str();
    else throw ConfigError(key, "unknown key");
  }
  c.validate();
  return c;
}

nlohmann::ordered_json EvaluatorConfig::to_json() const {
  return {{"kind", std::string(evaluator_kind_name(kind))},
          {"endpoint_url", endpoint_url},
          {"model_name", model_name},
          {"timeout", timeout},
          {"max_tool_rounds", max_tool_rounds},
          {"flip_probability", flip_probability},
          {"retry_count", retry_count},
          {"temperature", temperature},
          {"scene_prompt_file", scene_prompt_file},
          {"eval_prompt_file", eval_prompt_file}};
}

// --- tool protocol ----------------------------------------------------------

std::vector<ToolCallResult> run_tool_calls(std::string_view reply, const Observation& state) {
  static const std::regex call_re(
      R"(^CALL\s+distance\s*\(\s*([A-Za-z0-9_\-]+)\s*,\s*([A-Za-z0-9_\-]+)\s*\)\s*$)");
  std::vector<ToolCallResult> results;
  std::istringstream lines{std::string(reply)};
  std::string line;
  while (std::getline(lines, line)) {
    const auto first = line.find_first_not_of(" \t\r`*>-");
    if (first == std::string::npos) continue;
    std::string trimmed = line.substr(first);
    while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back())))
      trimmed.pop_back();
    while (!trimmed.empty() && trimmed.back() == '`') trimmed.pop_back();
    if (trimmed.rfind("CALL", 0) != 0) continue;
    std::smatch m;
    if (!std::regex_match(trimmed, m, call_re)) {
      results.push_back({"ERROR: malformed call '" + trimmed +
                             "'; expected CALL distance(<objectA>, <objectB>)",
                         false});
      continue;
    }
    const DistanceQuery q{m[1].str(), m[2].str()};
    const std::string call = "distance(" + q.a + ", " + q.b + ")";
    try {
      results.push_back({call + " = " + format_meters(distance(q, state)) + " m", true});
    } catch (const QueryError& e) {
      results.push_back({"ERROR: " + call + ": " + e.what(), false});
    }
  }
  return results;
}

std::string first_round_prompt(const PromptBundle& prompts, const TaskSpec& task,
                               const SceneDescription& scene, const Observation& state) {
  const std::map<std::string, std::string> values = {
      {"task_description", describe_task(task)},
      {"scene_description", scene.text},
      {"tool_results", "(no measurements yet)"}};
  std::string prompt = render_template(prompts.scene_mission, values);
  prompt += "\n\nAvailable function: distance(objectA, objectB) returns the Euclidean distance in "
            "meters. Valid names: gripper";
  for (const auto& o : state.objects) prompt += ", " + o.id;
  prompt += ".";
  return prompt;
}

std::string llm_evaluate(const Transition& t, const TaskSpec& task, const PromptBundle& prompts,
                         const EvaluatorConfig& cfg, ChatClient& client,
                         const SceneDescription& scene) {
  std::vector<ChatMessage> messages{{"user", first_round_prompt(prompts, task, scene, t.after)}};
  for (int round = 1; round <= cfg.max_tool_rounds; ++round) {
    const auto reply = client.complete(messages);
    if (!reply) return "";
    const auto calls = run_tool_calls(*reply, t.after);
    if (calls.empty() || round == cfg.max_tool_rounds) return *reply;
    std::string results;
    for (const auto& c : calls) results += c.line + "\n";
    if (!results.empty()) results.pop_back();
    messages.push_back({"assistant", *reply});
    messages.push_back({"user", render_template(prompts.eval_mission,
                                                {{"task_description", describe_task(task)},
                                                 {"scene_description", scene.text},
                                                 {"tool_results", results}})});
  }
  return "";
}

std::string llm_evaluate(const Transition& t, const TaskSpec& task, const PromptBundle& prompts,
                         const EvaluatorConfig& cfg, ChatClient& client) {
  return llm_evaluate(t, task, prompts, cfg, client, describe_transition(t, task));
}

LlmEvaluator::LlmEvaluator(PromptBundle prompts, EvaluatorConfig cfg,
                           std::unique_ptr<ChatClient> client)
    : prompts_(std::move(prompts)), cfg_(std::move(cfg)), client_(std::move(client)) {
  if (!client_) client_ = std::make_unique<HttpChatClient>(cfg_);
}

std::string LlmEvaluator::evaluate(const Transition& t, const TaskSpec& task,
                                   const SceneDescription& scene) {
  return llm_evaluate(t, task, prompts_, cfg_, *client_, scene);
}

std::unique_ptr<Evaluator> make_evaluator(const EvaluatorConfig& cfg, const PromptBundle& prompts,
                                          std::uint64_t noise_seed) {
  switch (cfg.kind) {
    case EvaluatorKind::None: return nullptr;
    case EvaluatorKind::Oracle: return std::make_unique<OracleEvaluator>();
    case EvaluatorKind::NoisyOracle:
      return std::make_unique<NoisyOracleEvaluator>(cfg.flip_probability, noise_seed);
    case EvaluatorKind::Unparsed: return std::make_unique<UnparsedEvaluator>();
    case EvaluatorKind::Llm: return std::make_unique<LlmEvaluator>(prompts, cfg, nullptr);
  }
  return nullptr;
}

}  // namespace scaffold
