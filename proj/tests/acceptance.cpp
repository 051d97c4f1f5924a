// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <future>
#include <regex>
#include <string>
#include <vector>

#include "fake_chat_server.hpp"
#include "scaffold/feedback.hpp"
#include "scaffold/harness.hpp"
#include "scaffold/scene.hpp"
#include "scaffold/shaping.hpp"
#include "test_support.hpp"

using namespace scaffold;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3};

struct SeedRun {
  double eval_success = 0.0;
  double final_length = 0.0;
  TrainResult result;
};

SeedRun run_seed(RunConfig cfg, EvaluatorKind kind, std::uint64_t seed, double flip = 0.0) {
  cfg.evaluator.kind = kind;
  cfg.evaluator.flip_probability = flip;
  SeedRun r;
  r.result = train(cfg, seed);
  r.eval_success = evaluate(r.result.qtable, cfg.task, cfg.eval_episodes, eval_seed(seed)).success_rate;
  r.final_length = summarize(r.result.metrics, cfg.total_train_steps).final_mean_episode_length;
  return r;
}

// Every (evaluator, seed) job of one task, run on parallel workers.
std::vector<std::vector<SeedRun>> run_jobs(const RunConfig& cfg,
                                           const std::vector<std::pair<EvaluatorKind, double>>& kinds) {
  std::vector<std::vector<std::future<SeedRun>>> futures(kinds.size());
  for (std::size_t k = 0; k < kinds.size(); ++k)
    for (auto seed : kSeeds)
      futures[k].push_back(std::async(std::launch::async, run_seed, cfg, kinds[k].first, seed,
                                      kinds[k].second));
  std::vector<std::vector<SeedRun>> out(kinds.size());
  for (std::size_t k = 0; k < kinds.size(); ++k)
    for (auto& f : futures[k]) out[k].push_back(f.get());
  return out;
}

RunConfig task_config(TaskSpec task) {
  RunConfig cfg;
  cfg.task = std::move(task);
  cfg.total_train_steps = 60'000;
  cfg.eval_episodes = 100;
  cfg.seeds = kSeeds;
  return cfg;
}

// --- 1 ---------------------------------------------------------------------

Outcome reward_mapping() {
  const auto t0 = Clock::now();
  Rng rng(101);
  int bad = 0;
  const std::vector<double> special{0.0, 100.0, -0.0, 1e-300, -1e300, 99.999};
  for (int i = 0; i < 10'000; ++i) {
    const Verdict v = static_cast<Verdict>(uniform_index(rng, 3));
    const double r_env = i < static_cast<int>(special.size()) ? special[i]
                         : i % 2                              ? uniform(rng, -1e3, 1e3)
                                                              : (uniform01(rng) < 0.5 ? 0.0 : 100.0);
    const double expect_llm = v == Verdict::GoodMove ? 1.0 : v == Verdict::BadMove ? -1.0 : 0.0;
    const double r_llm = verdict_to_reward(v);
    const ShapedReward s = combine(r_env, r_llm);
    const double sum = r_env + expect_llm;
    if (r_llm != expect_llm || std::bit_cast<std::uint64_t>(s.r_total) != std::bit_cast<std::uint64_t>(sum) ||
        s.r_env != r_env || s.r_llm != expect_llm)
      ++bad;
  }
  const double dt = seconds_since(t0);
  return {bad == 0 && dt < 1.0, fmt("10000 random cases, %d mismatches, %.3f s", bad, dt)};
}

// --- 2 ---------------------------------------------------------------------

Outcome parser_contract() {
  const auto t0 = Clock::now();
  struct Case {
    const char* text;
    Verdict v;
  };
  const std::vector<Case> cases{
      {"The robot made a Good Move toward the button.", Verdict::GoodMove},
      {"", Verdict::Unparsed},
      {"Not a bad move; overall this is a good move.", Verdict::GoodMove},
      {"It looked like a good move but it is a bad move.", Verdict::BadMove},
      {"GOOD MOVE", Verdict::GoodMove},
      {"bAd MoVe", Verdict::BadMove},
      {"good", Verdict::Unparsed},
      {"goodmove badmove", Verdict::Unparsed},
      {"I cannot judge this motion.", Verdict::Unparsed},
      {"bad move bad move good move bad move", Verdict::BadMove},
      {"\n\ngood move\n", Verdict::GoodMove},
  };
  int bad = 0;
  for (const auto& c : cases) {
    const Verdict v = parse_verdict(c.text);
    std::string up(c.text);
    for (auto& ch : up) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (v != c.v || parse_verdict(up) != c.v) ++bad;
    if (v == Verdict::Unparsed && verdict_to_reward(v) != 0.0) ++bad;
  }
  const double dt = seconds_since(t0);
  return {bad == 0 && dt < 1.0, fmt("%zu cases, %d failures, %.3f s", cases.size(), bad, dt)};
}

// --- 3 ---------------------------------------------------------------------

class CountingEvaluator final : public Evaluator {
 public:
  std::string evaluate(const Transition&, const TaskSpec&, const SceneDescription&) override {
    ++calls;
    return "good move";
  }
  EvaluatorKind kind() const override { return EvaluatorKind::Oracle; }
  long calls = 0;
};

Outcome query_schedule() {
  const auto t0 = Clock::now();
  // Goal unreachable so every episode runs to the 100-step cap.
  RunConfig cfg;
  cfg.task.press_radius = 1e-6;
  cfg.task.spawn = {{"button1", {{0.333, 0.333, -0.333}, {0.333, 0.333, -0.333}}}};
  cfg.total_train_steps = 1'000;
  CountingEvaluator counter;
  const auto r = train(cfg, 1, &counter);
  bool ok = counter.calls == 250 && r.metrics.size() == 10;
  for (const auto& m : r.metrics) ok = ok && m.episode_length == 100 && m.llm_queries == 25;

  Rng rng(303);
  int bad = 0;
  for (int i = 0; i < 2'000; ++i) {
    ShapingConfig sc;
    sc.query_interval = 1 + static_cast<int>(uniform_index(rng, 25));
    const int length = 1 + static_cast<int>(uniform_index(rng, 400));
    int n = 0;
    for (int k = 1; k <= length; ++k) n += should_query(k, sc);
    bad += n != length / sc.query_interval;
  }
  // Same property through the training loop with natural (variable) episode lengths.
  for (int q : {1, 3, 4, 9}) {
    RunConfig c;
    c.total_train_steps = 2'000;
    c.shaping.query_interval = q;
    CountingEvaluator e;
    const auto res = train(c, 5, &e);
    long recorded = 0, covered = 0;
    for (const auto& m : res.metrics) {
      bad += m.llm_queries != m.episode_length / q;
      recorded += m.llm_queries;
      covered += m.episode_length;
    }
    bad += e.calls != recorded + (c.total_train_steps - covered) / q;
  }
  const double dt = seconds_since(t0);
  return {ok && bad == 0 && dt < 1.0,
          fmt("full episodes %s (%ld calls over 10 episodes), floor(L/q) mismatches %d, %.3f s",
              ok ? "25 each" : "WRONG", counter.calls, bad, dt)};
}

// --- 4, 5, 6, 7, 8 -----------------------------------------------------------

struct TableRepro {
  std::vector<SeedRun> shaped, baseline, noisy, unparsed;
  double seconds = 0.0;
};

TableRepro run_task(TaskSpec task, bool with_noisy) {
  const auto t0 = Clock::now();
  std::vector<std::pair<EvaluatorKind, double>> kinds{{EvaluatorKind::Oracle, 0.0},
                                                      {EvaluatorKind::None, 0.0},
                                                      {EvaluatorKind::Unparsed, 0.0}};
  if (with_noisy) kinds.push_back({EvaluatorKind::NoisyOracle, 0.2});
  auto runs = run_jobs(task_config(std::move(task)), kinds);
  TableRepro t;
  t.shaped = std::move(runs[0]);
  t.baseline = std::move(runs[1]);
  t.unparsed = std::move(runs[2]);
  if (with_noisy) t.noisy = std::move(runs[3]);
  t.seconds = seconds_since(t0);
  return t;
}

std::vector<double> success_of(const std::vector<SeedRun>& v) {
  std::vector<double> out;
  for (const auto& r : v) out.push_back(r.eval_success);
  return out;
}

std::string list(const std::vector<double>& v, const char* f = "%.2f") {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(f, v[i]);
  return s + "]";
}

Outcome directional(const TableRepro& t, double shaped_min, double base_max, double gap_min,
                    double budget_s) {
  const auto s = success_of(t.shaped);
  const auto b = success_of(t.baseline);
  bool gaps = true;
  for (std::size_t i = 0; i < s.size(); ++i) gaps = gaps && s[i] - b[i] >= gap_min;
  const bool ok = median(s) >= shaped_min && median(b) <= base_max && gaps && t.seconds <= budget_s;
  return {ok, fmt("shaped %s median %.2f (>= %.2f), baseline %s median %.2f (<= %.2f), "
                  "per-seed gap >= %.2f %s, %.1f s wall",
                  list(s).c_str(), median(s), shaped_min, list(b).c_str(), median(b), base_max,
                  gap_min, gaps ? "yes" : "no", t.seconds)};
}

Outcome episode_length(const TableRepro& push, const TableRepro& lift) {
  bool ok = true;
  std::string detail;
  for (const auto* t : {&push, &lift}) {
    std::vector<double> s, b;
    for (std::size_t i = 0; i < kSeeds.size(); ++i) {
      s.push_back(t->shaped[i].final_length);
      b.push_back(t->baseline[i].final_length);
      ok = ok && s.back() < b.back();
    }
    detail += fmt("%s shaped %s vs baseline %s; ", t == &push ? "push_button" : "lift_object",
                  list(s, "%.1f").c_str(), list(b, "%.1f").c_str());
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

Outcome robustness(const TableRepro& push) {
  const auto n = success_of(push.noisy);
  const auto b = success_of(push.baseline);
  std::vector<double> gaps;
  for (std::size_t i = 0; i < n.size(); ++i) gaps.push_back(n[i] - b[i]);
  const double gap_of_medians = median(n) - median(b);
  const bool ok = median(gaps) >= 0.10 && gap_of_medians >= 0.10 && push.seconds <= 600;
  return {ok, fmt("noisy p=0.2 %s vs baseline %s, median gap %.2f, gap of medians %.2f (>= 0.10)",
                  list(n).c_str(), list(b).c_str(), median(gaps), gap_of_medians)};
}

bool same_learning(const std::vector<MetricsRecord>& a, const std::vector<MetricsRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].step != b[i].step || a[i].episode != b[i].episode ||
        a[i].episode_length != b[i].episode_length || a[i].success != b[i].success ||
        std::bit_cast<std::uint64_t>(a[i].episode_return) !=
            std::bit_cast<std::uint64_t>(b[i].episode_return))
      return false;
  }
  return true;
}

Outcome degeneracy(const TableRepro& push, const TableRepro& lift) {
  int identical = 0, total = 0;
  long unparsed_queries = 0;
  for (const auto* t : {&push, &lift})
    for (std::size_t i = 0; i < kSeeds.size(); ++i) {
      ++total;
      const auto& u = t->unparsed[i].result;
      const auto& b = t->baseline[i].result;
      bool counts_ok = u.verdicts.unparsed == u.total_queries && u.total_queries > 0;
      unparsed_queries += u.total_queries;
      if (same_learning(u.metrics, b.metrics) && u.qtable == b.qtable && counts_ok) ++identical;
    }
  return {identical == total,
          fmt("%d/%d seed runs bitwise identical in step, episode, return, length, success and "
              "qtable (%ld unparsed queries absorbed)",
              identical, total, unparsed_queries)};
}

// --- 9 ---------------------------------------------------------------------

Outcome q_learning_oracle() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    for (double gamma : {0.5, 0.9}) {
      testing::TinyMdp m;
      m.discount = gamma;
      const auto star = testing::value_iteration(m);
      const auto q = testing::learn_tiny_mdp(m, 100'000, seed);
      for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a) worst = std::max(worst, std::fabs(q[s][a] - star[s][a]));
    }
  }
  const double dt = seconds_since(t0);
  return {worst <= 1e-3 && dt < 1.0, fmt("max |Q - Q*| = %.2e (<= 1e-3), %.3f s", worst, dt)};
}

// --- 10 --------------------------------------------------------------------

using testing::FakeChatServer;
using testing::FakeReply;

// Asks for the distance to the described target, then says good iff < 0.1 m.
FakeReply geometry_script(const nlohmann::json& req) {
  static const std::regex target_re(R"(Target object: ([A-Za-z0-9_\-]+)\.)");
  static const std::regex result_re(R"(distance\(gripper, [A-Za-z0-9_\-]+\) = (-?[0-9.]+) m)");
  const std::string first = req.at("messages").at(0).at("content");
  const std::string last = testing::last_user_message(req);
  std::smatch m;
  if (std::regex_search(last, m, result_re))
    return {200, std::stod(m[1].str()) < 0.1 ? "Phase: approach. This is a good move."
                                             : "Phase: approach. This is a bad move."};
  if (std::regex_search(first, m, target_re)) return {200, "CALL distance(gripper, " + m[1].str() + ")"};
  return {200, "no target found"};
}

EvaluatorConfig llm_config(const std::string& url, double timeout) {
  EvaluatorConfig c;
  c.kind = EvaluatorKind::Llm;
  c.endpoint_url = url;
  c.timeout = timeout;
  c.retry_count = 1;
  c.max_tool_rounds = 3;
  return c;
}

struct FailureRun {
  bool ok = false;
  std::string detail;
};

// Short training run through a failing endpoint: every query must come back
// as Unparsed, so r_llm = 0 throughout, and the run must finish.
FailureRun failing_run(const char* name, FakeChatServer::Script script, double timeout) {
  FakeChatServer server(std::move(script));
  RunConfig cfg;
  cfg.total_train_steps = 120;
  cfg.evaluator = llm_config(server.url(), timeout);
  LlmEvaluator evaluator(cfg.prompts, cfg.evaluator, nullptr);
  const auto t0 = Clock::now();
  const auto r = train(cfg, 7, &evaluator);
  long expected = 0;
  long covered = 0;
  for (const auto& m : r.metrics) {
    expected += m.episode_length / cfg.shaping.query_interval;
    covered += m.episode_length;
  }
  expected += (cfg.total_train_steps - covered) / cfg.shaping.query_interval;
  const bool ok = expected > 0 && r.total_queries == expected && r.verdicts.unparsed == expected &&
                  r.verdicts.good == 0 && r.verdicts.bad == 0;
  return {ok, fmt("%s %ld/%ld unparsed in %.1f s", name, r.verdicts.unparsed, r.total_queries,
                  seconds_since(t0))};
}

Outcome endpoint_path() {
  const auto t0 = Clock::now();
  ::unsetenv(EvaluatorConfig::kEndpointEnv);
  int matched = 0, total = 0;
  {
    FakeChatServer server(geometry_script);
    Rng rng(1010);
    for (const auto& task : {TaskSpec::push_button(), TaskSpec::lift_object()}) {
      LlmEvaluator evaluator(PromptBundle::defaults(), llm_config(server.url(), 5.0), nullptr);
      for (int i = 0; i < 50;) {
        Observation obs = reset(task, rng());
        const Vec3 target = obs.objects.front().position;
        obs.gripper.position = task.workspace.clamp(
            {target.x + uniform(rng, -0.2, 0.2), target.y + uniform(rng, -0.2, 0.2),
             target.z + uniform(rng, -0.2, 0.2)});
        if (goal_reached(obs, task)) continue;
        const Transition t = step(obs, kAllActions[uniform_index(rng, kActionCount)], task);
        const Vec3 g = t.after.gripper.position;
        const Vec3 o = t.after.find(obs.objects.front().id)->position;
        const double truth = std::sqrt((g.x - o.x) * (g.x - o.x) + (g.y - o.y) * (g.y - o.y) +
                                       (g.z - o.z) * (g.z - o.z));
        if (std::fabs(truth - 0.1) < 1e-3) continue;  // 3-decimal rounding could flip it
        const Verdict v = parse_verdict(evaluator.evaluate(t, task, describe_transition(t, task)));
        const double r_llm = verdict_to_reward(v);
        matched += r_llm == (truth < 0.1 ? 1.0 : -1.0);
        ++total;
        ++i;
      }
    }
  }
  using namespace std::chrono_literals;
  const auto timeout = failing_run(
      "timeout:", [](const nlohmann::json&) { return FakeReply{200, "good move", 250ms}; }, 0.05);
  const auto http = failing_run(
      "http 500:", [](const nlohmann::json&) { return FakeReply{500, "good move"}; }, 2.0);
  const auto malformed = failing_run(
      "malformed CALL:",
      [](const nlohmann::json&) { return FakeReply{200, "CALL distance(gripper button1"}; }, 2.0);
  const double dt = seconds_since(t0);
  const bool ok = matched == total && total == 100 && timeout.ok && http.ok && malformed.ok &&
                  dt < 30.0;
  return {ok, fmt("%d/%d scenes match geometry; %s; %s; %s; %.1f s", matched, total,
                  timeout.detail.c_str(), http.detail.c_str(), malformed.detail.c_str(), dt)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&failures](int n, const char* name, const Outcome& o) {
    std::printf("criterion %2d %s  %-28s %s\n", n, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };

  report(1, "reward mapping", reward_mapping());
  report(2, "verdict parser", parser_contract());
  report(3, "query schedule", query_schedule());
  report(9, "q-learning vs value iter.", q_learning_oracle());
  report(10, "endpoint path (fake)", endpoint_path());

  const TableRepro push = run_task(TaskSpec::push_button(), true);
  const TableRepro lift = run_task(TaskSpec::lift_object(), false);
  report(4, "push_button success", directional(push, 0.70, 0.45, 0.20, 600));
  report(5, "lift_object success", directional(lift, 0.60, 0.35, 0.20, 900));
  report(6, "final episode length", episode_length(push, lift));
  report(7, "noisy evaluator", robustness(push));
  report(8, "unparsed == baseline", degeneracy(push, lift));

  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
