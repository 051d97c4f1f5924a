#include "scaffold/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "scaffold/errors.hpp"
#include "scaffold/scene.hpp"

namespace scaffold {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// --- configuration -----------------------------------------------------------

void RunConfig::validate() const {
  task.validate();
  evaluator.validate();
  shaping.validate();
  agent.validate();
  prompts.validate();
  if (total_train_steps <= 0) throw ConfigError("run.total_train_steps", "must be > 0");
  if (eval_episodes <= 0) throw ConfigError("run.eval_episodes", "must be > 0");
  if (seeds.empty()) throw ConfigError("run.seeds", "must be non-empty");
}

namespace {

void read_run_section(const ojson& j, RunConfig& c) {
  if (!j.is_object()) throw ConfigError("run", "expected an object");
  for (const auto& [k, v] : j.items()) {
    const std::string key = "run." + k;
    if (k == "total_train_steps") {
      if (!v.is_number_integer()) throw ConfigError(key, "expected an integer");
      c.total_train_steps = v.get<long>();
    } else if (k == "eval_episodes") {
      if (!v.is_number_integer()) throw ConfigError(key, "expected an integer");
      c.eval_episodes = v.get<int>();
    } else if (k == "seeds") {
      if (!v.is_array()) throw ConfigError(key, "expected an array of integers");
      c.seeds.clear();
      for (const auto& s : v) {
        if (!s.is_number_unsigned()) throw ConfigError(key, "seeds must be non-negative integers");
        c.seeds.push_back(s.get<std::uint64_t>());
      }
    } else if (k == "output_dir") {
      if (!v.is_string()) throw ConfigError(key, "expected a string");
      c.output_dir = v.get<std::string>();
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
}

PromptBundle read_prompt_section(const ojson& j) {
  if (!j.is_object()) throw ConfigError("prompts", "expected an object");
  PromptBundle b = PromptBundle::defaults();
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) throw ConfigError("prompts." + k, "expected a string");
    if (k == "scene_mission") b.scene_mission = v.get<std::string>();
    else if (k == "eval_mission") b.eval_mission = v.get<std::string>();
    else throw ConfigError("prompts." + k, "unknown key");
  }
  return b;
}

std::string resolve(const std::string& path, const fs::path& base) {
  if (path.empty() || fs::path(path).is_absolute() || base.empty()) return path;
  return (base / path).string();
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RunConfig RunConfig::from_json(const ojson& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config", "expected a JSON object");
  if (doc.contains("manifest_version")) {
    if (!doc.contains("config")) throw ConfigError("config", "manifest without embedded config");
    return from_json(doc["config"], base_dir);
  }
  RunConfig c;
  for (const auto& [k, v] : doc.items()) {
    if (k == "task") c.task = TaskSpec::from_json(v);
    else if (k == "evaluator") c.evaluator = EvaluatorConfig::from_json(v);
    else if (k == "shaping") c.shaping = ShapingConfig::from_json(v);
    else if (k == "agent") c.agent = AgentConfig::from_json(v);
    else if (k == "run") read_run_section(v, c);
    else if (k != "prompts") throw ConfigError(k, "unknown section");
  }
  if (doc.contains("prompts")) {
    c.prompts = read_prompt_section(doc["prompts"]);
  } else {
    c.prompts = PromptBundle::from_files(resolve(c.evaluator.scene_prompt_file, base_dir),
                                         resolve(c.evaluator.eval_prompt_file, base_dir));
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  const auto doc = ojson::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config", "invalid JSON in " + path.string());
  return from_json(doc, path.parent_path());
}

ojson RunConfig::to_json() const {
  ojson j;
  j["task"] = task.to_json();
  j["evaluator"] = evaluator.to_json();
  j["shaping"] = shaping.to_json();
  j["agent"] = agent.to_json();
  j["run"] = {{"total_train_steps", total_train_steps},
              {"eval_episodes", eval_episodes},
              {"seeds", seeds},
              {"output_dir", output_dir}};
  j["prompts"] = {{"scene_mission", prompts.scene_mission}, {"eval_mission", prompts.eval_mission}};
  return j;
}

std::string RunConfig::hash() const {
  ojson j = to_json();
  j["run"].erase("output_dir");
  j["run"].erase("seeds");
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

// --- metrics -------------------------------------------------------------------

ojson MetricsRecord::to_json() const {
  return {{"step", step},
          {"episode", episode},
          {"episode_return", episode_return},
          {"episode_length", episode_length},
          {"success", success},
          {"llm_queries", llm_queries},
          {"verdict_counts",
           {{"good", verdict_counts.good},
            {"bad", verdict_counts.bad},
            {"unparsed", verdict_counts.unparsed}}}};
}

MetricsRecord MetricsRecord::from_json(const nlohmann::json& j) {
  MetricsRecord r;
  r.step = j.at("step").get<long>();
  r.episode = j.at("episode").get<int>();
  r.episode_return = j.at("episode_return").get<double>();
  r.episode_length = j.at("episode_length").get<int>();
  r.success = j.at("success").get<bool>();
  r.llm_queries = j.at("llm_queries").get<long>();
  const auto& v = j.at("verdict_counts");
  r.verdict_counts = {v.at("good").get<long>(), v.at("bad").get<long>(),
                      v.at("unparsed").get<long>()};
  return r;
}

// --- training ------------------------------------------------------------------

namespace {
enum Stream : std::uint64_t { kSpawn = 1, kAgent = 2, kNoise = 3, kEval = 4 };
}

std::uint64_t spawn_seed(std::uint64_t run_seed, int episode) {
  return mix_seed(mix_seed(run_seed, kSpawn), static_cast<std::uint64_t>(episode));
}
std::uint64_t agent_seed(std::uint64_t run_seed) { return mix_seed(run_seed, kAgent); }
std::uint64_t noise_seed(std::uint64_t run_seed) { return mix_seed(run_seed, kNoise); }
std::uint64_t eval_seed(std::uint64_t run_seed) { return mix_seed(run_seed, kEval); }

TrainResult train(const RunConfig& cfg, std::uint64_t seed, Evaluator* evaluator,
                  const EpisodeSink& on_episode) {
  const TaskSpec& task = cfg.task;
  const Discretization& grid = cfg.agent.grid;
  TrainResult result{QTable(grid), {}, 0, {}, 0};
  QTable& q = result.qtable;
  Rng rng(agent_seed(seed));

  long steps = 0;
  for (int episode = 0; steps < cfg.total_train_steps; ++episode) {
    Observation obs = reset(task, spawn_seed(seed, episode));
    MetricsRecord rec;
    rec.episode = episode;
    StateKey s = discretize(obs, task, grid);
    while (steps < cfg.total_train_steps) {
      const double eps = cfg.agent.epsilon_at(steps, cfg.total_train_steps);
      const Action a = select_action(q, s, eps, rng);
      Transition t = step(obs, a, task);
      ++steps;

      double r_llm = 0.0;
      if (evaluator != nullptr && should_query(t.after.step_index, cfg.shaping)) {
        const SceneDescription scene = describe_transition(t, task);
        ++result.descriptions_built;
        const Verdict v = parse_verdict(evaluator->evaluate(t, task, scene));
        ++rec.llm_queries;
        ++result.total_queries;
        for (VerdictCounts* counts : {&rec.verdict_counts, &result.verdicts})
          (v == Verdict::GoodMove ? counts->good
           : v == Verdict::BadMove ? counts->bad
                                   : counts->unparsed)++;
        r_llm = verdict_to_reward(v, cfg.shaping);
      }
      const ShapedReward r = combine(t.r_env, r_llm);
      const StateKey next = discretize(t.after, task, grid);
      update(q, s, a, r.r_total, next, t.terminal, cfg.agent);

      rec.episode_return += r.r_total;
      ++rec.episode_length;
      s = next;
      obs = std::move(t.after);
      if (t.terminal) {
        rec.step = steps;
        rec.success = goal_reached(obs, task);
        if (on_episode) on_episode(rec);
        result.metrics.push_back(rec);
        break;
      }
    }
  }
  return result;
}

TrainResult train(const RunConfig& cfg, std::uint64_t seed, const EpisodeSink& on_episode) {
  auto evaluator = make_evaluator(cfg.evaluator, cfg.prompts, noise_seed(seed));
  return train(cfg, seed, evaluator.get(), on_episode);
}

EvalResult evaluate(const QTable& q, const TaskSpec& task, int episodes, std::uint64_t seed) {
  if (episodes <= 0) throw ContractViolation("evaluate: episodes must be > 0");
  EvalResult r;
  r.episodes = episodes;
  long successes = 0, total_length = 0;
  for (int e = 0; e < episodes; ++e) {
    Observation obs = reset(task, mix_seed(seed, static_cast<std::uint64_t>(e)));
    while (!is_terminal(obs, task))
      obs = step(obs, q.greedy(discretize(obs, task, q.grid())), task).after;
    successes += goal_reached(obs, task);
    total_length += obs.step_index;
  }
  r.success_rate = static_cast<double>(successes) / episodes;
  r.mean_episode_length = static_cast<double>(total_length) / episodes;
  return r;
}

// --- run directories -------------------------------------------------------------

ojson make_manifest(const RunConfig& cfg, std::uint64_t seed) {
  ojson m;
  m["manifest_version"] = 1;
  m["seed"] = seed;
  m["config_hash"] = cfg.hash();
  m["evaluator"] = std::string(evaluator_kind_name(cfg.evaluator.kind));
  m["derived_seeds"] = {{"spawn_stream", mix_seed(seed, kSpawn)},
                        {"agent", agent_seed(seed)},
                        {"noise", noise_seed(seed)},
                        {"eval", eval_seed(seed)}};
  RunConfig single = cfg;
  single.seeds = {seed};
  m["config"] = single.to_json();
  return m;
}

namespace {

void write_json(const fs::path& path, const ojson& j) {
  std::ofstream out(path);
  if (!out) throw ArtifactError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

ojson read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("cannot open " + path.string());
  auto j = ojson::parse(in, nullptr, false);
  if (j.is_discarded()) throw ArtifactError("invalid JSON in " + path.string());
  return j;
}

}  // namespace

TrainResult train_to_dir(const RunConfig& cfg, std::uint64_t seed, const fs::path& dir) {
  fs::create_directories(dir);
  const RunPaths paths{dir};
  write_json(paths.manifest(), make_manifest(cfg, seed));
  std::ofstream metrics(paths.metrics(), std::ios::trunc);
  if (!metrics) throw ArtifactError("cannot write " + paths.metrics().string());
  TrainResult result = train(cfg, seed, [&metrics](const MetricsRecord& r) {
    metrics << r.to_line() << '\n';
    metrics.flush();
  });
  result.qtable.save(paths.qtable().string());
  const EvalResult ev = evaluate(result.qtable, cfg.task, cfg.eval_episodes, eval_seed(seed));
  write_json(paths.eval(), {{"success_rate", ev.success_rate},
                            {"mean_episode_length", ev.mean_episode_length},
                            {"episodes", ev.episodes},
                            {"eval_seed", eval_seed(seed)},
                            {"total_queries", result.total_queries},
                            {"descriptions_built", result.descriptions_built}});
  return result;
}

std::vector<MetricsRecord> read_metrics(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("cannot open " + path.string());
  std::vector<MetricsRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw ArtifactError(path.string() + ":" + std::to_string(lineno) + ": invalid record");
    try {
      out.push_back(MetricsRecord::from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw ArtifactError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_metrics(const fs::path& path, const std::vector<MetricsRecord>& metrics) {
  std::ofstream out(path);
  if (!out) throw ArtifactError("cannot write " + path.string());
  for (const auto& r : metrics) out << r.to_line() << '\n';
}

// --- summaries -------------------------------------------------------------------

std::vector<double> moving_average(const std::vector<double>& values, int window) {
  std::vector<double> out(values.size());
  const std::size_t w = static_cast<std::size_t>(std::max(window, 1));
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= w) sum -= values[i - w];
    out[i] = sum / static_cast<double>(std::min(i + 1, w));
  }
  return out;
}

RunSummary summarize(const std::vector<MetricsRecord>& metrics, long total_train_steps,
                     int window) {
  RunSummary s;
  s.total_train_steps = total_train_steps;
  s.episodes = static_cast<int>(metrics.size());
  if (metrics.empty()) return s;
  std::vector<double> success;
  long successes = 0, length_sum = 0, final_sum = 0, final_n = 0;
  const double final_start = 0.9 * static_cast<double>(total_train_steps);
  for (const auto& r : metrics) {
    success.push_back(r.success ? 1.0 : 0.0);
    successes += r.success;
    length_sum += r.episode_length;
    if (static_cast<double>(r.step) > final_start) {
      final_sum += r.episode_length;
      ++final_n;
    }
  }
  const auto curve = moving_average(success, window);
  double area = 0.0;
  long prev = 0;
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    area += curve[i] * static_cast<double>(metrics[i].step - prev);
    prev = metrics[i].step;
  }
  s.train_success_rate = static_cast<double>(successes) / static_cast<double>(metrics.size());
  s.success_auc = total_train_steps > 0 ? area / static_cast<double>(total_train_steps) : 0.0;
  s.mean_episode_length = static_cast<double>(length_sum) / static_cast<double>(metrics.size());
  s.final_mean_episode_length =
      final_n > 0 ? static_cast<double>(final_sum) / static_cast<double>(final_n) : 0.0;
  return s;
}

RunSummary load_run_summary(const fs::path& dir) {
  const RunPaths paths{dir};
  const ojson manifest = read_json(paths.manifest());
  if (!manifest.contains("config")) throw ArtifactError(dir.string() + ": manifest lacks config");
  const auto& config = manifest["config"];
  RunSummary s = summarize(read_metrics(paths.metrics()),
                           config.at("run").at("total_train_steps").get<long>());
  s.label = dir.filename().empty() ? dir.parent_path().filename().string()
                                   : dir.filename().string();
  s.task = config.at("task");
  if (fs::exists(paths.eval())) {
    const ojson ev = read_json(paths.eval());
    s.eval_success_rate = ev.at("success_rate").get<double>();
    s.eval_mean_episode_length = ev.at("mean_episode_length").get<double>();
  }
  return s;
}

CompareReport compare(const RunSummary& a, const RunSummary& b) {
  if (a.task != b.task)
    throw ComparisonRefused("runs '" + a.label + "' and '" + b.label +
                            "' used different task configs");
  CompareReport rep{a.label, b.label, {}};
  auto add = [&rep](std::string name, double va, double vb, bool higher_better) {
    MetricComparison m{std::move(name), va, vb, vb - va, higher_better, "tie"};
    if (va != vb) m.dominant = ((vb > va) == higher_better) ? "b" : "a";
    rep.metrics.push_back(std::move(m));
  };
  if (a.eval_success_rate && b.eval_success_rate)
    add("eval_success_rate", *a.eval_success_rate, *b.eval_success_rate, true);
  if (a.eval_mean_episode_length && b.eval_mean_episode_length)
    add("eval_mean_episode_length", *a.eval_mean_episode_length, *b.eval_mean_episode_length, false);
  add("train_success_rate", a.train_success_rate, b.train_success_rate, true);
  add("success_auc", a.success_auc, b.success_auc, true);
  add("mean_episode_length", a.mean_episode_length, b.mean_episode_length, false);
  add("final_mean_episode_length", a.final_mean_episode_length, b.final_mean_episode_length, false);
  return rep;
}

CompareReport compare(const fs::path& dir_a, const fs::path& dir_b) {
  return compare(load_run_summary(dir_a), load_run_summary(dir_b));
}

std::string CompareReport::table() const {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-28s %12s %12s %12s  %s\n", "metric", "A", "B", "B - A",
                "better");
  out << "A = " << label_a << "\nB = " << label_b << "\n" << buf;
  for (const auto& m : metrics) {
    std::snprintf(buf, sizeof buf, "%-28s %12.4f %12.4f %+12.4f  %s\n", m.name.c_str(), m.a, m.b,
                  m.delta, m.dominant == "tie" ? "tie" : m.dominant == "a" ? "A" : "B");
    out << buf;
  }
  return out.str();
}

ojson CompareReport::to_json() const {
  ojson j;
  j["a"] = label_a;
  j["b"] = label_b;
  j["metrics"] = ojson::array();
  for (const auto& m : metrics)
    j["metrics"].push_back({{"name", m.name},
                            {"a", m.a},
                            {"b", m.b},
                            {"delta", m.delta},
                            {"higher_is_better", m.higher_is_better},
                            {"dominant", m.dominant}});
  return j;
}

// --- plotting ----------------------------------------------------------------------

namespace {

std::string svg_panel(const std::vector<double>& xs, const std::vector<double>& ys,
                      const std::string& title, double top, double x_max) {
  constexpr double kLeft = 70, kWidth = 620, kHeight = 180;
  double y_min = 0.0, y_max = 1.0;
  if (!ys.empty()) {
    y_min = std::min(0.0, *std::min_element(ys.begin(), ys.end()));
    y_max = *std::max_element(ys.begin(), ys.end());
    if (y_max <= y_min) y_max = y_min + 1.0;
  }
  std::ostringstream svg;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%.0f\" y=\"%.0f\" width=\"%.0f\" height=\"%.0f\" fill=\"none\" "
                "stroke=\"#999\"/>\n",
                kLeft, top, kWidth, kHeight);
  svg << buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%.0f\" y=\"%.0f\" font-size=\"13\">%s</text>\n", kLeft,
                top - 6, title.c_str());
  svg << buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.0f\" y=\"%.0f\" font-size=\"11\" text-anchor=\"end\">%.2f</text>\n"
                "<text x=\"%.0f\" y=\"%.0f\" font-size=\"11\" text-anchor=\"end\">%.2f</text>\n",
                kLeft - 4, top + 10, y_max, kLeft - 4, top + kHeight, y_min);
  svg << buf;
  svg << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double px = kLeft + kWidth * (x_max > 0 ? xs[i] / x_max : 0.0);
    const double py = top + kHeight * (1.0 - (ys[i] - y_min) / (y_max - y_min));
    std::snprintf(buf, sizeof buf, "%.1f,%.1f ", px, py);
    svg << buf;
  }
  svg << "\"/>\n";
  return svg.str();
}

}  // namespace

void plot_run(const fs::path& dir, int window) {
  const RunPaths paths{dir};
  const auto metrics = read_metrics(paths.metrics());
  std::vector<double> xs, returns, success, lengths;
  for (const auto& r : metrics) {
    xs.push_back(static_cast<double>(r.step));
    returns.push_back(r.episode_return);
    success.push_back(r.success ? 1.0 : 0.0);
    lengths.push_back(r.episode_length);
  }
  const auto ret_ma = moving_average(returns, window);
  const auto succ_ma = moving_average(success, window);
  const auto len_ma = moving_average(lengths, window);
  const double x_max = xs.empty() ? 1.0 : xs.back();

  std::ofstream csv(dir / "learning_curves.csv");
  if (!csv) throw ArtifactError("cannot write learning_curves.csv in " + dir.string());
  csv << "step,episode,return_ma,success_ma,length_ma\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    csv << metrics[i].step << ',' << metrics[i].episode << ',' << ret_ma[i] << ',' << succ_ma[i]
        << ',' << len_ma[i] << '\n';

  std::ofstream svg(dir / "learning_curves.svg");
  if (!svg) throw ArtifactError("cannot write learning_curves.svg in " + dir.string());
  const std::string w = std::to_string(window);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"720\" "
         "font-family=\"sans-serif\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << svg_panel(xs, ret_ma, "episode return (moving average, " + w + " episodes)", 30, x_max)
      << svg_panel(xs, succ_ma, "success rate (moving average, " + w + " episodes)", 260, x_max)
      << svg_panel(xs, len_ma, "episode length (moving average, " + w + " episodes)", 490, x_max)
      << "<text x=\"380\" y=\"700\" font-size=\"12\" text-anchor=\"middle\">training step (max "
      << static_cast<long>(x_max) << ")</text>\n"
      << "</svg>\n";
}

// --- ablation ----------------------------------------------------------------------

std::vector<AblationCell> run_ablation(const RunConfig& base, const fs::path& out,
                                       bool include_llm) {
  std::vector<EvaluatorKind> kinds{EvaluatorKind::Oracle, EvaluatorKind::NoisyOracle,
                                   EvaluatorKind::Unparsed};
  if (include_llm) kinds.push_back(EvaluatorKind::Llm);
  std::vector<AblationCell> cells;
  auto run_cell = [&](EvaluatorKind kind, int interval, const std::string& name) {
    for (std::uint64_t seed : base.seeds) {
      RunConfig cfg = base;
      cfg.evaluator.kind = kind;
      cfg.shaping.query_interval = interval;
      const fs::path dir = out / name / ("seed_" + std::to_string(seed));
      const TrainResult r = train_to_dir(cfg, seed, dir);
      const EvalResult ev = evaluate(r.qtable, cfg.task, cfg.eval_episodes, eval_seed(seed));
      cells.push_back({kind, interval, seed, ev, summarize(r.metrics, cfg.total_train_steps)});
    }
  };
  run_cell(EvaluatorKind::None, base.shaping.query_interval, "none");
  for (EvaluatorKind kind : kinds)
    for (int interval : {1, 4, 16})
      run_cell(kind, interval, std::string(evaluator_kind_name(kind)) + "_q" + std::to_string(interval));

  ojson summary = ojson::array();
  for (const auto& c : cells)
    summary.push_back({{"evaluator", std::string(evaluator_kind_name(c.kind))},
                       {"query_interval", c.query_interval},
                       {"seed", c.seed},
                       {"eval_success_rate", c.eval.success_rate},
                       {"eval_mean_episode_length", c.eval.mean_episode_length},
                       {"success_auc", c.summary.success_auc},
                       {"final_mean_episode_length", c.summary.final_mean_episode_length}});
  write_json(out / "ablation.json", summary);
  return cells;
}

}  // namespace scaffold
