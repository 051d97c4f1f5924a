#include "scaffold/agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "scaffold/errors.hpp"

namespace scaffold {

void AgentConfig::validate() const {
  if (!(learning_rate >= 0 && learning_rate <= 1))
    throw ConfigError("agent.learning_rate", "must be in [0, 1]");
  if (!(discount >= 0 && discount <= 1)) throw ConfigError("agent.discount", "must be in [0, 1]");
  if (!(epsilon_start >= 0 && epsilon_start <= 1))
    throw ConfigError("agent.epsilon_start", "must be in [0, 1]");
  if (!(epsilon_end >= 0 && epsilon_end <= 1))
    throw ConfigError("agent.epsilon_end", "must be in [0, 1]");
  if (!(epsilon_decay_fraction > 0 && epsilon_decay_fraction <= 1))
    throw ConfigError("agent.epsilon_decay_fraction", "must be in (0, 1]");
  if (grid.bins < 2 || grid.bins > 256) throw ConfigError("agent.bins", "must be in [2, 256]");
  if (!(grid.offset_range > 0) || !std::isfinite(grid.offset_range))
    throw ConfigError("agent.offset_range", "must be > 0");
}

AgentConfig AgentConfig::from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw ConfigError("agent", "expected an object");
  AgentConfig c;
  for (const auto& [k, v] : j.items()) {
    const std::string key = "agent." + k;
    if (k == "bins") {
      if (!v.is_number_integer()) throw ConfigError(key, "expected an integer");
      c.grid.bins = v.get<int>();
      continue;
    }
    if (!v.is_number()) throw ConfigError(key, "expected a number");
    const double x = v.get<double>();
    if (k == "learning_rate") c.learning_rate = x;
    else if (k == "discount") c.discount = x;
    else if (k == "epsilon_start") c.epsilon_start = x;
    else if (k == "epsilon_end") c.epsilon_end = x;
    else if (k == "epsilon_decay_fraction") c.epsilon_decay_fraction = x;
    else if (k == "offset_range") c.grid.offset_range = x;
    else throw ConfigError(key, "unknown key");
  }
  c.validate();
  return c;
}

nlohmann::ordered_json AgentConfig::to_json() const {
  return {{"learning_rate", learning_rate},
          {"discount", discount},
          {"epsilon_start", epsilon_start},
          {"epsilon_end", epsilon_end},
          {"epsilon_decay_fraction", epsilon_decay_fraction},
          {"bins", grid.bins},
          {"offset_range", grid.offset_range}};
}

double AgentConfig::epsilon_at(long step, long total_steps) const {
  const double horizon = epsilon_decay_fraction * static_cast<double>(total_steps);
  if (horizon <= 0 || step >= horizon) return epsilon_end;
  const double frac = static_cast<double>(step) / horizon;
  return epsilon_start + (epsilon_end - epsilon_start) * frac;
}

StateKey discretize(const Observation& obs, const TaskSpec& task, const Discretization& grid) {
  StateKey key;
  key.open = obs.gripper.open;
  key.grasped = obs.gripper.grasped.has_value();
  const Vec3 offset = motion_target(obs, task) - obs.gripper.position;
  const double per_meter = grid.bins / (2.0 * grid.offset_range);
  const double center = 0.5 * grid.bins;
  for (int axis = 0; axis < 3; ++axis) {
    const double b = std::floor(offset[axis] * per_meter + center);
    key.bins[axis] = static_cast<int>(std::clamp(b, 0.0, static_cast<double>(grid.bins - 1)));
  }
  return key;
}

QTable::QTable(Discretization grid)
    : grid_(grid),
      state_count_(static_cast<std::size_t>(grid.bins) * grid.bins * grid.bins * 4),
      values_(state_count_ * kActionCount, 0.0) {
  if (grid.bins < 2) throw ContractViolation("QTable requires at least 2 bins");
}

std::size_t QTable::index(const StateKey& s) const {
  const auto b = static_cast<std::size_t>(grid_.bins);
  std::size_t i = (static_cast<std::size_t>(s.bins[0]) * b + s.bins[1]) * b + s.bins[2];
  return i * 4 + (s.open ? 2 : 0) + (s.grasped ? 1 : 0);
}

double QTable::max_value(const StateKey& s) const {
  const std::size_t base = slot(index(s), Action::PlusX);
  return *std::max_element(values_.begin() + base, values_.begin() + base + kActionCount);
}

Action QTable::greedy(std::size_t state) const {
  Action best = kAllActions[0];
  double best_v = get(state, best);
  for (Action a : kAllActions) {
    const double v = get(state, a);
    if (v > best_v) {
      best_v = v;
      best = a;
    }
  }
  return best;
}

Action QTable::greedy(const StateKey& s) const { return greedy(index(s)); }

void QTable::scale(double c) {
  for (auto& v : values_) v *= c;
}

double QTable::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::fabs(v));
  return m;
}

void QTable::save(std::ostream& out) const {
  std::size_t nonzero = 0;
  for (double v : values_) nonzero += v != 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", grid_.offset_range);
  out << kHeader << '\n'
      << "bins " << grid_.bins << '\n'
      << "offset_range " << buf << '\n'
      << "entries " << nonzero << '\n';
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] == 0.0) continue;
    std::snprintf(buf, sizeof buf, "%a", values_[i]);
    out << i / kActionCount << ' ' << i % kActionCount << ' ' << buf << '\n';
  }
}

void QTable::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ArtifactError("cannot write qtable to " + path);
  save(out);
  if (!out) throw ArtifactError("failed writing qtable to " + path);
}

QTable QTable::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kHeader)
    throw ArtifactError("qtable: missing or unsupported header");
  std::string word, range;
  Discretization grid;
  std::size_t entries = 0;
  if (!(in >> word >> grid.bins) || word != "bins" || grid.bins < 2 || grid.bins > 256)
    throw ArtifactError("qtable: bad bins line");
  if (!(in >> word >> range) || word != "offset_range")
    throw ArtifactError("qtable: bad offset_range line");
  grid.offset_range = std::strtod(range.c_str(), nullptr);
  if (!(grid.offset_range > 0) || !std::isfinite(grid.offset_range))
    throw ArtifactError("qtable: bad offset_range value");
  if (!(in >> word >> entries) || word != "entries") throw ArtifactError("qtable: bad entries line");
  QTable q(grid);
  for (std::size_t n = 0; n < entries; ++n) {
    std::size_t state = 0, action = 0;
    std::string value;
    if (!(in >> state >> action >> value)) throw ArtifactError("qtable: truncated entry list");
    if (state >= q.state_count_ || action >= kActionCount)
      throw ArtifactError("qtable: entry out of range");
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0' || !std::isfinite(v))
      throw ArtifactError("qtable: bad value '" + value + "'");
    q.values_[state * kActionCount + action] = v;
  }
  if (in >> word) throw ArtifactError("qtable: trailing data");
  return q;
}

QTable QTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("cannot open qtable " + path);
  return load(in);
}

Action select_action(const QTable& q, const StateKey& s, double epsilon, Rng& rng) {
  if (uniform01(rng) < epsilon) return kAllActions[uniform_index(rng, kActionCount)];
  return q.greedy(s);
}

void update(QTable& q, const StateKey& s, Action a, double r_total, const StateKey& next,
            bool terminal, const AgentConfig& cfg) {
  const double bootstrap = terminal ? 0.0 : cfg.discount * q.max_value(next);
  const double old = q.get(s, a);
  q.set(s, a, old + cfg.learning_rate * (r_total + bootstrap - old));
}

}  // namespace scaffold
