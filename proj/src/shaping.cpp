#include "scaffold/shaping.hpp"

#include <cmath>

#include "scaffold/errors.hpp"

namespace scaffold {

void ShapingConfig::validate() const {
  if (query_interval < 1) throw ConfigError("shaping.query_interval", "must be >= 1");
  if (!std::isfinite(good_reward)) throw ConfigError("shaping.good_reward", "must be finite");
  if (!std::isfinite(bad_reward)) throw ConfigError("shaping.bad_reward", "must be finite");
}

ShapingConfig ShapingConfig::from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw ConfigError("shaping", "expected an object");
  ShapingConfig c;
  for (const auto& [k, v] : j.items()) {
    const std::string key = "shaping." + k;
    if (k == "query_interval") {
      if (!v.is_number_integer()) throw ConfigError(key, "expected an integer");
      c.query_interval = v.get<int>();
    } else if (k == "good_reward" || k == "bad_reward") {
      if (!v.is_number()) throw ConfigError(key, "expected a number");
      (k == "good_reward" ? c.good_reward : c.bad_reward) = v.get<double>();
    } else if (k == "unparsed_reward") {
      if (!v.is_number() || v.get<double>() != unparsed_reward)
        throw ConfigError(key, "is fixed at 0");
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
  c.validate();
  return c;
}

nlohmann::ordered_json ShapingConfig::to_json() const {
  return {{"query_interval", query_interval}, {"good_reward", good_reward}, {"bad_reward", bad_reward}};
}

double verdict_to_reward(Verdict v, const ShapingConfig& cfg) {
  switch (v) {
    case Verdict::GoodMove: return cfg.good_reward;
    case Verdict::BadMove: return cfg.bad_reward;
    case Verdict::Unparsed: return ShapingConfig::unparsed_reward;
  }
  return ShapingConfig::unparsed_reward;
}

bool should_query(int step_index, const ShapingConfig& cfg) {
  return step_index >= 1 && step_index % cfg.query_interval == 0;
}

}  // namespace scaffold
