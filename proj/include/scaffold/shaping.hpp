#pragma once

#include <nlohmann/json.hpp>

#include "scaffold/feedback.hpp"

namespace scaffold {

struct ShapingConfig {
  int query_interval = 4;
  double good_reward = 1.0;
  double bad_reward = -1.0;
  static constexpr double unparsed_reward = 0.0;

  void validate() const;
  static ShapingConfig from_json(const nlohmann::ordered_json& j);
  nlohmann::ordered_json to_json() const;
};

struct ShapedReward {
  double r_env = 0.0;
  double r_llm = 0.0;
  double r_total = 0.0;
};

double verdict_to_reward(Verdict v, const ShapingConfig& cfg = {});

inline ShapedReward combine(double r_env, double r_llm) { return {r_env, r_llm, r_env + r_llm}; }

// step_index counts from 1 within an episode.
bool should_query(int step_index, const ShapingConfig& cfg);

}  // namespace scaffold
