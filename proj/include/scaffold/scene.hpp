#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "scaffold/env.hpp"

namespace scaffold {

struct Fact {
  std::string subject;
  std::string relation;
  std::string value;

  friend bool operator==(const Fact&, const Fact&) = default;
};

struct SceneDescription {
  std::string text;
  std::vector<Fact> facts;

  friend bool operator==(const SceneDescription&, const SceneDescription&) = default;
};

// Fixed-template rendering; coordinates rounded to 3 decimals.
SceneDescription describe_transition(const Transition& t, const TaskSpec& task);

// One-paragraph background for the task, used for the {task_description} slot.
std::string describe_task(const TaskSpec& task);

struct DistanceQuery {
  std::string a;
  std::string b;
};

class QueryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Position of "gripper" or an object id; nullopt when unresolvable.
std::optional<Vec3> resolve_position(std::string_view id, const Observation& state);

// Euclidean distance in meters. Throws QueryError for an unknown id.
double distance(const DistanceQuery& q, const Observation& state);

// "%.3f" with negative zero printed as "0.000".
std::string format_meters(double v);
std::string format_vec(Vec3 v);

}  // namespace scaffold
