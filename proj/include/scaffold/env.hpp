#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "scaffold/geometry.hpp"

namespace scaffold {

struct SceneObject {
  std::string id;
  Vec3 position;
  bool graspable = false;
  // Height the object returns to when released (its stand or table surface).
  double rest_z = 0.0;
  std::optional<Box> goal_zone;

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct GripperState {
  Vec3 position;
  bool open = true;
  std::optional<std::string> detected;
  std::optional<std::string> grasped;

  friend bool operator==(const GripperState&, const GripperState&) = default;
};

enum class Action : std::uint8_t {
  PlusX,
  MinusX,
  PlusY,
  MinusY,
  PlusZ,
  MinusZ,
  OpenGripper,
  CloseGripper,
};

inline constexpr std::size_t kActionCount = 8;

// Fixed ordering; greedy tie-breaks resolve to the earliest entry.
inline constexpr std::array<Action, kActionCount> kAllActions = {
    Action::PlusX,  Action::MinusX,      Action::PlusY,       Action::MinusY,
    Action::PlusZ,  Action::MinusZ,      Action::OpenGripper, Action::CloseGripper,
};

std::string_view action_name(Action a);

// Unit axis (0..2) and sign for movement actions; nullopt for gripper actions.
std::optional<std::pair<int, int>> movement_axis(Action a);

struct Observation {
  GripperState gripper;
  std::vector<SceneObject> objects;
  int step_index = 0;

  friend bool operator==(const Observation&, const Observation&) = default;

  const SceneObject* find(std::string_view id) const;
};

struct Transition {
  Observation before;
  Action action = Action::PlusX;
  Observation after;
  double r_env = 0.0;
  bool terminal = false;

  friend bool operator==(const Transition&, const Transition&) = default;
};

enum class TaskName { PushButton, LiftObject };

std::string_view task_name_string(TaskName name);
TaskName parse_task_name(std::string_view s);

struct SpawnRange {
  std::string object_id;
  Box box;

  friend bool operator==(const SpawnRange&, const SpawnRange&) = default;
};

struct TaskSpec {
  TaskName name = TaskName::PushButton;
  double goal_reward = 100.0;
  int max_episode_length = 100;
  double delta = 0.05;
  double grasp_radius = 0.08;
  double press_radius = 0.08;
  // Height above the object's rest height that counts as lifted.
  double lift_threshold = 0.25;
  double sensing_radius = 0.12;
  Box workspace{{-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}};
  std::vector<SpawnRange> spawn;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;

  // Throws ConfigError naming the first offending key.
  void validate() const;

  Vec3 home() const { return workspace.center(); }

  static TaskSpec push_button();
  static TaskSpec lift_object();
  static TaskSpec defaults(TaskName name);

  // Reads the `task` section keys; absent keys keep the task's defaults.
  static TaskSpec from_json(const nlohmann::ordered_json& j);
  nlohmann::ordered_json to_json() const;
};

// Object the agent should act on in this state: the nearest button, or the
// first spawned object for lift_object. Null only for a scene without objects.
const SceneObject* task_target(const Observation& obs, const TaskSpec& task);

// Point the gripper should move toward next: the target object, or for a
// grasped lift target the point just above its lift height.
Vec3 motion_target(const Observation& obs, const TaskSpec& task);

Observation reset(const TaskSpec& task, std::uint64_t seed);

bool goal_reached(const Observation& state, const TaskSpec& task);

bool is_terminal(const Observation& state, const TaskSpec& task);

// Throws ContractViolation when `state` is already terminal.
Transition step(const Observation& state, Action action, const TaskSpec& task);

}  // namespace scaffold
