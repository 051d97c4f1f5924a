#include "scaffold/env.hpp"

#include <cmath>
#include <limits>

#include "scaffold/errors.hpp"
#include "scaffold/rng.hpp"

namespace scaffold {

std::string_view action_name(Action a) {
  switch (a) {
    case Action::PlusX: return "+x";
    case Action::MinusX: return "-x";
    case Action::PlusY: return "+y";
    case Action::MinusY: return "-y";
    case Action::PlusZ: return "+z";
    case Action::MinusZ: return "-z";
    case Action::OpenGripper: return "open_gripper";
    case Action::CloseGripper: return "close_gripper";
  }
  return "?";
}

std::optional<std::pair<int, int>> movement_axis(Action a) {
  switch (a) {
    case Action::PlusX: return std::pair{0, +1};
    case Action::MinusX: return std::pair{0, -1};
    case Action::PlusY: return std::pair{1, +1};
    case Action::MinusY: return std::pair{1, -1};
    case Action::PlusZ: return std::pair{2, +1};
    case Action::MinusZ: return std::pair{2, -1};
    default: return std::nullopt;
  }
}

const SceneObject* Observation::find(std::string_view id) const {
  for (const auto& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

std::string_view task_name_string(TaskName name) {
  return name == TaskName::PushButton ? "push_button" : "lift_object";
}

TaskName parse_task_name(std::string_view s) {
  if (s == "push_button") return TaskName::PushButton;
  if (s == "lift_object") return TaskName::LiftObject;
  throw ConfigError("task.name", "unknown task '" + std::string(s) + "'");
}

namespace {

void require(bool ok, const char* key, const char* what) {
  if (!ok) throw ConfigError(key, what);
}

}  // namespace

void TaskSpec::validate() const {
  require(std::isfinite(goal_reward) && goal_reward > 0, "task.goal_reward", "must be > 0");
  require(max_episode_length > 0, "task.max_episode_length", "must be > 0");
  require(std::isfinite(delta) && delta > 0, "task.delta", "must be > 0");
  require(grasp_radius > 0, "task.grasp_radius", "must be > 0");
  require(press_radius > 0, "task.press_radius", "must be > 0");
  require(lift_threshold > 0, "task.lift_threshold", "must be > 0");
  require(sensing_radius > 0, "task.sensing_radius", "must be > 0");
  require(workspace.min.finite() && workspace.max.finite() && workspace.valid(), "task.workspace",
          "min must be <= max componentwise");
  require(!spawn.empty(), "task.spawn", "at least one object is required");
  for (std::size_t i = 0; i < spawn.size(); ++i) {
    const auto key = "task.spawn." + spawn[i].object_id;
    if (spawn[i].object_id.empty() || spawn[i].object_id == "gripper")
      throw ConfigError(key, "object id must be non-empty and not 'gripper'");
    for (std::size_t j = 0; j < i; ++j)
      if (spawn[j].object_id == spawn[i].object_id) throw ConfigError(key, "duplicate object id");
    if (!spawn[i].box.valid()) throw ConfigError(key, "min must be <= max componentwise");
    if (!workspace.contains(spawn[i].box)) throw ConfigError(key, "spawn range outside workspace");
    if (name == TaskName::LiftObject &&
        spawn[i].box.max.z + lift_threshold > workspace.max.z)
      throw ConfigError(key, "lift height not reachable inside workspace");
  }
}

TaskSpec TaskSpec::push_button() {
  TaskSpec t;
  t.name = TaskName::PushButton;
  t.spawn = {{"button1", {{0.05, -0.30, -0.40}, {0.35, 0.30, -0.10}}}};
  return t;
}

TaskSpec TaskSpec::lift_object() {
  TaskSpec t;
  t.name = TaskName::LiftObject;
  t.spawn = {{"umbrella", {{-0.25, -0.20, -0.30}, {-0.05, 0.20, -0.10}}}};
  return t;
}

TaskSpec TaskSpec::defaults(TaskName name) {
  return name == TaskName::PushButton ? push_button() : lift_object();
}

namespace {

using ojson = nlohmann::ordered_json;

Vec3 vec_from_json(const ojson& j, const std::string& key) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(key, "expected [x, y, z]");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw ConfigError(key, "expected numeric components");
    v[i] = j[i].get<double>();
  }
  if (!v.finite()) throw ConfigError(key, "components must be finite");
  return v;
}

Box box_from_json(const ojson& j, const std::string& key) {
  if (!j.is_object()) throw ConfigError(key, "expected {min, max}");
  for (const auto& [k, _] : j.items())
    if (k != "min" && k != "max") throw ConfigError(key + "." + k, "unknown key");
  if (!j.contains("min") || !j.contains("max")) throw ConfigError(key, "requires min and max");
  return {vec_from_json(j["min"], key + ".min"), vec_from_json(j["max"], key + ".max")};
}

ojson vec_to_json(Vec3 v) { return ojson::array({v.x, v.y, v.z}); }

template <typename T>
T number(const ojson& j, const std::string& key) {
  if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) throw ConfigError(key, "expected an integer");
  } else {
    if (!j.is_number()) throw ConfigError(key, "expected a number");
  }
  return j.get<T>();
}

}  // namespace

TaskSpec TaskSpec::from_json(const ojson& j) {
  if (!j.is_object()) throw ConfigError("task", "expected an object");
  if (!j.contains("name") || !j["name"].is_string())
    throw ConfigError("task.name", "required string");
  TaskSpec t = defaults(parse_task_name(j["name"].get<std::string>()));
  for (const auto& [k, v] : j.items()) {
    const std::string key = "task." + k;
    if (k == "name") continue;
    if (k == "goal_reward") t.goal_reward = number<double>(v, key);
    else if (k == "max_episode_length") t.max_episode_length = number<int>(v, key);
    else if (k == "delta") t.delta = number<double>(v, key);
    else if (k == "grasp_radius") t.grasp_radius = number<double>(v, key);
    else if (k == "press_radius") t.press_radius = number<double>(v, key);
    else if (k == "lift_threshold") t.lift_threshold = number<double>(v, key);
    else if (k == "sensing_radius") t.sensing_radius = number<double>(v, key);
    else if (k == "workspace") t.workspace = box_from_json(v, key);
    else if (k == "spawn") {
      if (!v.is_object() || v.empty()) throw ConfigError(key, "expected a non-empty object");
      t.spawn.clear();
      for (const auto& [id, box] : v.items())
        t.spawn.push_back({id, box_from_json(box, key + "." + id)});
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
  t.validate();
  return t;
}

ojson TaskSpec::to_json() const {
  ojson j;
  j["name"] = std::string(task_name_string(name));
  j["goal_reward"] = goal_reward;
  j["max_episode_length"] = max_episode_length;
  j["delta"] = delta;
  j["grasp_radius"] = grasp_radius;
  j["press_radius"] = press_radius;
  j["lift_threshold"] = lift_threshold;
  j["sensing_radius"] = sensing_radius;
  j["workspace"] = {{"min", vec_to_json(workspace.min)}, {"max", vec_to_json(workspace.max)}};
  ojson spawn_j = ojson::object();
  for (const auto& s : spawn)
    spawn_j[s.object_id] = {{"min", vec_to_json(s.box.min)}, {"max", vec_to_json(s.box.max)}};
  j["spawn"] = spawn_j;
  return j;
}

const SceneObject* task_target(const Observation& obs, const TaskSpec& task) {
  if (obs.objects.empty()) return nullptr;
  if (task.name == TaskName::LiftObject) return &obs.objects.front();
  const SceneObject* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& o : obs.objects) {
    const double d = distance(obs.gripper.position, o.position);
    if (d < best_d) {
      best_d = d;
      best = &o;
    }
  }
  return best;
}

Vec3 motion_target(const Observation& obs, const TaskSpec& task) {
  const SceneObject* target = task_target(obs, task);
  if (target == nullptr) return obs.gripper.position;
  if (task.name == TaskName::LiftObject && obs.gripper.grasped == target->id)
    return {target->position.x, target->position.y,
            target->rest_z + task.lift_threshold + 0.5 * task.delta};
  return target->position;
}

namespace {

std::optional<std::string> nearest_within(const Observation& obs, double radius,
                                          bool graspable_only) {
  std::optional<std::string> id;
  double best = radius;
  for (const auto& o : obs.objects) {
    if (graspable_only && !o.graspable) continue;
    const double d = distance(obs.gripper.position, o.position);
    if (d < best) {
      best = d;
      id = o.id;
    }
  }
  return id;
}

SceneObject* find_mut(Observation& obs, std::string_view id) {
  for (auto& o : obs.objects)
    if (o.id == id) return &o;
  return nullptr;
}

}  // namespace

Observation reset(const TaskSpec& task, std::uint64_t seed) {
  Rng rng(seed);
  Observation obs;
  obs.gripper.position = task.home();
  obs.gripper.open = true;
  for (const auto& s : task.spawn) {
    SceneObject o;
    o.id = s.object_id;
    o.position = {uniform(rng, s.box.min.x, s.box.max.x), uniform(rng, s.box.min.y, s.box.max.y),
                  uniform(rng, s.box.min.z, s.box.max.z)};
    o.rest_z = o.position.z;
    if (task.name == TaskName::LiftObject) {
      o.graspable = true;
      o.goal_zone = Box{{task.workspace.min.x, task.workspace.min.y, o.rest_z + task.lift_threshold},
                        task.workspace.max};
    }
    obs.objects.push_back(std::move(o));
  }
  obs.gripper.detected = nearest_within(obs, task.sensing_radius, false);
  return obs;
}

bool goal_reached(const Observation& state, const TaskSpec& task) {
  if (task.name == TaskName::PushButton) {
    for (const auto& o : state.objects)
      if (distance(state.gripper.position, o.position) < task.press_radius) return true;
    return false;
  }
  const SceneObject* target = task_target(state, task);
  return target != nullptr && state.gripper.grasped == target->id &&
         target->position.z > target->rest_z + task.lift_threshold;
}

bool is_terminal(const Observation& state, const TaskSpec& task) {
  return state.step_index >= task.max_episode_length || goal_reached(state, task);
}

Transition step(const Observation& state, Action action, const TaskSpec& task) {
  if (is_terminal(state, task))
    throw ContractViolation("step() called on a terminal state (step_index " +
                            std::to_string(state.step_index) + ")");
  Transition t;
  t.before = state;
  t.action = action;
  Observation next = state;
  next.step_index = state.step_index + 1;
  auto& g = next.gripper;

  if (const auto axis = movement_axis(action)) {
    Vec3 p = g.position;
    p[axis->first] += axis->second * task.delta;
    g.position = task.workspace.clamp(p);
  } else if (action == Action::CloseGripper) {
    g.open = false;
    if (!g.grasped) g.grasped = nearest_within(next, task.grasp_radius, true);
  } else {
    g.open = true;
    if (g.grasped) {
      if (auto* o = find_mut(next, *g.grasped)) o->position.z = o->rest_z;
      g.grasped.reset();
    }
  }
  if (g.grasped) {
    if (auto* o = find_mut(next, *g.grasped)) o->position = g.position;
  }
  g.detected = g.grasped ? g.grasped : nearest_within(next, task.sensing_radius, false);

  const bool goal = goal_reached(next, task);
  t.r_env = goal ? task.goal_reward : 0.0;
  t.terminal = goal || next.step_index >= task.max_episode_length;
  t.after = std::move(next);
  return t;
}

}  // namespace scaffold
