#include "scaffold/scene.hpp"

#include <cmath>
#include <cstdio>

namespace scaffold {

std::string format_meters(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s(buf);
  if (s == "-0.000") s = "0.000";
  return s;
}

std::string format_vec(Vec3 v) {
  return "(" + format_meters(v.x) + ", " + format_meters(v.y) + ", " + format_meters(v.z) + ")";
}

namespace {

constexpr const char* kAxisNames[3] = {"x", "y", "z"};

std::string gripper_clause(const GripperState& g) {
  std::string s = "gripper at " + format_vec(g.position);
  s += g.open ? ", gripper open" : ", gripper closed";
  s += g.detected ? ", object detected: " + *g.detected : std::string(", no object detected");
  s += g.grasped ? ", object grasped: " + *g.grasped : std::string(", no object grasped");
  return s;
}

}  // namespace

std::string describe_task(const TaskSpec& task) {
  if (task.name == TaskName::PushButton)
    return "A robot arm with a parallel gripper must push a button on the table. The task is "
           "complete when the gripper touches the button (within " +
           format_meters(task.press_radius) + " m of its center).";
  return "A robot arm with a parallel gripper must take an umbrella out of its stand. It has to "
         "approach the umbrella, close the gripper around it, and lift it at least " +
         format_meters(task.lift_threshold) + " m above its resting height.";
}

SceneDescription describe_transition(const Transition& t, const TaskSpec& task) {
  SceneDescription d;
  auto fact = [&d](std::string subject, std::string relation, std::string value) {
    d.facts.push_back({std::move(subject), std::move(relation), std::move(value)});
  };
  const std::string task_name(task_name_string(task.name));
  const SceneObject* target = task_target(t.before, task);
  const std::string target_id = target ? target->id : "none";
  const auto& gb = t.before.gripper;
  const auto& ga = t.after.gripper;
  const std::string step = std::to_string(t.after.step_index);
  const std::string max_steps = std::to_string(task.max_episode_length);

  fact("task", "name", task_name);
  fact("task", "target", target_id);
  fact("episode", "step", step);
  fact("episode", "max_steps", max_steps);
  fact("gripper", "action", std::string(action_name(t.action)));
  fact("gripper", "position_before", format_vec(gb.position));
  fact("gripper", "position_after", format_vec(ga.position));
  fact("gripper", "open_before", gb.open ? "open" : "closed");
  fact("gripper", "open", ga.open ? "open" : "closed");
  fact("gripper", "detected_before", gb.detected.value_or("none"));
  fact("gripper", "detected", ga.detected.value_or("none"));
  fact("gripper", "grasped_before", gb.grasped.value_or("none"));
  fact("gripper", "grasped", ga.grasped.value_or("none"));

  std::string text = "Task: " + task_name + ". Target object: " + target_id + ".\n";
  text += "Step " + step + " of at most " + max_steps + ".\n";
  text += "Action taken: " + std::string(action_name(t.action)) + ".\n";
  text += "Before: " + gripper_clause(gb) + ".\n";
  text += "After: " + gripper_clause(ga) + ".\n";

  std::string movement;
  const Vec3 delta = ga.position - gb.position;
  for (int axis = 0; axis < 3; ++axis) {
    const std::string amount = format_meters(delta[axis]);
    if (amount == "0.000") continue;
    fact("gripper", std::string("displacement_") + kAxisNames[axis], amount);
    if (!movement.empty()) movement += ", ";
    movement += std::string("movement along ") + kAxisNames[axis] + " by " + amount;
  }
  text += movement.empty() ? "Movement: the gripper did not move.\n" : "Movement: " + movement + ".\n";

  text += "Objects:";
  for (std::size_t i = 0; i < t.after.objects.size(); ++i) {
    const auto& o = t.after.objects[i];
    fact(o.id, "position", format_vec(o.position));
    text += (i == 0 ? " " : "; ") + o.id + " at " + format_vec(o.position);
  }
  text += ".\n";

  std::string status;
  if (goal_reached(t.after, task)) status = "the episode ended with the goal reached";
  else if (t.terminal) status = "the episode ended at the step limit";
  else status = "the episode continues";
  fact("episode", "status", status);
  text += "Episode status: " + status + ".";
  d.text = std::move(text);
  return d;
}

std::optional<Vec3> resolve_position(std::string_view id, const Observation& state) {
  if (id == "gripper") return state.gripper.position;
  if (const auto* o = state.find(id)) return o->position;
  return std::nullopt;
}

double distance(const DistanceQuery& q, const Observation& state) {
  const auto a = resolve_position(q.a, state);
  if (!a) throw QueryError("unknown object '" + q.a + "'");
  const auto b = resolve_position(q.b, state);
  if (!b) throw QueryError("unknown object '" + q.b + "'");
  return distance(*a, *b);
}

}  // namespace scaffold
