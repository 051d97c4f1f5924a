#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "scaffold/agent.hpp"
#include "scaffold/env.hpp"
#include "scaffold/rng.hpp"

namespace scaffold::testing {

// Transitions visited by uniformly random rollouts, from fresh spawns.
inline std::vector<Transition> random_transitions(const TaskSpec& task, std::uint64_t seed,
                                                  int episodes) {
  std::vector<Transition> out;
  Rng rng(seed);
  for (int e = 0; e < episodes; ++e) {
    Observation obs = reset(task, rng());
    while (!is_terminal(obs, task)) {
      Transition t = step(obs, kAllActions[uniform_index(rng, kActionCount)], task);
      obs = t.after;
      out.push_back(std::move(t));
    }
  }
  return out;
}

// Observation with the gripper at `gripper` and a single object at `object`.
inline Observation scene_with(const TaskSpec& task, Vec3 gripper, Vec3 object) {
  Observation obs = reset(task, 0);
  obs.gripper.position = gripper;
  obs.objects.front().position = object;
  obs.objects.front().rest_z = object.z;
  return obs;
}

// Deterministic 2-state, 2-action MDP: next[s][a], reward[s][a].
struct TinyMdp {
  std::array<std::array<int, 2>, 2> next{{{0, 1}, {0, 1}}};
  std::array<std::array<double, 2>, 2> reward{{{1.0, 0.0}, {2.0, 0.5}}};
  double discount = 0.9;
};

// Q* by value iteration, iterated to a fixed point.
inline std::array<std::array<double, 2>, 2> value_iteration(const TinyMdp& m) {
  std::array<std::array<double, 2>, 2> q{};
  for (int it = 0; it < 100000; ++it) {
    auto n = q;
    double change = 0.0;
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        const int sp = m.next[s][a];
        n[s][a] = m.reward[s][a] + m.discount * std::max(q[sp][0], q[sp][1]);
        change = std::max(change, std::fabs(n[s][a] - q[s][a]));
      }
    q = n;
    if (change < 1e-13) break;
  }
  return q;
}

// Learns the MDP through scaffold::update on two table states with two actions,
// visiting (s, a) pairs uniformly at random.
inline std::array<std::array<double, 2>, 2> learn_tiny_mdp(const TinyMdp& m, long updates,
                                                           std::uint64_t seed) {
  AgentConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.discount = m.discount;
  QTable q;
  const StateKey keys[2] = {StateKey{{0, 0, 0}, true, false}, StateKey{{1, 0, 0}, true, false}};
  const Action acts[2] = {Action::PlusX, Action::MinusX};
  Rng rng(seed);
  for (long i = 0; i < updates; ++i) {
    const int s = static_cast<int>(uniform_index(rng, 2));
    const int a = static_cast<int>(uniform_index(rng, 2));
    update(q, keys[s], acts[a], m.reward[s][a], keys[m.next[s][a]], false, cfg);
  }
  std::array<std::array<double, 2>, 2> out{};
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) out[s][a] = q.get(keys[s], acts[a]);
  return out;
}

}  // namespace scaffold::testing
