#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scaffold/env.hpp"
#include "scaffold/rng.hpp"

namespace scaffold {

// Quantized target-minus-gripper offset plus the two gripper flags.
struct StateKey {
  std::array<int, 3> bins{};
  bool open = true;
  bool grasped = false;

  friend bool operator==(const StateKey&, const StateKey&) = default;
};

// Per-axis offset window [-offset_range, offset_range] split into `bins`
// buckets; offsets beyond the window land in the edge buckets.
struct Discretization {
  int bins = 12;
  double offset_range = 0.3;

  friend bool operator==(const Discretization&, const Discretization&) = default;
};

struct AgentConfig {
  double learning_rate = 0.1;
  double discount = 0.99;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  // Fraction of total training steps over which epsilon decays linearly.
  double epsilon_decay_fraction = 0.5;
  Discretization grid;

  void validate() const;
  static AgentConfig from_json(const nlohmann::ordered_json& j);
  nlohmann::ordered_json to_json() const;

  double epsilon_at(long step, long total_steps) const;
};

// Buckets motion_target - gripper per axis; zero offset falls at index bins/2.
StateKey discretize(const Observation& obs, const TaskSpec& task, const Discretization& grid = {});

// Dense table over B^3 x 2 x 2 states and the 8 actions, zero-initialized.
class QTable {
 public:
  explicit QTable(Discretization grid = {});

  const Discretization& grid() const { return grid_; }
  int bins() const { return grid_.bins; }
  std::size_t state_count() const { return state_count_; }
  std::size_t index(const StateKey& s) const;

  double get(const StateKey& s, Action a) const { return values_[slot(index(s), a)]; }
  void set(const StateKey& s, Action a, double v) { values_[slot(index(s), a)] = v; }
  double get(std::size_t state, Action a) const { return values_[slot(state, a)]; }
  void set(std::size_t state, Action a, double v) { values_[slot(state, a)] = v; }

  double max_value(const StateKey& s) const;
  // First action in kAllActions order among the maximizers.
  Action greedy(const StateKey& s) const;
  Action greedy(std::size_t state) const;

  void scale(double c);
  double max_abs() const;

  const std::vector<double>& raw() const { return values_; }

  friend bool operator==(const QTable&, const QTable&) = default;

  // Text artifact: header line, grid lines, then "state action value" triples
  // for nonzero entries with values in exact hexadecimal float notation.
  void save(std::ostream& out) const;
  void save(const std::string& path) const;
  static QTable load(std::istream& in);
  static QTable load(const std::string& path);

  static constexpr const char* kHeader = "scaffold-qtable v1";

 private:
  static std::size_t slot(std::size_t state, Action a) {
    return state * kActionCount + static_cast<std::size_t>(a);
  }

  Discretization grid_;
  std::size_t state_count_;
  std::vector<double> values_;
};

Action select_action(const QTable& q, const StateKey& s, double epsilon, Rng& rng);

// One-step Q-learning backup.
void update(QTable& q, const StateKey& s, Action a, double r_total, const StateKey& next,
            bool terminal, const AgentConfig& cfg);

}  // namespace scaffold
