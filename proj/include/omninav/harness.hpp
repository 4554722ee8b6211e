#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "omninav/simulation.hpp"

namespace omninav {

struct ScheduleEntry {
  double t = 0.0;
  std::string text;
};

/// A point or region the robot is expected to approach, used for reporting.
struct Waypoint {
  std::string label;
  std::optional<Vec2> point;
  std::string region;  // name of a world region, alternative to `point`
  std::string entity;  // label of a world entity; distance is measured to its outline
  double radius = 0.5;
};

struct Scenario {
  std::string name;
  std::string group;  // instruction label used to group comparison rows
  std::filesystem::path world_path;
  WorldModel world;
  Pose origin;
  Vec2 target{0.0, 0.0};
  std::string target_label;
  std::vector<ScheduleEntry> schedule;
  int trials = 1;
  std::uint64_t seed = 0;
  double timeout_s = 30.0;
  bool stop_on_collision = true;
  double jitter_xy = 0.05;
  double jitter_yaw = 0.05;
  SimConfig sim;
  std::vector<Waypoint> waypoints;

  Strategy strategy() const { return sim.reflex.strategy; }
  /// Instruction in force at time t (the latest entry with entry.t <= t).
  const std::string* instruction_at(double t) const;
  void validate() const;
};

/// Scenario file: JSON with world, origin, target, schedule, strategy, trials,
/// seed and optional timeout_s, stop_on_collision, jitter and config overrides.
Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir);
Scenario load_scenario(const std::filesystem::path& path);

/// Suite file: one world and origin, a list of instructions with targets and a
/// list of strategies; expands to one scenario per (instruction, strategy).
std::vector<Scenario> load_suite(const std::filesystem::path& path);
std::vector<Scenario> parse_suite(const std::string& text, const std::filesystem::path& base_dir);

enum class Termination { kCollision, kTimeout, kOperator };
std::string to_string(Termination t);

struct TrialResult {
  std::string scenario;
  std::string group;
  Strategy strategy = Strategy::kAll;
  int trial = 0;
  Pose origin;
  Pose final_pose;
  Vec2 target{0.0, 0.0};
  std::vector<TickRecord> ticks;
  double final_error = 0.0;
  Termination termination = Termination::kTimeout;
  double duration = 0.0;
};

struct ScorerPair {
  Scorer* clip = nullptr;
  Scorer* detic = nullptr;
};

struct TrialOptions {
  ScorerPair scorers;  // defaults to the built-in oracles of the scenario world
  std::function<bool(const TickRecord&)> operator_stop;
};

/// Start pose for a trial: origin plus seeded uniform jitter.
Pose jittered_origin(const Scenario& s, int trial);

TrialResult run_trial(const Scenario& scenario, int trial, const TrialOptions& options = {});

struct WaypointVisit {
  std::string label;
  std::optional<double> t;  // first time within radius, after the previous waypoint was reached
  double closest = 0.0;     // closest approach while this waypoint was the current goal
};

/// Checks the scenario waypoints against a trial trajectory, strictly in order.
std::vector<WaypointVisit> visit_waypoints(const Scenario& scenario, const TrialResult& trial);

struct SummaryRow {
  std::string group;
  Strategy strategy = Strategy::kAll;
  int trials = 0;
  double mean_error = 0.0;
  double variance = 0.0;  // population variance
  std::vector<double> errors;
};

struct ComparisonResult {
  std::vector<TrialResult> trials;
  std::vector<SummaryRow> summary;  // sorted by (group, strategy)
};

ComparisonResult run_comparison(const std::vector<Scenario>& scenarios, int workers = 0);
std::vector<SummaryRow> summarize(const std::vector<TrialResult>& trials);

std::string summary_csv(const std::vector<SummaryRow>& rows);
std::string trajectory_svg(const WorldModel& world, const std::vector<const TrialResult*>& trials,
                           const std::vector<Vec2>& targets);

/// Writes `<scenario>_trial<k>.csv`, `<scenario>.svg` and `summary.csv`.
/// Returns the written paths. Throws IoError.
std::vector<std::filesystem::path> export_artifacts(const std::vector<Scenario>& scenarios,
                                                    const ComparisonResult& results,
                                                    const std::filesystem::path& out_dir);

}  // namespace omninav
