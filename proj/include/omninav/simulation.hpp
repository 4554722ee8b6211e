#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "omninav/reflex.hpp"
#include "omninav/sim.hpp"

namespace omninav {

struct SimConfig {
  ReflexConfig reflex;
  int rays_per_slice = kDefaultRaysPerSlice;
  int scan_rays = kDefaultScanRays;
  double scan_range = 10.0;
  double footprint = 0.6;

  /// Adds sim.rays_per_slice, sim.scan_rays, sim.scan_range, sim.footprint.
  static SimConfig from_config(const Config& config);
  static SimConfig from_config(const Config& config, SimConfig base);
};

/// One control tick. The pose is the state reached at time `t`, after the
/// logged command has been applied for one tick.
struct TickRecord {
  double t = 0.0;
  Pose pose;
  VelocityCommand velocity;
  DirectionCommand direction;
  std::vector<double> e;
  std::optional<ScoreProfile> clip;
  std::optional<ScoreProfile> detic;
  bool collision = false;
  std::string instruction;
};

/// Built-in oracle scorers for one world.
struct OracleScorers {
  explicit OracleScorers(const WorldModel& world) : clip(world), detic() {}
  RegionOracle clip;
  ObjectOracle detic;
};

/// The simulated robot plus its reflex controller. Single owner; not thread safe.
class Simulation {
 public:
  Simulation(WorldModel world, Pose start, SimConfig config, Scorer* clip, Scorer* detic);

  TickRecord tick(const std::string& instruction);

  double time() const noexcept { return t_; }
  const RobotState& robot() const noexcept { return robot_; }
  const WorldModel& world() const noexcept { return world_; }
  const SliceSet& slices() const noexcept { return slices_; }
  const SimConfig& config() const noexcept { return config_; }

  void set_strategy(Strategy s) { config_.reflex.strategy = s; }
  /// Moves the robot and clears controller memory; the clock keeps running.
  void reset_pose(const Pose& pose);
  void reset(const Pose& pose);  // also rewinds the clock to 0

 private:
  WorldModel world_;
  SimConfig config_;
  SliceSet slices_;
  RobotState robot_;
  ReflexState reflex_state_;
  Scorer* clip_;
  Scorer* detic_;
  double t_ = 0.0;
  long ticks_ = 0;
};

/// `t,x,y,yaw,linear,rotate,theta,gated,e_1..e_N` with one row per tick.
void write_episode_csv(std::ostream& out, const std::vector<TickRecord>& records, int n_split);
std::string episode_csv(const std::vector<TickRecord>& records, int n_split);

}  // namespace omninav
