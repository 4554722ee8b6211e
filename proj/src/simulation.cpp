#include "omninav/simulation.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>

#include "omninav/error.hpp"

namespace omninav {

SimConfig SimConfig::from_config(const Config& config) {
  return from_config(config, SimConfig());
}

SimConfig SimConfig::from_config(const Config& config, SimConfig base) {
  SimConfig c = base;
  c.reflex = ReflexConfig::from_config(config, base.reflex);
  c.rays_per_slice = config.get_int("sim.rays_per_slice", c.rays_per_slice);
  c.scan_rays = config.get_int("sim.scan_rays", c.scan_rays);
  c.scan_range = config.get_double("sim.scan_range", c.scan_range);
  c.footprint = config.get_double("sim.footprint", c.footprint);
  return c;
}

Simulation::Simulation(WorldModel world, Pose start, SimConfig config, Scorer* clip, Scorer* detic)
    : world_(std::move(world)),
      config_(config),
      slices_(make_slices(2000, config.reflex.n_split, config.reflex.overlap)),
      clip_(clip),
      detic_(detic) {
  config_.reflex.validate();
  robot_.pose = start;
  robot_.footprint = config.footprint;
}

void Simulation::reset_pose(const Pose& pose) {
  robot_.pose = pose;
  robot_.commanded = {};
  reflex_state_ = {};
}

void Simulation::reset(const Pose& pose) {
  reset_pose(pose);
  t_ = 0.0;
  ticks_ = 0;
}

TickRecord Simulation::tick(const std::string& instruction) {
  const VisibilitySummary vis = visibility(world_, robot_, slices_, config_.rays_per_slice);
  const RangeScan scan = ray_scan(world_, robot_, config_.scan_rays, config_.scan_range);
  const SliceObservation obs{&slices_, &vis, nullptr};
  ReflexOutput out = reflex_step(instruction, obs, &scan, clip_, detic_, config_.reflex, reflex_state_);

  const StepResult step = step_kinematics(world_, robot_, out.velocity, config_.reflex.tick_s);
  robot_ = step.state;
  ++ticks_;
  // Integer tick count keeps the clock free of accumulated rounding.
  t_ = static_cast<double>(ticks_) * config_.reflex.tick_s;

  TickRecord rec;
  rec.t = t_;
  rec.pose = robot_.pose;
  rec.velocity = out.velocity;
  rec.direction = std::move(out.direction);
  rec.e = std::move(out.fused.e);
  rec.clip = std::move(out.clip);
  rec.detic = std::move(out.detic);
  rec.collision = step.collision;
  rec.instruction = instruction;
  return rec;
}

void write_episode_csv(std::ostream& out, const std::vector<TickRecord>& records, int n_split) {
  out << "t,x,y,yaw,linear,rotate,theta,gated";
  for (int i = 1; i <= n_split; ++i) out << ",e_" << i;
  out << '\n';
  char buf[64];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%.3f", r.t);
    out << buf;
    for (double v : {r.pose.x, r.pose.y, r.pose.yaw, r.velocity.linear, r.velocity.rotate,
                     r.direction.theta}) {
      std::snprintf(buf, sizeof buf, ",%.6f", v);
      out << buf;
    }
    out << ',' << (r.velocity.gated ? 1 : 0);
    for (double v : r.e) {
      std::snprintf(buf, sizeof buf, ",%.6f", v);
      out << buf;
    }
    out << '\n';
  }
}

std::string episode_csv(const std::vector<TickRecord>& records, int n_split) {
  std::ostringstream out;
  write_episode_csv(out, records, n_split);
  return out.str();
}

}  // namespace omninav
