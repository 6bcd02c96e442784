#pragma once

// 2-D n-body simulator driven by a multiplex interaction network. Each layer
// carries one interaction type; unit masses; velocity Verlet integration.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mxiso/multiplex.hpp"

namespace mxiso {

enum class Interaction { ideal_spring, finite_spring, charge };

std::string_view to_string(Interaction interaction);
/// Accepts spring/ideal-spring, fspring/finite-spring, charge.
Interaction parse_interaction(std::string_view text);
GraphKind kind_of(Interaction interaction);

struct SimConfig {
  double dt_internal = 0.001;
  int subsample = 100;
  int n_frames = 70;
  double spring_k = 0.1;
  double fspring_k = 0.1;
  double fspring_len = 1.0;
  double charge_strength = 1.0;
  double softening = 0.1;
  bool box_enabled = false;
  double box_half_width = 5.0;

  /// Throws ValidationError on non-positive values.
  void validate() const;
  double frame_interval() const { return dt_internal * subsample; }
};

struct Vec2 {
  double x = 0;
  double y = 0;

  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

double norm(Vec2 v);

struct InitialConditions {
  std::vector<Vec2> positions;
  std::vector<Vec2> velocities;
  std::uint64_t seed = 0;

  std::size_t size() const { return positions.size(); }
};

/// Positions i.i.d. N(0, pos_std^2); velocities Gaussian then rescaled so
/// every particle's speed is vel_norm.
InitialConditions sample_initial_conditions(int n, std::uint64_t seed, double pos_std = 0.5,
                                            double vel_norm = 0.5);

/// Frames of (position, velocity), laid out [frame][particle][dim][channel]
/// with channel 0 = position, 1 = velocity.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(int n_frames, int n_particles);

  int frames() const { return frames_; }
  int particles() const { return particles_; }

  Vec2 position(int frame, int particle) const;
  Vec2 velocity(int frame, int particle) const;
  void set(int frame, int particle, Vec2 position, Vec2 velocity);

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;

 private:
  std::size_t offset(int frame, int particle) const;
  int frames_ = 0;
  int particles_ = 0;
  std::vector<double> data_;
};

/// Net force on every particle: the sum over layers of the layer's force law
/// applied along its edges.
std::vector<Vec2> forces(std::span<const Vec2> positions, const MultiplexNetwork& network,
                         std::span<const Interaction> interactions, const SimConfig& config);

/// Potential plus kinetic energy, consistent with `forces` (including the
/// constant-force region inside the softening radius).
double total_energy(std::span<const Vec2> positions, std::span<const Vec2> velocities,
                    const MultiplexNetwork& network, std::span<const Interaction> interactions,
                    const SimConfig& config);

/// Frame 0 is the initial state; frame f is the state after f * subsample steps.
/// Throws SimulationError as soon as any value becomes non-finite.
Trajectory simulate(const MultiplexNetwork& network, std::span<const Interaction> interactions,
                    const InitialConditions& init, const SimConfig& config);

/// `frame,particle,px,py,vx,vy`
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace mxiso
