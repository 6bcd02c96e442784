#include "mxiso/dynamics.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include "mxiso/errors.hpp"

namespace mxiso {

std::string_view to_string(Interaction interaction) {
  switch (interaction) {
    case Interaction::ideal_spring:
      return "ideal_spring";
    case Interaction::finite_spring:
      return "finite_spring";
    case Interaction::charge:
      return "charge";
  }
  return "?";
}

Interaction parse_interaction(std::string_view text) {
  if (text == "spring" || text == "ideal-spring" || text == "ideal_spring") return Interaction::ideal_spring;
  if (text == "fspring" || text == "finite-spring" || text == "finite_spring") return Interaction::finite_spring;
  if (text == "charge") return Interaction::charge;
  throw ValidationError("unknown interaction '" + std::string(text) + "'");
}

GraphKind kind_of(Interaction interaction) {
  return interaction == Interaction::charge ? GraphKind::collective : GraphKind::pairwise;
}

void SimConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0) || !std::isfinite(v)) throw ValidationError(std::string(name) + " must be positive");
  };
  positive(dt_internal, "dt_internal");
  positive(spring_k, "spring_k");
  positive(fspring_k, "fspring_k");
  positive(fspring_len, "fspring_len");
  positive(charge_strength, "charge_strength");
  positive(softening, "softening");
  positive(box_half_width, "box_half_width");
  if (subsample < 1) throw ValidationError("subsample must be >= 1");
  if (n_frames < 1) throw ValidationError("n_frames must be >= 1");
}

double norm(Vec2 v) { return std::hypot(v.x, v.y); }

InitialConditions sample_initial_conditions(int n, std::uint64_t seed, double pos_std, double vel_norm) {
  if (n < 1) throw ValidationError("need at least one particle");
  if (!(pos_std >= 0) || !(vel_norm >= 0)) throw ValidationError("pos_std and vel_norm must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  InitialConditions init;
  init.seed = seed;
  for (int i = 0; i < n; ++i) {
    const double x = gauss(rng);
    const double y = gauss(rng);
    init.positions.push_back({pos_std * x, pos_std * y});
  }
  for (int i = 0; i < n; ++i) {
    Vec2 v{gauss(rng), gauss(rng)};
    const double len = norm(v);
    init.velocities.push_back(len > 0 ? (vel_norm / len) * v : Vec2{vel_norm, 0.0});
  }
  return init;
}

// ---------------------------------------------------------------------------
// Trajectory

Trajectory::Trajectory(int n_frames, int n_particles)
    : frames_(n_frames),
      particles_(n_particles),
      data_(static_cast<std::size_t>(n_frames) * static_cast<std::size_t>(n_particles) * 4, 0.0) {
  if (n_frames < 0 || n_particles < 0) throw ValidationError("negative trajectory shape");
}

std::size_t Trajectory::offset(int frame, int particle) const {
  if (frame < 0 || frame >= frames_ || particle < 0 || particle >= particles_) {
    throw ValidationError("trajectory index out of range");
  }
  return (static_cast<std::size_t>(frame) * static_cast<std::size_t>(particles_) +
          static_cast<std::size_t>(particle)) *
         4;
}

// Layout per particle: [dim x: pos, vel][dim y: pos, vel]
Vec2 Trajectory::position(int frame, int particle) const {
  const auto o = offset(frame, particle);
  return {data_[o + 0], data_[o + 2]};
}

Vec2 Trajectory::velocity(int frame, int particle) const {
  const auto o = offset(frame, particle);
  return {data_[o + 1], data_[o + 3]};
}

void Trajectory::set(int frame, int particle, Vec2 position, Vec2 velocity) {
  const auto o = offset(frame, particle);
  data_[o + 0] = position.x;
  data_[o + 1] = velocity.x;
  data_[o + 2] = position.y;
  data_[o + 3] = velocity.y;
}

// ---------------------------------------------------------------------------
// Physics

namespace {

void check_shapes(std::size_t particles, const MultiplexNetwork& network, std::span<const Interaction> interactions) {
  if (static_cast<std::size_t>(network.n) != particles) {
    throw ValidationError("network has " + std::to_string(network.n) + " vertices but state has " +
                          std::to_string(particles) + " particles");
  }
  if (interactions.size() != network.layers.size()) {
    throw ValidationError("one interaction type is needed per layer");
  }
  for (std::size_t l = 0; l < interactions.size(); ++l) {
    if (kind_of(interactions[l]) != network.layers[l].kind()) {
      throw ValidationError("interaction '" + std::string(to_string(interactions[l])) +
                            "' does not match the kind of layer " + std::to_string(l));
    }
  }
}

/// Force on i due to j for one interaction; the force on j is its negation.
Vec2 pair_force(Vec2 rij, Interaction interaction, const SimConfig& c) {
  switch (interaction) {
    case Interaction::ideal_spring:
      return -c.spring_k * rij;
    case Interaction::finite_spring: {
      const double d = norm(rij);
      if (d == 0) return {};
      return (-c.fspring_k * (d - c.fspring_len) / d) * rij;
    }
    case Interaction::charge: {
      const double d = norm(rij);
      if (d == 0) return {};
      const double clamped = std::max(d, c.softening);
      return (c.charge_strength / (clamped * clamped * d)) * rij;
    }
  }
  return {};
}

double pair_potential(Vec2 rij, Interaction interaction, const SimConfig& c) {
  const double d = norm(rij);
  switch (interaction) {
    case Interaction::ideal_spring:
      return 0.5 * c.spring_k * d * d;
    case Interaction::finite_spring:
      return 0.5 * c.fspring_k * (d - c.fspring_len) * (d - c.fspring_len);
    case Interaction::charge:
      if (d >= c.softening) return c.charge_strength / d;
      return c.charge_strength / c.softening + c.charge_strength * (c.softening - d) / (c.softening * c.softening);
  }
  return 0;
}

struct Bond {
  int i;
  int j;
  Interaction interaction;
};

std::vector<Bond> bonds_of(const MultiplexNetwork& network, std::span<const Interaction> interactions) {
  std::vector<Bond> bonds;
  for (std::size_t l = 0; l < network.layers.size(); ++l) {
    for (auto [i, j] : network.layers[l].edge_list()) bonds.push_back({i, j, interactions[l]});
  }
  return bonds;
}

void accumulate_forces(std::span<const Vec2> positions, std::span<const Bond> bonds, const SimConfig& config,
                       std::vector<Vec2>& out) {
  out.assign(positions.size(), Vec2{});
  for (const auto& b : bonds) {
    const Vec2 f = pair_force(positions[b.i] - positions[b.j], b.interaction, config);
    out[b.i] += f;
    out[b.j] -= f;
  }
}

void reflect(double& coord, double& vel, double wall) {
  if (coord > wall) {
    coord = 2 * wall - coord;
    vel = -std::abs(vel);
  } else if (coord < -wall) {
    coord = -2 * wall - coord;
    vel = std::abs(vel);
  }
}

bool finite(Vec2 v) { return std::isfinite(v.x) && std::isfinite(v.y); }

}  // namespace

std::vector<Vec2> forces(std::span<const Vec2> positions, const MultiplexNetwork& network,
                         std::span<const Interaction> interactions, const SimConfig& config) {
  check_shapes(positions.size(), network, interactions);
  std::vector<Vec2> out;
  accumulate_forces(positions, bonds_of(network, interactions), config, out);
  return out;
}

double total_energy(std::span<const Vec2> positions, std::span<const Vec2> velocities,
                    const MultiplexNetwork& network, std::span<const Interaction> interactions,
                    const SimConfig& config) {
  check_shapes(positions.size(), network, interactions);
  double energy = 0;
  for (auto v : velocities) energy += 0.5 * (v.x * v.x + v.y * v.y);
  for (std::size_t l = 0; l < network.layers.size(); ++l) {
    for (auto [i, j] : network.layers[l].edge_list()) {
      energy += pair_potential(positions[i] - positions[j], interactions[l], config);
    }
  }
  return energy;
}

Trajectory simulate(const MultiplexNetwork& network, std::span<const Interaction> interactions,
                    const InitialConditions& init, const SimConfig& config) {
  config.validate();
  if (init.velocities.size() != init.positions.size()) {
    throw ValidationError("initial positions and velocities differ in length");
  }
  check_shapes(init.positions.size(), network, interactions);
  const int n = network.n;

  std::vector<Vec2> x = init.positions;
  std::vector<Vec2> v = init.velocities;
  for (int i = 0; i < n; ++i) {
    if (!finite(x[i]) || !finite(v[i])) throw ValidationError("initial conditions contain non-finite values");
  }
  const auto bonds = bonds_of(network, interactions);
  std::vector<Vec2> a;
  accumulate_forces(x, bonds, config, a);

  Trajectory traj(config.n_frames, n);
  for (int i = 0; i < n; ++i) traj.set(0, i, x[i], v[i]);

  const double dt = config.dt_internal;
  const double half = 0.5 * dt;
  const double wall = config.box_half_width;
  for (int frame = 1; frame < config.n_frames; ++frame) {
    for (int step = 0; step < config.subsample; ++step) {
      for (int i = 0; i < n; ++i) {
        v[i] += half * a[i];
        x[i] += dt * v[i];
      }
      if (config.box_enabled) {
        for (int i = 0; i < n; ++i) {
          reflect(x[i].x, v[i].x, wall);
          reflect(x[i].y, v[i].y, wall);
        }
      }
      accumulate_forces(x, bonds, config, a);
      for (int i = 0; i < n; ++i) {
        v[i] += half * a[i];
        if (!finite(x[i]) || !finite(v[i])) {
          throw SimulationError("non-finite state for particle " + std::to_string(i) + " at frame " +
                                std::to_string(frame) + ", step " + std::to_string(step));
        }
      }
    }
    for (int i = 0; i < n; ++i) traj.set(frame, i, x[i], v[i]);
  }
  return traj;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "frame,particle,px,py,vx,vy\n";
  const auto old_precision = out.precision(17);
  for (int f = 0; f < trajectory.frames(); ++f) {
    for (int i = 0; i < trajectory.particles(); ++i) {
      const Vec2 p = trajectory.position(f, i);
      const Vec2 v = trajectory.velocity(f, i);
      out << f << ',' << i << ',' << p.x << ',' << p.y << ',' << v.x << ',' << v.y << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace mxiso
