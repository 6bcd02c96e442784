#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "mxiso/dynamics.hpp"
#include "mxiso/errors.hpp"

using namespace mxiso;

namespace {

using Edges = std::vector<std::pair<int, int>>;

MultiplexNetwork spring_charge(int n, const Edges& springs, std::uint32_t charged) {
  return MultiplexNetwork({LabeledGraph::from_edges(n, springs), LabeledGraph::collective(n, charged)});
}

const std::vector<Interaction> kSC = {Interaction::ideal_spring, Interaction::charge};

Vec2 momentum(const Trajectory& t, int frame) {
  Vec2 p;
  for (int i = 0; i < t.particles(); ++i) p += t.velocity(frame, i);
  return p;
}

double energy_at(const Trajectory& t, int frame, const MultiplexNetwork& net, std::span<const Interaction> inter,
                 const SimConfig& c) {
  std::vector<Vec2> x, v;
  for (int i = 0; i < t.particles(); ++i) {
    x.push_back(t.position(frame, i));
    v.push_back(t.velocity(frame, i));
  }
  return total_energy(x, v, net, inter, c);
}

}  // namespace

TEST_CASE("initial conditions") {
  const auto a = sample_initial_conditions(5, 9);
  const auto b = sample_initial_conditions(5, 9);
  CHECK(a.positions == b.positions);
  CHECK(a.velocities == b.velocities);
  for (auto v : a.velocities) CHECK(norm(v) == doctest::Approx(0.5).epsilon(1e-12));
  for (auto v : sample_initial_conditions(5, 9, 0.5, 0.0).velocities) CHECK(v == Vec2{});

  double sum = 0, sq = 0;
  std::size_t count = 0;
  for (std::uint64_t s = 0; s < 100000; ++s) {
    for (auto p : sample_initial_conditions(5, s, 0.5).positions) {
      for (double c : {p.x, p.y}) {
        sum += c;
        sq += c * c;
        ++count;
      }
    }
  }
  const double mean = sum / count;
  const double sd = std::sqrt(sq / count - mean * mean);
  CHECK(std::abs(sd - 0.5) < 0.005);
}

TEST_CASE("force laws") {
  SimConfig c;
  const auto empty = spring_charge(3, {}, 0);
  for (auto f : forces(std::vector<Vec2>{{0, 0}, {1, 0}, {0, 2}}, empty, kSC, c)) CHECK(f == Vec2{});

  const auto spring = spring_charge(2, {{0, 1}}, 0);
  const double d = 1.7;
  const auto f = forces(std::vector<Vec2>{{0, 0}, {d, 0}}, spring, kSC, c);
  CHECK(f[0].x == doctest::Approx(c.spring_k * d));
  CHECK(f[1].x == doctest::Approx(-c.spring_k * d));
  CHECK(f[0].y == 0);

  // equilateral triangle of side s, all charged: net force sqrt(3) q / s^2 outward
  const double s = 1.3;
  const std::vector<Vec2> tri = {{0, 0}, {s, 0}, {s / 2, s * std::sqrt(3.0) / 2}};
  const Vec2 centre = {s / 2, s * std::sqrt(3.0) / 6};
  const auto fc = forces(tri, spring_charge(3, {}, 0b111), kSC, c);
  for (int i = 0; i < 3; ++i) {
    CHECK(norm(fc[i]) == doctest::Approx(std::sqrt(3.0) * c.charge_strength / (s * s)));
    const Vec2 out = tri[i] - centre;
    CHECK((fc[i].x * out.x + fc[i].y * out.y) / (norm(fc[i]) * norm(out)) == doctest::Approx(1.0));
  }
}

TEST_CASE("forces are minus the energy gradient") {
  SimConfig c;
  const std::vector<Interaction> all = {Interaction::ideal_spring, Interaction::charge, Interaction::finite_spring};
  const MultiplexNetwork net({LabeledGraph::from_edges(4, Edges{{0, 1}, {2, 3}}), LabeledGraph::collective(4, 0b1111),
                              LabeledGraph::from_edges(4, Edges{{0, 2}, {1, 3}})});
  // particles 0 and 3 sit inside the softening radius
  std::vector<Vec2> x = {{0, 0}, {1, 0.2}, {-0.4, 0.9}, {0.05, 0.03}};
  const std::vector<Vec2> v(4);
  const auto f = forces(x, net, all, c);
  const double h = 1e-6;
  for (int i = 0; i < 4; ++i) {
    for (int dim = 0; dim < 2; ++dim) {
      auto xp = x, xm = x;
      (dim ? xp[i].y : xp[i].x) += h;
      (dim ? xm[i].y : xm[i].x) -= h;
      const double grad = (total_energy(xp, v, net, all, c) - total_energy(xm, v, net, all, c)) / (2 * h);
      CHECK(-grad == doctest::Approx(dim ? f[i].y : f[i].x).epsilon(1e-5));
    }
  }
}

TEST_CASE("free particles move linearly") {
  SimConfig c;
  c.n_frames = 30;
  const auto net = spring_charge(4, {}, 0);
  const auto init = sample_initial_conditions(4, 3);
  const auto t = simulate(net, kSC, init, c);
  for (int f = 0; f < c.n_frames; ++f) {
    for (int i = 0; i < 4; ++i) {
      const double time = f * c.frame_interval();
      CHECK(t.position(f, i).x == doctest::Approx(init.positions[i].x + init.velocities[i].x * time).epsilon(1e-12));
      CHECK(t.position(f, i).y == doctest::Approx(init.positions[i].y + init.velocities[i].y * time).epsilon(1e-12));
      CHECK(t.velocity(f, i) == init.velocities[i]);
    }
  }
}

TEST_CASE("two-body spring period") {
  SimConfig c;
  c.subsample = 1;
  c.n_frames = 40000;
  const auto net = spring_charge(2, {{0, 1}}, 0);
  InitialConditions init{{{-0.5, 0}, {0.5, 0}}, {{0, 0}, {0, 0}}, 0};
  const auto t = simulate(net, kSC, init, c);
  std::vector<double> crossings;
  for (int f = 1; f < c.n_frames; ++f) {
    const double a = t.position(f - 1, 1).x - t.position(f - 1, 0).x;
    const double b = t.position(f, 1).x - t.position(f, 0).x;
    if ((a > 0) != (b > 0)) crossings.push_back((f - 1 + a / (a - b)) * c.dt_internal);
  }
  REQUIRE(crossings.size() >= 3);
  const double measured = crossings[2] - crossings[0];
  const double expected = 2 * std::numbers::pi * std::sqrt(1.0 / (2 * c.spring_k));
  CHECK(std::abs(measured - expected) / expected < 0.005);
}

TEST_CASE("conservation laws") {
  SimConfig c;
  const std::vector<Interaction> all = {Interaction::ideal_spring, Interaction::charge, Interaction::finite_spring};
  const MultiplexNetwork net({LabeledGraph::from_edges(5, Edges{{0, 1}, {1, 2}, {3, 4}}),
                              LabeledGraph::collective(5, 0b10110),
                              LabeledGraph::from_edges(5, Edges{{0, 4}, {2, 3}})});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto init = sample_initial_conditions(5, seed);
    const auto t = simulate(net, all, init, c);
    const Vec2 p0 = momentum(t, 0);
    for (int f = 1; f < c.n_frames; ++f) {
      const Vec2 dp = momentum(t, f) - p0;
      CHECK(norm(dp) / (f * c.subsample) < 1e-10);
    }
  }

  // springs only
  const std::vector<Interaction> springs = {Interaction::ideal_spring, Interaction::finite_spring};
  const MultiplexNetwork sn({LabeledGraph::from_edges(5, Edges{{0, 1}, {1, 2}, {2, 3}, {3, 4}}),
                             LabeledGraph::from_edges(5, Edges{{0, 2}, {1, 4}})});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto t = simulate(sn, springs, sample_initial_conditions(5, seed), c);
    const double e0 = energy_at(t, 0, sn, springs, c);
    double worst = 0;
    for (int f = 0; f < c.n_frames; ++f) worst = std::max(worst, std::abs(energy_at(t, f, sn, springs, c) - e0) / e0);
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("trajectories are equivariant under relabeling") {
  SimConfig c;
  std::mt19937_64 rng(8);
  const auto net = spring_charge(5, {{0, 1}, {1, 2}, {2, 4}}, 0b01011);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<int> m = {0, 1, 2, 3, 4};
    std::shuffle(m.begin(), m.end(), rng);
    const Permutation p(m);
    const auto init = sample_initial_conditions(5, trial);
    InitialConditions moved = init;
    for (int i = 0; i < 5; ++i) {
      moved.positions[p[i]] = init.positions[i];
      moved.velocities[p[i]] = init.velocities[i];
    }
    const auto a = simulate(net, kSC, init, c);
    const auto b = simulate(net.relabeled(p), kSC, moved, c);
    double worst = 0;
    for (int f = 0; f < c.n_frames; ++f) {
      for (int i = 0; i < 5; ++i) worst = std::max(worst, norm(a.position(f, i) - b.position(f, p[i])));
    }
    CHECK(worst < 1e-9);
    CHECK(simulate(net, kSC, init, c) == a);
  }
}

TEST_CASE("box reflection keeps particles inside") {
  SimConfig c;
  c.box_enabled = true;
  c.box_half_width = 1.0;
  const auto net = spring_charge(3, {}, 0b111);
  const auto t = simulate(net, kSC, sample_initial_conditions(3, 1, 0.3, 2.0), c);
  for (int f = 0; f < c.n_frames; ++f) {
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(t.position(f, i).x) <= 1.0);
      CHECK(std::abs(t.position(f, i).y) <= 1.0);
    }
  }
}

TEST_CASE("validation and failure modes") {
  SimConfig c;
  c.dt_internal = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  SimConfig wild;
  wild.spring_k = 1e6;
  wild.dt_internal = 1;
  wild.n_frames = 1000;
  const auto net = spring_charge(2, {{0, 1}}, 0);
  CHECK_THROWS_AS(simulate(net, kSC, sample_initial_conditions(2, 0), wild), SimulationError);
  const std::vector<Interaction> wrong = {Interaction::charge, Interaction::charge};
  CHECK_THROWS_AS(simulate(net, wrong, sample_initial_conditions(2, 0), SimConfig{}), ValidationError);
  CHECK_THROWS_AS(simulate(net, kSC, sample_initial_conditions(3, 0), SimConfig{}), ValidationError);
  CHECK(parse_interaction("fspring") == Interaction::finite_spring);
  CHECK_THROWS_AS(parse_interaction("gravity"), ValidationError);
}

TEST_CASE("trajectory CSV") {
  SimConfig c;
  c.n_frames = 2;
  std::ostringstream out;
  write_trajectory_csv(out, simulate(spring_charge(2, {{0, 1}}, 0), kSC, sample_initial_conditions(2, 0), c));
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "frame,particle,px,py,vx,vy");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
}
