#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <set>

#include "mxiso/dataset.hpp"
#include "mxiso/errors.hpp"
#include "mxiso/sampling.hpp"

using namespace mxiso;
namespace fs = std::filesystem;

namespace {

const IsoClassCatalog& catalog454() {
  static const IsoClassCatalog c =
      enumerate_multiplex(5, std::vector<GraphKind>{GraphKind::pairwise, GraphKind::collective});
  return c;
}

std::size_t split_size(const Dataset& d, int s) { return d.splits[s].samples.size(); }
std::size_t class_count(const Dataset& d, int s) { return d.splits[s].distinct_classes().size(); }

std::set<std::uint64_t> init_seeds(const DatasetSplit& s) {
  std::set<std::uint64_t> out;
  for (const auto& x : s.samples) out.insert(x.init_seed);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("mxiso_test_" + name);
  fs::remove_all(dir);
  return dir;
}

DatasetManifest small_sim(DatasetManifest m) {
  m.sim.n_frames = 6;
  m.sim.subsample = 10;
  return m;
}

Trajectory constant_trajectory(int frames, int n, double x) {
  Trajectory t(frames, n);
  for (int f = 0; f < frames; ++f) {
    for (int i = 0; i < n; ++i) t.set(f, i, {x + f, x - i}, {1, 1});
  }
  return t;
}

}  // namespace

TEST_CASE("manifest presets and JSON round trip") {
  for (const char* name : {"original-er", "rejection-er", "con-111", "iso-155", "con-iso", "sub-con-111", "xch", "xcl",
                           "ic", "xsh", "xsl", "is"}) {
    const auto m = preset_manifest(name, 5);
    nlohmann::json j = m;
    const auto back = j.get<DatasetManifest>();
    CHECK(nlohmann::json(back) == j);
  }
  CHECK_THROWS_AS(preset_manifest("con-"), ValidationError);
  CHECK_THROWS_AS(preset_manifest("bogus"), ValidationError);
  auto j = nlohmann::json(preset_manifest("con-3"));
  j["method"] = "nope";
  CHECK_THROWS_AS(j.get<DatasetManifest>(), ValidationError);
  // the charge axis needs a charge layer
  CHECK_THROWS_AS(preset_manifest("xch", 0, {Interaction::ideal_spring}), ValidationError);
}

TEST_CASE("standard split arithmetic") {
  const auto& cat = catalog454();
  REQUIRE(cat.size() == 454);

  const auto con = build_dataset(preset_manifest("con-111"), cat);
  CHECK(split_size(con, 0) == 50394);
  CHECK(split_size(con, 1) == 9988);
  CHECK(split_size(con, 2) == 9988);
  for (int s = 0; s < 3; ++s) CHECK(class_count(con, s) == 454);
  std::map<CanonicalForm, std::size_t> per_class;
  for (const auto& x : con.splits[0].samples) ++per_class[x.class_id];
  for (auto& [id, k] : per_class) CHECK(k == 111);
  CHECK(init_seeds(con.splits[0]).size() == 111);

  const auto iso = build_dataset(preset_manifest("iso-155"), cat);
  CHECK(split_size(iso, 0) == 50220);
  CHECK(split_size(iso, 1) == 10075);
  CHECK(split_size(iso, 2) == 10075);
  CHECK(class_count(iso, 0) == 324);
  CHECK(class_count(iso, 1) == 65);
  CHECK(class_count(iso, 2) == 65);
  CHECK(class_overlap(iso.splits[0], iso.splits[1]) == 0);
  CHECK(class_overlap(iso.splits[0], iso.splits[2]) == 0);
  CHECK(class_overlap(iso.splits[1], iso.splits[2]) == 0);
  CHECK(init_seeds(iso.splits[0]) == init_seeds(iso.splits[1]));
  CHECK(init_seeds(iso.splits[0]) == init_seeds(iso.splits[2]));
  CHECK(init_seeds(iso.splits[0]).size() == 155);

  const auto ci = build_dataset(preset_manifest("con-iso"), cat);
  for (int s = 0; s < 3; ++s) CHECK(split_size(ci, s) == split_size(iso, s));
  CHECK(class_overlap(ci.splits[0], ci.splits[2]) == 0);
  std::set<std::uint64_t> all;
  std::size_t total = 0;
  for (const auto& s : ci.splits) {
    const auto seeds = init_seeds(s);
    total += seeds.size();
    all.insert(seeds.begin(), seeds.end());
  }
  CHECK(all.size() == total);

  for (const auto* d : {&con, &iso, &ci}) {
    for (const auto& s : d->splits) {
      for (const auto& x : s.samples) REQUIRE(x.network.canonical() == x.class_id);
    }
  }
}

TEST_CASE("samples are relabeled and shuffled") {
  const auto d = build_dataset(preset_manifest("con-22"), catalog454());
  std::set<std::vector<EdgeMask>> labeled;
  for (const auto& x : d.splits[0].samples) {
    std::vector<EdgeMask> masks;
    for (const auto& l : x.network.layers) masks.push_back(l.edges());
    labeled.insert(masks);
  }
  CHECK(labeled.size() > 454);
  std::size_t adjacent_same = 0;
  const auto& s = d.splits[0].samples;
  for (std::size_t i = 1; i < s.size(); ++i) adjacent_same += s[i].class_id == s[i - 1].class_id;
  CHECK(adjacent_same < s.size() / 10);
}

TEST_CASE("Sub-Con keeps Con's validation and test sets") {
  const auto& cat = catalog454();
  const auto sub = build_dataset(preset_manifest("sub-con-111", 3), cat);
  const auto con = build_dataset(preset_manifest("con-111", 3), cat);
  CHECK(class_count(sub, 0) == 324);
  CHECK(class_count(sub, 1) == 454);
  CHECK(class_count(sub, 2) == 454);
  CHECK(split_size(sub, 0) == 324 * 111);
  for (int s = 1; s < 3; ++s) {
    REQUIRE(split_size(sub, s) == split_size(con, s));
    for (std::size_t i = 0; i < sub.splits[s].samples.size(); ++i) {
      CHECK(sub.splits[s].samples[i].network == con.splits[s].samples[i].network);
      CHECK(sub.splits[s].samples[i].init_seed == con.splits[s].samples[i].init_seed);
    }
  }
  CHECK(class_overlap(sub.splits[0], sub.splits[1]) == 324);
}

TEST_CASE("extrapolation splits") {
  const auto& cat = catalog454();
  auto stat_range = [&](const Dataset& d, int s, const DatasetManifest& m) {
    const CatalogIndex index(cat);
    int lo = 1 << 20, hi = -1;
    for (const auto& x : d.splits[s].samples) {
      const int v = extrapolation_statistic(cat.classes[*index.find(x.class_id)], m);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return std::pair{lo, hi};
  };
  for (const char* name : {"xch", "xcl", "ic", "xsh", "xsl", "is"}) {
    CAPTURE(name);
    const auto m = preset_manifest(name);
    const auto d = build_dataset(m, cat);
    CHECK(class_overlap(d.splits[0], d.splits[2]) == 0);
    CHECK(init_seeds(d.splits[0]).size() == 50);
    CHECK(init_seeds(d.splits[1]).size() == 22);
    CHECK(init_seeds(d.splits[2]).size() == 22);
    const auto train = stat_range(d, 0, m);
    const auto test = stat_range(d, 2, m);
    if (m.mode == ExtrapolationMode::extrap_high) CHECK(train.second < test.first);
    if (m.mode == ExtrapolationMode::extrap_low) CHECK(test.second < train.first);
    if (m.mode == ExtrapolationMode::interpolate) {
      CHECK(train.first < test.first);
      CHECK(train.second > test.second);
    }
    CHECK(class_count(d, 0) + class_count(d, 2) == 454);
  }

  // median split with ties low: recompute the boundary independently
  const auto m = preset_manifest("xch");
  std::vector<int> charges;
  for (const auto& c : cat.classes) charges.push_back(c.representative.layers[1].charged_count());
  std::sort(charges.begin(), charges.end());
  const int median = charges[(charges.size() - 1) / 2];
  const auto d = build_dataset(m, cat);
  CHECK(stat_range(d, 0, m).second == median);
}

TEST_CASE("extrapolation with an empty band fails") {
  const auto full = enumerate_collective_basis(5);
  const std::vector<std::vector<IsoClass>> sets = {{enumerate_pairwise_basis(5).back()}, {full.back()}};
  const auto tiny = enumerate_multiplex(sets, 5);
  REQUIRE(tiny.size() == 1);
  CHECK_THROWS_AS(build_dataset(preset_manifest("xch"), tiny), ValidationError);
  CHECK_THROWS_AS(build_dataset(preset_manifest("iso-5"), tiny), ValidationError);
}

TEST_CASE("Original-ER leaks classes between splits") {
  const auto& cat = catalog454();
  const auto d = build_dataset(preset_manifest("original-er", 1), cat);
  CHECK(split_size(d, 0) == 50000);
  CHECK(split_size(d, 1) == 10000);
  CHECK(split_size(d, 2) == 10000);
  CHECK(class_overlap(d.splits[0], d.splits[2]) > 0);
  // the most likely class is absent from train with negligible probability
  const auto probs = class_probabilities(cat, GenerationMethod::original_er).as_doubles();
  const double p_max = *std::max_element(probs.begin(), probs.end());
  CHECK(50000 * std::log1p(-p_max) < std::log(1e-10));
  for (const auto& s : d.splits) {
    for (const auto& x : s.samples) REQUIRE(x.network.canonical() == x.class_id);
  }
}

TEST_CASE("Rejection-ER") {
  const auto& cat = catalog454();
  SUBCASE("small train split on the 454-class catalog") {
    auto m = preset_manifest("rejection-er", 2);
    m.splits = {SplitSpec{{}, 0, {}, 300}, SplitSpec{{}, 0, {}, 200}, SplitSpec{{}, 0, {}, 200}};
    const auto d = build_dataset(m, cat);
    CHECK(class_overlap(d.splits[0], d.splits[1]) == 0);
    CHECK(class_overlap(d.splits[0], d.splits[2]) == 0);
    CHECK(d.report.rejected > 0);
    CHECK(split_size(d, 2) == 200);
  }
  SUBCASE("full-size splits on the 454-class catalog exhaust the budget") {
    auto m = preset_manifest("rejection-er", 2);
    m.rejection_budget = 2'000'000;
    CHECK_THROWS_AS(build_dataset(m, cat), ResourceLimitError);
  }
  SUBCASE("three interactions") {
    const auto big = enumerate_multiplex(
        5, std::vector<GraphKind>{GraphKind::pairwise, GraphKind::collective, GraphKind::pairwise});
    auto m = preset_manifest("rejection-er", 2,
                             {Interaction::ideal_spring, Interaction::charge, Interaction::finite_spring});
    m.splits = {SplitSpec{{}, 0, {}, 20000}, SplitSpec{{}, 0, {}, 2000}, SplitSpec{{}, 0, {}, 2000}};
    const auto d = build_dataset(m, big);
    CHECK(class_overlap(d.splits[0], d.splits[2]) == 0);
    const double rate = static_cast<double>(d.report.rejected) / (4000 + d.report.rejected);
    // a fresh ER draw is rejected with probability sum_c P(c) (1 - (1 - P(c))^N_train)
    const auto probs = class_probabilities(big, GenerationMethod::original_er).as_doubles();
    double expected = 0;
    for (double q : probs) expected += q * -std::expm1(20000 * std::log1p(-q));
    CHECK(std::abs(rate - expected) < 0.02);
    CHECK(class_count(d, 0) < big.size() / 10);
  }
}

TEST_CASE("written datasets are reproducible and readable") {
  const auto& cat = catalog454();
  auto m = small_sim(preset_manifest("iso-2", 4));
  const auto d = build_dataset(m, cat);
  const auto a = scratch("a"), b = scratch("b");
  write_dataset(d, a, 1);
  write_dataset(build_dataset(m, cat), b, 4);
  for (const char* split : {"train", "val", "test"}) {
    for (const char* file : {"trajectories.bin", "networks.bin", "classes.txt"}) {
      CHECK(slurp(a / split / file) == slurp(b / split / file));
    }
  }
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
  CHECK(load_manifest(a / "manifest.json").catalog_ref == cat.reference());

  const auto& test = d.splits[2];
  const auto nets = read_networks(a / "test" / "networks.bin", m.layer_kinds());
  const auto ids = read_classes(a / "test" / "classes.txt");
  const auto traj = read_trajectories(a / "test" / "trajectories.bin");
  REQUIRE(nets.size() == test.samples.size());
  REQUIRE(ids.size() == test.samples.size());
  REQUIRE(traj.samples == test.samples.size());
  CHECK(traj.frames == 6);
  CHECK(traj.particles == 5);
  CHECK(fs::file_size(a / "test" / "trajectories.bin") == 6 + 5 * 4 + std::size_t{traj.samples} * 6 * 5 * 4 * 4);
  for (std::size_t i = 0; i < nets.size(); ++i) {
    CHECK(nets[i] == test.samples[i].network);
    CHECK(ids[i] == test.samples[i].class_id);
    CHECK(nets[i].canonical() == ids[i]);
  }
  const auto sim = simulate_sample(test.samples[3], m);
  const auto back = traj.trajectory(3);
  for (std::size_t k = 0; k < sim.data().size(); ++k) CHECK(back.data()[k] == static_cast<float>(sim.data()[k]));

  const std::vector<fs::path> dirs = {a};
  const auto leaks = leak_check(dirs);
  CHECK(leaks.entries.size() == 3);
  CHECK(leaks.overlap((a / "train").string(), (a / "test").string()) == 0);

  // a second dataset that reuses the same classes leaks across directories
  const auto c = scratch("c");
  write_dataset(build_dataset(small_sim(preset_manifest("con-1", 4)), cat), c, 2);
  const std::vector<fs::path> both = {a, c};
  CHECK(leak_check(both).overlap((a / "test").string(), (c / "train").string()) == 65);
  CHECK_THROWS_AS(read_trajectories(a / "test" / "networks.bin"), ValidationError);
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(c);
}

TEST_CASE("MSE-k") {
  const auto t = constant_trajectory(10, 3, 0.0);
  CHECK(mse_k(t, t, 5) == 0.0);
  Trajectory shifted(10, 3);
  const double delta = 0.25;
  for (int f = 0; f < 10; ++f) {
    for (int i = 0; i < 3; ++i) {
      shifted.set(f, i, t.position(f, i) + Vec2{delta, delta}, {7, 7});
    }
  }
  CHECK(mse_k(shifted, t, 10) == doctest::Approx(delta * delta));
  CHECK_THROWS_AS(mse_k(t, t, 11), ValidationError);
  CHECK_THROWS_AS(mse_k(constant_trajectory(10, 2, 0), t, 3), ValidationError);
  // x moves one unit per frame; holding frame 4 for frames 5..6 errs by 1 and 2 in x
  CHECK(stationary_mse(t, 5, 2) == doctest::Approx((1.0 + 4.0) / 2 / 2));
}

TEST_CASE("edge accuracy") {
  const auto a = LabeledGraph::from_edges(4, std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
  const auto b = LabeledGraph::from_edges(4, std::vector<std::pair<int, int>>{{2, 3}});
  const auto c = LabeledGraph::collective(4, 0b0111);
  const MultiplexNetwork truth({a, b, c});

  const auto same = edge_accuracy(truth, truth, false);
  CHECK(same.overall == 1.0);
  for (double x : same.per_layer) CHECK(x == 1.0);

  const MultiplexNetwork flipped({complement(a), complement(b), LabeledGraph(4, 0b111111 ^ c.edges())});
  CHECK(edge_accuracy(flipped, truth, false).overall == 0.0);

  // one wrong slot out of six in the first layer
  const MultiplexNetwork one_off({LabeledGraph(4, a.edges() ^ 1u), b, c});
  const auto acc = edge_accuracy(one_off, truth, false);
  CHECK(acc.per_layer[0] == doctest::Approx(5.0 / 6));
  CHECK(acc.overall == doctest::Approx(17.0 / 18));

  const MultiplexNetwork swapped({b, a, c});
  CHECK(edge_accuracy(swapped, truth, true).overall == 1.0);
  CHECK(edge_accuracy(swapped, truth, false).overall < 1.0);
  CHECK(edge_accuracy(swapped, truth, true).layer_assignment == std::vector<std::size_t>{1, 0, 2});
  // a collective layer never stands in for a pairwise one
  const MultiplexNetwork mixed({c, b, a});
  CHECK(edge_accuracy(mixed, truth, true).layer_assignment[2] == 2);
}
