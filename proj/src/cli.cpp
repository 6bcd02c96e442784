#include "mxiso/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "mxiso/dataset.hpp"
#include "mxiso/errors.hpp"
#include "mxiso/multiplex.hpp"
#include "mxiso/sampling.hpp"
#include "mxiso/seeds.hpp"
#include "mxiso/version.hpp"

namespace fs = std::filesystem;

namespace mxiso::cli {

namespace {

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.emplace_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

/// Layer kinds may be given as kinds (pairwise/collective) or as interactions
/// (spring/fspring/charge).
std::vector<GraphKind> parse_kinds(std::string_view text) {
  std::vector<GraphKind> kinds;
  for (const auto& tok : split(text, ',')) {
    try {
      kinds.push_back(parse_graph_kind(tok));
    } catch (const ValidationError&) {
      kinds.push_back(kind_of(parse_interaction(tok)));
    }
  }
  return kinds;
}

std::vector<Interaction> parse_interactions(std::string_view text) {
  std::vector<Interaction> out;
  for (const auto& tok : split(text, ',')) out.push_back(parse_interaction(tok));
  return out;
}

std::string ratio_text(const Rational& r) {
  std::ostringstream s;
  s << boost::multiprecision::numerator(r) << ':' << boost::multiprecision::denominator(r);
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

class ConfigLog {
 public:
  ConfigLog(std::ostream& err, std::string command) : err_(err) {
    line_ << kGenerator << " command=" << command;
  }
  template <typename T>
  ConfigLog& operator()(const char* key, const T& value) {
    line_ << ' ' << key << '=' << value;
    return *this;
  }
  ~ConfigLog() { err_ << "# " << line_.str() << '\n'; }

 private:
  std::ostream& err_;
  std::ostringstream line_;
};

struct Globals {
  unsigned threads = 0;
  std::uint64_t seed = 0;
};

IsoClassCatalog catalog_from(const std::string& path, int n, const std::string& layers, unsigned threads) {
  if (!path.empty()) return load_catalog(path);
  if (n < 1 || layers.empty()) throw ValidationError("give --catalog or both --n and --layers");
  const auto kinds = parse_kinds(layers);
  return enumerate_multiplex(n, kinds, {threads});
}

// -- enumerate --------------------------------------------------------------

struct EnumerateArgs {
  int n = 5;
  std::string layers = "pairwise,collective";
  std::string out;
};

int cmd_enumerate(const EnumerateArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  const auto kinds = parse_kinds(a.layers);
  ConfigLog(err, "enumerate")("n", a.n)("layers", layer_kinds_to_string(kinds))("threads", g.threads)(
      "out", a.out.empty() ? "-" : a.out);
  const auto t0 = std::chrono::steady_clock::now();
  auto catalog = enumerate_multiplex(a.n, kinds, {g.threads});
  const double elapsed = seconds_since(t0);
  if (!a.out.empty()) save_catalog(a.out, catalog);
  out << "classes=" << catalog.size() << " orbit_sum=" << catalog.total_orbit_size() << " n=" << a.n
      << " layers=" << layer_kinds_to_string(kinds) << " seconds=" << elapsed << '\n';
  return kExitOk;
}

// -- distribution -------------------------------------------------------------

struct DistributionArgs {
  std::string catalog;
  int n = 0;
  std::string layers;
  std::string method = "original-er";
  std::string p = "1/2";
  std::string p_node;
  std::string out;
  std::string expect;
  std::string sweep = "0.3,0.4,0.5,0.6,0.7";
};

int cmd_distribution(const DistributionArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  const auto method = parse_generation_method(a.method);
  const Rational p_edge = parse_rational(a.p);
  const Rational p_node = parse_rational(a.p_node.empty() ? a.p : a.p_node);
  std::vector<Rational> sweep;
  for (const auto& tok : split(a.sweep, ',')) sweep.push_back(parse_rational(tok));
  ConfigLog(err, "distribution")("catalog", a.catalog.empty() ? "(enumerated)" : a.catalog)("n", a.n)(
      "layers", a.layers)("method", to_string(method))("p_edge", p_edge)("p_node", p_node)(
      "expect", a.expect.empty() ? "-" : a.expect)("out", a.out.empty() ? "-" : a.out);

  const auto catalog = catalog_from(a.catalog, a.n, a.layers, g.threads);
  const auto dist = class_probabilities(catalog, method, p_edge, p_node);
  const auto table = rank_frequency(dist);
  if (!a.out.empty()) {
    std::ofstream f(a.out);
    if (!f) throw ValidationError("cannot write " + a.out);
    write_rank_frequency_csv(f, table, catalog);
  }
  out << "catalog=" << catalog.reference() << " method=" << to_string(method) << " ratio=" << table.ratio_string()
      << " groups=" << table.rows.size() << '\n';

  if (a.expect.empty() || a.expect == table.ratio_string()) return kExitOk;
  out << "MISMATCH expected " << a.expect << " got " << table.ratio_string() << '\n';
  out << "sweep original-er max:min over p_edge = p_node = p\n";
  for (const auto& row : original_er_ratio_sweep(catalog, sweep)) {
    out << "  p=" << row.p << " ratio=" << ratio_text(row.original_er_ratio) << " (~"
        << static_cast<double>(row.original_er_ratio) << ")\n";
  }
  return kExitVerification;
}

// -- manifest / gen-dataset -------------------------------------------------

struct ManifestArgs {
  std::string preset;
  std::string interactions = "spring,charge";
  std::string out;
};

int cmd_manifest(const ManifestArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  ConfigLog(err, "manifest")("preset", a.preset)("interactions", a.interactions)("seed", g.seed);
  const auto m = preset_manifest(a.preset, g.seed, parse_interactions(a.interactions));
  if (a.out.empty()) {
    out << nlohmann::json(m).dump(2) << '\n';
  } else {
    save_manifest(a.out, m);
    out << "wrote " << a.out << '\n';
  }
  return kExitOk;
}

struct GenDatasetArgs {
  std::string manifest;
  std::string out;
  std::string catalog;
  std::optional<std::uint64_t> seed;
};

int cmd_gen_dataset(const GenDatasetArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  auto m = load_manifest(a.manifest);
  if (a.seed) m.seed = *a.seed;
  ConfigLog(err, "gen-dataset")("manifest", a.manifest)("name", m.name)("method", to_string(m.method))(
      "seed", m.seed)("n", m.n)("out", a.out)("threads", g.threads);
  const auto catalog = a.catalog.empty() ? enumerate_multiplex(m.n, m.layer_kinds(), {g.threads})
                                         : load_catalog(a.catalog);
  const auto t0 = std::chrono::steady_clock::now();
  const auto dataset = build_dataset(m, catalog);
  write_dataset(dataset, a.out, g.threads);
  for (const auto& line : dataset.report.lines) out << line << '\n';
  out << "wrote " << a.out << " seconds=" << seconds_since(t0) << '\n';
  return kExitOk;
}

// -- simulate ---------------------------------------------------------------

struct SimulateArgs {
  int n = 5;
  std::string interactions = "spring,charge";
  std::string layers;
  int frames = 0;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  const auto inter = parse_interactions(a.interactions);
  const auto texts = split(a.layers, ';');
  if (texts.size() != inter.size()) throw ValidationError("--layers needs one ';'-separated edge list per interaction");
  std::vector<LabeledGraph> layers;
  for (std::size_t l = 0; l < inter.size(); ++l) {
    layers.emplace_back(a.n, parse_edge_list(a.n, texts[l]), kind_of(inter[l]));
  }
  SimConfig config;
  if (a.frames > 0) config.n_frames = a.frames;
  ConfigLog(err, "simulate")("n", a.n)("interactions", a.interactions)("layers", a.layers)("frames", config.n_frames)(
      "dt", config.dt_internal)("subsample", config.subsample)("seed", g.seed)("out", a.out.empty() ? "-" : a.out);
  const MultiplexNetwork net(std::move(layers));
  const auto init = sample_initial_conditions(a.n, g.seed);
  const auto traj = simulate(net, inter, init, config);
  if (a.out.empty()) {
    write_trajectory_csv(out, traj);
  } else {
    std::ofstream f(a.out);
    if (!f) throw ValidationError("cannot write " + a.out);
    write_trajectory_csv(f, traj);
  }
  return kExitOk;
}

// -- leak-check -------------------------------------------------------------

struct LeakArgs {
  std::vector<std::string> dirs;
  bool expect_disjoint = false;
};

int cmd_leak_check(const LeakArgs& a, std::ostream& out, std::ostream& err) {
  ConfigLog log(err, "leak-check");
  for (const auto& d : a.dirs) log("dir", d);
  log("expect_disjoint", a.expect_disjoint);
  std::vector<fs::path> dirs(a.dirs.begin(), a.dirs.end());
  const auto report = leak_check(dirs);
  bool leaked = false;
  for (const auto& e : report.entries) {
    out << e.first << " <-> " << e.second << " shared_classes=" << e.shared_classes << '\n';
    const bool same_dir = fs::path(e.first).parent_path() == fs::path(e.second).parent_path();
    const bool train_test = fs::path(e.first).filename() == "train" && fs::path(e.second).filename() == "test";
    if (same_dir && train_test && e.shared_classes > 0) leaked = true;
  }
  if (a.expect_disjoint && leaked) {
    out << "LEAK train/test classes overlap\n";
    return kExitVerification;
  }
  return kExitOk;
}

// -- metrics ----------------------------------------------------------------

struct MetricsArgs {
  std::string pred, truth;
  int k = 20;
  std::string pred_networks, truth_networks, layers;
  bool match_layers = false;
  int observed = 0;
};

int cmd_metrics(const MetricsArgs& a, std::ostream& out, std::ostream& err) {
  ConfigLog(err, "metrics")("pred", a.pred.empty() ? "-" : a.pred)("truth", a.truth.empty() ? "-" : a.truth)(
      "k", a.k)("pred_networks", a.pred_networks.empty() ? "-" : a.pred_networks)(
      "truth_networks", a.truth_networks.empty() ? "-" : a.truth_networks)("match_layers", a.match_layers)(
      "observed", a.observed);
  bool any = false;
  if (!a.truth.empty()) {
    const auto truth = read_trajectories(a.truth);
    if (!a.pred.empty()) {
      const auto pred = read_trajectories(a.pred);
      out << "mse" << a.k << '=' << mse_k(pred, truth, a.k) << '\n';
      any = true;
    }
    if (a.observed > 0) {
      double sum = 0;
      for (std::size_t s = 0; s < truth.samples; ++s) sum += stationary_mse(truth.trajectory(s), a.observed, a.k);
      out << "stationary_mse" << a.k << '=' << sum / std::max<std::uint32_t>(truth.samples, 1) << '\n';
      any = true;
    }
  }
  if (!a.truth_networks.empty() && !a.pred_networks.empty()) {
    const auto kinds = a.layers.empty() ? std::vector<GraphKind>{} : parse_kinds(a.layers);
    const auto truth = read_networks(a.truth_networks, kinds);
    const auto pred = read_networks(a.pred_networks, kinds);
    const auto acc = edge_accuracy(pred, truth, a.match_layers);
    out << "edge_accuracy=" << acc.overall;
    for (std::size_t l = 0; l < acc.per_layer.size(); ++l) out << " layer" << l << '=' << acc.per_layer[l];
    out << '\n';
    any = true;
  }
  if (!any) throw ValidationError("nothing to compute: give --pred/--truth, --observed, or network files");
  return kExitOk;
}

// -- verify -----------------------------------------------------------------

struct VerifyArgs {
  int n = 4;
  int pairs = 20;
};

int cmd_verify(const VerifyArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  if (a.n < 1 || a.n > 5) throw ValidationError("verify supports n in [1, 5]");
  const bool exhaustive = a.n <= 4;
  ConfigLog(err, "verify")("n", a.n)("mode", exhaustive ? "all-pairs" : "random-pairs")("pairs", a.pairs)(
      "seed", g.seed);
  const GraphKind kinds[] = {GraphKind::pairwise, GraphKind::collective};
  std::size_t checked = 0, mismatches = 0;
  std::mt19937_64 rng(derive_seed(g.seed, "verify"));
  for (auto k1 : kinds) {
    for (auto k2 : kinds) {
      const auto b1 = enumerate_basis(a.n, k1);
      const auto b2 = enumerate_basis(a.n, k2);
      std::vector<std::pair<std::size_t, std::size_t>> todo;
      if (exhaustive) {
        for (std::size_t i = 0; i < b1.size(); ++i) {
          for (std::size_t j = 0; j < b2.size(); ++j) todo.emplace_back(i, j);
        }
      } else {
        std::uniform_int_distribution<std::size_t> d1(0, b1.size() - 1), d2(0, b2.size() - 1);
        for (int r = 0; r < a.pairs; ++r) todo.emplace_back(d1(rng), d2(rng));
      }
      std::size_t local_bad = 0;
      for (auto [i, j] : todo) {
        const std::vector<std::vector<IsoClass>> sets = {{b1[i]}, {b2[j]}};
        const auto fast = enumerate_multiplex(sets, a.n, {g.threads});
        const auto slow = brute_force_multiplex(sets, a.n);
        const auto cmp = compare_catalogs(fast, slow);
        ++checked;
        if (!cmp.equal) {
          ++local_bad;
          err << "mismatch: " << format_graph(b1[i].representative.layers[0]) << " x "
              << format_graph(b2[j].representative.layers[0]) << '\n';
        }
      }
      mismatches += local_bad;
      out << "layers=" << to_string(k1) << ',' << to_string(k2) << " pairs=" << todo.size()
          << " mismatches=" << local_bad << '\n';
    }
  }
  out << (mismatches == 0 ? "PASS" : "FAIL") << " n=" << a.n << " pairs=" << checked << " mismatches=" << mismatches
      << '\n';
  return mismatches == 0 ? kExitOk : kExitVerification;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multiplex isomorphism classes, sampling bias analysis and benchmark datasets", "mxiso"};
  app.set_version_flag("--version", std::string(kGenerator));
  app.require_subcommand(1);
  Globals g;
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");
  app.add_option("--seed", g.seed, "Global seed");

  EnumerateArgs en;
  auto* enumerate = app.add_subcommand("enumerate", "Enumerate multiplex isomorphism classes");
  enumerate->add_option("--n", en.n, "Vertex count")->check(CLI::Range(1, kMaxVertices));
  enumerate->add_option("--layers", en.layers, "Comma-separated layer kinds or interactions");
  enumerate->add_option("--out", en.out, "Catalog output path");

  DistributionArgs di;
  auto* distribution = app.add_subcommand("distribution", "Exact class distribution and rank-frequency table");
  distribution->add_option("--catalog", di.catalog, "Catalog file (otherwise enumerated from --n/--layers)");
  distribution->add_option("--n", di.n, "Vertex count");
  distribution->add_option("--layers", di.layers, "Comma-separated layer kinds or interactions");
  distribution->add_option("--method", di.method, "original-er, uniform-basis or uniform-multiplex");
  distribution->add_option("--p", di.p, "Edge probability (decimal or a/b)");
  distribution->add_option("--p-node", di.p_node, "Node probability (defaults to --p)");
  distribution->add_option("--out", di.out, "Rank-frequency CSV path");
  distribution->add_option("--expect", di.expect, "Expected max:min ratio; a mismatch runs the p sweep");
  distribution->add_option("--sweep", di.sweep, "p values for the mismatch sweep");

  ManifestArgs ma;
  auto* manifest = app.add_subcommand("manifest", "Write a preset dataset manifest");
  manifest->add_option("--preset", ma.preset, "original-er, rejection-er, con-N, iso-N, con-iso, sub-con-N, xch, ...")
      ->required();
  manifest->add_option("--interactions", ma.interactions, "Comma-separated interactions");
  manifest->add_option("--out", ma.out, "Manifest output path");

  GenDatasetArgs ge;
  auto* gen = app.add_subcommand("gen-dataset", "Build a dataset from a manifest");
  gen->add_option("--manifest", ge.manifest, "Manifest JSON")->required();
  gen->add_option("--out", ge.out, "Output directory")->required();
  gen->add_option("--catalog", ge.catalog, "Catalog file (otherwise enumerated)");
  gen->add_option("--seed", ge.seed, "Override the manifest seed");

  SimulateArgs si;
  auto* sim = app.add_subcommand("simulate", "Simulate one network and write a CSV trajectory");
  sim->add_option("--n", si.n, "Particle count")->check(CLI::Range(1, kMaxVertices));
  sim->add_option("--interactions", si.interactions, "Comma-separated interactions, one per layer");
  sim->add_option("--layers", si.layers, "Edge lists per layer separated by ';', e.g. 0-1,1-2;0-1")->required();
  sim->add_option("--frames", si.frames, "Frame count override");
  sim->add_option("--out", si.out, "CSV output path (default stdout)");

  LeakArgs le;
  auto* leak = app.add_subcommand("leak-check", "Report class overlaps between dataset splits");
  leak->add_option("dirs", le.dirs, "Dataset directories")->required();
  leak->add_flag("--expect-disjoint", le.expect_disjoint, "Exit 2 if any train/test pair shares a class");

  MetricsArgs me;
  auto* metrics = app.add_subcommand("metrics", "MSE-k and edge accuracy");
  metrics->add_option("--pred", me.pred, "Predicted trajectories.bin");
  metrics->add_option("--truth", me.truth, "True trajectories.bin");
  metrics->add_option("--k", me.k, "Frames to score");
  metrics->add_option("--observed", me.observed, "Report the stationary baseline after this many frames");
  metrics->add_option("--pred-networks", me.pred_networks, "Predicted networks.bin");
  metrics->add_option("--truth-networks", me.truth_networks, "True networks.bin");
  metrics->add_option("--layers", me.layers, "Layer kinds for network files");
  metrics->add_flag("--match-layers", me.match_layers, "Allow permuting same-kind predicted layers");

  VerifyArgs ve;
  auto* verify = app.add_subcommand("verify", "Compare enumeration against the brute-force reference");
  verify->add_option("--n", ve.n, "Vertex count (n <= 4 checks all basis pairs)");
  verify->add_option("--pairs", ve.pairs, "Random basis pairs per layer combination when n = 5");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForVersion&) {
    out << kGenerator << '\n';
    return kExitOk;
  } catch (const CLI::Success&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    if (enumerate->parsed()) return cmd_enumerate(en, g, out, err);
    if (distribution->parsed()) return cmd_distribution(di, g, out, err);
    if (manifest->parsed()) return cmd_manifest(ma, g, out, err);
    if (gen->parsed()) return cmd_gen_dataset(ge, g, out, err);
    if (sim->parsed()) return cmd_simulate(si, g, out, err);
    if (leak->parsed()) return cmd_leak_check(le, out, err);
    if (metrics->parsed()) return cmd_metrics(me, out, err);
    if (verify->parsed()) return cmd_verify(ve, g, out, err);
  } catch (const VerificationError& e) {
    err << "verification failed: " << e.what() << '\n';
    return kExitVerification;
  } catch (const ResourceLimitError& e) {
    err << "resource limit: " << e.what() << '\n';
    return kExitResource;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace mxiso::cli
