#include "mxiso/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "mxiso/errors.hpp"
#include "mxiso/parallel.hpp"
#include "mxiso/sampling.hpp"
#include "mxiso/seeds.hpp"
#include "mxiso/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mxiso {

std::string_view to_string(DatasetMethod m) {
  switch (m) {
    case DatasetMethod::original_er:
      return "original-er";
    case DatasetMethod::rejection_er:
      return "rejection-er";
    case DatasetMethod::con:
      return "con";
    case DatasetMethod::iso:
      return "iso";
    case DatasetMethod::con_iso:
      return "con-iso";
    case DatasetMethod::sub_con:
      return "sub-con";
    case DatasetMethod::extrapolation:
      return "extrapolation";
  }
  return "?";
}

std::string_view to_string(ExtrapolationAxis a) { return a == ExtrapolationAxis::charge ? "charge" : "spring"; }

std::string_view to_string(ExtrapolationMode m) {
  switch (m) {
    case ExtrapolationMode::extrap_high:
      return "extrap-high";
    case ExtrapolationMode::extrap_low:
      return "extrap-low";
    case ExtrapolationMode::interpolate:
      return "interpolate";
  }
  return "?";
}

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view text, const E (&values)[N], const char* what) {
  for (E v : values) {
    if (to_string(v) == text) return v;
  }
  throw ValidationError("unknown " + std::string(what) + " '" + std::string(text) + "'");
}

constexpr DatasetMethod kMethods[] = {DatasetMethod::original_er, DatasetMethod::rejection_er, DatasetMethod::con,
                                      DatasetMethod::iso,         DatasetMethod::con_iso,      DatasetMethod::sub_con,
                                      DatasetMethod::extrapolation};
constexpr ExtrapolationAxis kAxes[] = {ExtrapolationAxis::charge, ExtrapolationAxis::spring};
constexpr ExtrapolationMode kModes[] = {ExtrapolationMode::extrap_high, ExtrapolationMode::extrap_low,
                                        ExtrapolationMode::interpolate};

bool er_method(DatasetMethod m) { return m == DatasetMethod::original_er || m == DatasetMethod::rejection_er; }

}  // namespace

// ---------------------------------------------------------------------------
// Manifest

std::vector<GraphKind> DatasetManifest::layer_kinds() const {
  std::vector<GraphKind> kinds;
  for (auto i : interactions) kinds.push_back(kind_of(i));
  return kinds;
}

void DatasetManifest::validate() const {
  if (schema_version != kManifestSchemaVersion) {
    throw ValidationError("unsupported manifest schema_version " + std::to_string(schema_version));
  }
  if (n < 1 || n > kMaxVertices) throw ValidationError("manifest n must be in [1, 8]");
  if (interactions.empty() || interactions.size() > 3) throw ValidationError("manifest needs 1 to 3 interactions");
  if (!(p_edge >= 0 && p_edge <= 1) || !(p_node >= 0 && p_node <= 1)) {
    throw ValidationError("p_edge and p_node must lie in [0, 1]");
  }
  if (!(init.pos_std >= 0) || !(init.vel_norm >= 0)) throw ValidationError("init parameters must be non-negative");
  sim.validate();
  for (std::size_t s = 0; s < 3; ++s) {
    const auto& spec = splits[s];
    const std::string name = kSplitNames[s];
    if (er_method(method)) {
      if (!spec.samples) throw ValidationError("split '" + name + "' needs a sample count");
    } else {
      if (spec.init_count == 0) throw ValidationError("split '" + name + "' needs init_count >= 1");
      if (spec.init_pool.empty()) throw ValidationError("split '" + name + "' needs an init_pool");
    }
  }
  if (method == DatasetMethod::extrapolation) {
    const auto wanted = axis == ExtrapolationAxis::charge ? Interaction::charge : Interaction::ideal_spring;
    if (std::find(interactions.begin(), interactions.end(), wanted) == interactions.end()) {
      throw ValidationError("extrapolation axis '" + std::string(to_string(axis)) + "' has no matching layer");
    }
  }
}

namespace {

json split_to_json(const SplitSpec& s) {
  json j;
  j["classes"] = s.classes ? json(*s.classes) : json(nullptr);
  j["init_count"] = s.init_count;
  j["init_pool"] = s.init_pool;
  j["samples"] = s.samples ? json(*s.samples) : json(nullptr);
  return j;
}

SplitSpec split_from_json(const json& j) {
  SplitSpec s;
  if (j.contains("classes") && !j.at("classes").is_null()) s.classes = j.at("classes").get<std::size_t>();
  s.init_count = j.value("init_count", std::size_t{0});
  s.init_pool = j.value("init_pool", std::string{});
  if (j.contains("samples") && !j.at("samples").is_null()) s.samples = j.at("samples").get<std::size_t>();
  return s;
}

}  // namespace

void to_json(json& j, const DatasetManifest& m) {
  j = json::object();
  j["schema_version"] = m.schema_version;
  j["name"] = m.name;
  j["catalog_ref"] = m.catalog_ref;
  j["method"] = std::string(to_string(m.method));
  j["generator_version"] = m.generator_version;
  j["seed"] = m.seed;
  j["n"] = m.n;
  json inter = json::array();
  for (auto i : m.interactions) inter.push_back(std::string(to_string(i)));
  j["interactions"] = inter;
  j["p_edge"] = m.p_edge;
  j["p_node"] = m.p_node;
  json splits = json::object();
  for (std::size_t s = 0; s < 3; ++s) splits[kSplitNames[s]] = split_to_json(m.splits[s]);
  j["splits"] = splits;
  j["extrapolation"] = {{"axis", std::string(to_string(m.axis))}, {"mode", std::string(to_string(m.mode))}};
  j["rejection_budget"] = m.rejection_budget;
  j["init"] = {{"pos_std", m.init.pos_std}, {"vel_norm", m.init.vel_norm}};
  j["sim"] = {{"dt_internal", m.sim.dt_internal},       {"subsample", m.sim.subsample},
              {"n_frames", m.sim.n_frames},             {"spring_k", m.sim.spring_k},
              {"fspring_k", m.sim.fspring_k},           {"fspring_len", m.sim.fspring_len},
              {"charge_strength", m.sim.charge_strength}, {"softening", m.sim.softening},
              {"box_enabled", m.sim.box_enabled},       {"box_half_width", m.sim.box_half_width}};
}

void from_json(const json& j, DatasetManifest& m) {
  try {
    m = DatasetManifest{};
    m.schema_version = j.at("schema_version").get<int>();
    m.name = j.value("name", std::string{});
    m.catalog_ref = j.value("catalog_ref", std::string{});
    m.method = parse_enum(j.at("method").get<std::string>(), kMethods, "dataset method");
    m.generator_version = j.value("generator_version", std::string{});
    m.seed = j.value("seed", std::uint64_t{0});
    m.n = j.at("n").get<int>();
    m.interactions.clear();
    for (const auto& i : j.at("interactions")) m.interactions.push_back(parse_interaction(i.get<std::string>()));
    m.p_edge = j.value("p_edge", 0.5);
    m.p_node = j.value("p_node", 0.5);
    const auto& splits = j.at("splits");
    for (std::size_t s = 0; s < 3; ++s) m.splits[s] = split_from_json(splits.at(kSplitNames[s]));
    if (j.contains("extrapolation")) {
      const auto& e = j.at("extrapolation");
      m.axis = parse_enum(e.value("axis", std::string("charge")), kAxes, "extrapolation axis");
      m.mode = parse_enum(e.value("mode", std::string("extrap-high")), kModes, "extrapolation mode");
    }
    m.rejection_budget = j.value("rejection_budget", m.rejection_budget);
    if (j.contains("init")) {
      m.init.pos_std = j.at("init").value("pos_std", m.init.pos_std);
      m.init.vel_norm = j.at("init").value("vel_norm", m.init.vel_norm);
    }
    if (j.contains("sim")) {
      const auto& s = j.at("sim");
      m.sim.dt_internal = s.value("dt_internal", m.sim.dt_internal);
      m.sim.subsample = s.value("subsample", m.sim.subsample);
      m.sim.n_frames = s.value("n_frames", m.sim.n_frames);
      m.sim.spring_k = s.value("spring_k", m.sim.spring_k);
      m.sim.fspring_k = s.value("fspring_k", m.sim.fspring_k);
      m.sim.fspring_len = s.value("fspring_len", m.sim.fspring_len);
      m.sim.charge_strength = s.value("charge_strength", m.sim.charge_strength);
      m.sim.softening = s.value("softening", m.sim.softening);
      m.sim.box_enabled = s.value("box_enabled", m.sim.box_enabled);
      m.sim.box_half_width = s.value("box_half_width", m.sim.box_half_width);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open manifest " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  auto m = j.get<DatasetManifest>();
  m.validate();
  return m;
}

void save_manifest(const fs::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << json(manifest).dump(2) << '\n';
}

DatasetManifest preset_manifest(std::string_view preset, std::uint64_t seed, std::vector<Interaction> interactions) {
  DatasetManifest m;
  m.name = std::string(preset);
  m.generator_version = std::string(kGenerator);
  m.seed = seed;
  m.interactions = std::move(interactions);

  auto number_suffix = [&](std::string_view prefix) -> std::optional<std::size_t> {
    if (!preset.starts_with(prefix)) return std::nullopt;
    const auto digits = preset.substr(prefix.size());
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      return std::nullopt;
    }
    return static_cast<std::size_t>(std::stoull(std::string(digits)));
  };
  auto class_split = [&](std::size_t init, bool shared) {
    const std::size_t counts[3] = {324, 65, 65};
    for (std::size_t s = 0; s < 3; ++s) {
      m.splits[s].classes = counts[s];
      m.splits[s].init_count = init;
      m.splits[s].init_pool = shared ? "shared" : kSplitNames[s];
    }
  };
  auto con_pools = [&](std::size_t train_init) {
    const std::size_t inits[3] = {train_init, 22, 22};
    for (std::size_t s = 0; s < 3; ++s) {
      m.splits[s].init_count = inits[s];
      m.splits[s].init_pool = kSplitNames[s];
    }
  };

  if (preset == "original-er" || preset == "rejection-er") {
    m.method = preset == "original-er" ? DatasetMethod::original_er : DatasetMethod::rejection_er;
    const std::size_t sizes[3] = {50000, 10000, 10000};
    for (std::size_t s = 0; s < 3; ++s) m.splits[s].samples = sizes[s];
  } else if (preset == "con-iso") {
    m.method = DatasetMethod::con_iso;
    class_split(155, false);
  } else if (auto k = number_suffix("sub-con-")) {
    m.method = DatasetMethod::sub_con;
    con_pools(*k);
    m.splits[0].classes = 324;
  } else if (auto k = number_suffix("con-")) {
    m.method = DatasetMethod::con;
    con_pools(*k);
  } else if (auto k = number_suffix("iso-")) {
    m.method = DatasetMethod::iso;
    class_split(*k, true);
  } else {
    static const std::map<std::string_view, std::pair<ExtrapolationAxis, ExtrapolationMode>> kExtrap = {
        {"xch", {ExtrapolationAxis::charge, ExtrapolationMode::extrap_high}},
        {"xcl", {ExtrapolationAxis::charge, ExtrapolationMode::extrap_low}},
        {"ic", {ExtrapolationAxis::charge, ExtrapolationMode::interpolate}},
        {"xsh", {ExtrapolationAxis::spring, ExtrapolationMode::extrap_high}},
        {"xsl", {ExtrapolationAxis::spring, ExtrapolationMode::extrap_low}},
        {"is", {ExtrapolationAxis::spring, ExtrapolationMode::interpolate}},
    };
    const auto it = kExtrap.find(preset);
    if (it == kExtrap.end()) throw ValidationError("unknown dataset preset '" + std::string(preset) + "'");
    m.method = DatasetMethod::extrapolation;
    m.axis = it->second.first;
    m.mode = it->second.second;
    con_pools(50);
  }
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Builders

std::vector<CanonicalForm> DatasetSplit::distinct_classes() const {
  std::set<CanonicalForm> seen;
  for (const auto& s : samples) seen.insert(s.class_id);
  return {seen.begin(), seen.end()};
}

namespace {

Dataset start(const DatasetManifest& manifest, const IsoClassCatalog& catalog) {
  manifest.validate();
  const auto kinds = manifest.layer_kinds();
  if (catalog.n != manifest.n || catalog.layer_kinds != kinds) {
    throw ValidationError("catalog " + catalog.reference() + " does not match manifest (n=" +
                          std::to_string(manifest.n) + ", layers=" + layer_kinds_to_string(kinds) + ")");
  }
  if (!manifest.catalog_ref.empty() && manifest.catalog_ref != catalog.reference()) {
    throw ValidationError("manifest expects catalog '" + manifest.catalog_ref + "' but got '" +
                          catalog.reference() + "'");
  }
  Dataset d;
  d.manifest = manifest;
  d.manifest.catalog_ref = catalog.reference();
  for (std::size_t s = 0; s < 3; ++s) d.splits[s].name = kSplitNames[s];
  d.report.catalog_classes = catalog.size();
  d.report.log("method=" + std::string(to_string(manifest.method)) + " catalog=" + catalog.reference() +
               " seed=" + std::to_string(manifest.seed));
  return d;
}

void shuffle_split(DatasetSplit& split, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, "shuffle:" + split.name));
  std::shuffle(split.samples.begin(), split.samples.end(), rng);
}

std::uint64_t init_seed(const DatasetManifest& m, const std::string& pool, std::size_t k) {
  return derive_seed(m.seed, "init:" + pool, k);
}

/// Every (class, init) pair for the given classes, each stored under an
/// independent uniformly random relabeling, then shuffled.
void fill_class_split(DatasetSplit& split, const DatasetManifest& m, const SplitSpec& spec,
                      const IsoClassCatalog& catalog, std::span<const std::size_t> class_indices) {
  split.samples.clear();
  split.samples.reserve(class_indices.size() * spec.init_count);
  for (std::size_t ci : class_indices) {
    const auto& c = catalog.classes[ci];
    std::mt19937_64 rng(derive_seed(m.seed, "orient:" + split.name, ci));
    for (std::size_t k = 0; k < spec.init_count; ++k) {
      const auto p = random_permutation(m.n, rng);
      split.samples.push_back({c.representative.relabeled(p), c.class_id, init_seed(m, spec.init_pool, k)});
    }
  }
  shuffle_split(split, m.seed);
}

std::vector<std::size_t> all_indices(std::size_t count) {
  std::vector<std::size_t> v(count);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

/// Catalog indices in a seed-determined random order, used for partitions.
std::vector<std::size_t> class_order(const DatasetManifest& m, std::size_t count) {
  auto v = all_indices(count);
  std::mt19937_64 rng(derive_seed(m.seed, "partition"));
  std::shuffle(v.begin(), v.end(), rng);
  return v;
}

std::size_t required_classes(const SplitSpec& spec, const char* split) {
  if (!spec.classes) throw ValidationError(std::string("split '") + split + "' needs a class count");
  return *spec.classes;
}

void log_counts(Dataset& d) {
  for (const auto& s : d.splits) {
    d.report.log(s.name + ": samples=" + std::to_string(s.samples.size()) +
                 " classes=" + std::to_string(s.distinct_classes().size()));
  }
  d.report.train_classes = d.splits[0].distinct_classes().size();
}

Sample er_sample(ErSampler& sampler, const CatalogIndex& index, const DatasetManifest& m, const std::string& split,
                 std::uint64_t k) {
  auto net = sampler.next();
  auto id = net.canonical();
  if (!index.contains(id)) throw VerificationError("sampled network " + id.hex() + " is missing from the catalog");
  return {std::move(net), std::move(id), init_seed(m, "er:" + split, k)};
}

Dataset partitioned(const DatasetManifest& manifest, const IsoClassCatalog& catalog) {
  Dataset d = start(manifest, catalog);
  std::size_t counts[3];
  for (std::size_t s = 0; s < 3; ++s) counts[s] = required_classes(manifest.splits[s], kSplitNames[s]);
  const std::size_t total = counts[0] + counts[1] + counts[2];
  if (total > catalog.size()) {
    throw ValidationError("class split needs " + std::to_string(total) + " classes but the catalog has " +
                          std::to_string(catalog.size()));
  }
  const auto order = class_order(manifest, catalog.size());
  std::size_t offset = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    std::vector<std::size_t> chosen(order.begin() + offset, order.begin() + offset + counts[s]);
    std::sort(chosen.begin(), chosen.end());
    fill_class_split(d.splits[s], manifest, manifest.splits[s], catalog, chosen);
    offset += counts[s];
  }
  log_counts(d);
  return d;
}

}  // namespace

Dataset build_original_er(const DatasetManifest& manifest, const IsoClassCatalog& catalog) {
  Dataset d = start(manifest, catalog);
  const CatalogIndex index(catalog);
  for (std::size_t s = 0; s < 3; ++s) {
    auto& split = d.splits[s];
    ErSampler sampler(manifest.n, manifest.layer_kinds(), manifest.p_edge, manifest.p_node,
                      derive_seed(manifest.seed, "er:" + split.name));
    const std::size_t target = *manifest.splits[s].samples;
    split.samples.reserve(target);
    for (std::size_t k = 0; k < target; ++k) split.samples.push_back(er_sample(sampler, index, manifest, split.name, k));
  }
  log_counts(d);
  return d;
}

Dataset build_rejection_er(const DatasetManifest& manifest, const IsoClassCatalog& catalog) {
  Dataset d = start(manifest, catalog);
  const CatalogIndex index(catalog);
  std::unordered_set<CanonicalForm, CanonicalFormHash> train_classes;
  std::uint64_t draws = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    auto& split = d.splits[s];
    ErSampler sampler(manifest.n, manifest.layer_kinds(), manifest.p_edge, manifest.p_node,
                      derive_seed(manifest.seed, "er:" + split.name));
    const std::size_t target = *manifest.splits[s].samples;
    split.samples.reserve(target);
    std::uint64_t k = 0;
    while (split.samples.size() < target) {
      if (++draws > manifest.rejection_budget) {
        throw ResourceLimitError("rejection budget of " + std::to_string(manifest.rejection_budget) +
                                 " draws exhausted in split '" + split.name + "' (train covers " +
                                 std::to_string(train_classes.size()) + " of " + std::to_string(catalog.size()) +
                                 " classes)");
      }
      auto sample = er_sample(sampler, index, manifest, split.name, k++);
      if (s == 0) {
        train_classes.insert(sample.class_id);
      } else if (train_classes.contains(sample.class_id)) {
        ++d.report.rejected;
        continue;
      }
      split.samples.push_back(std::move(sample));
    }
    if (s == 0 && train_classes.size() == catalog.size()) {
      throw ResourceLimitError("train split covers all " + std::to_string(catalog.size()) +
                               " classes; no class is left for val/test");
    }
  }
  d.report.log("train coverage=" + std::to_string(train_classes.size()) + "/" + std::to_string(catalog.size()) +
               " rejected=" + std::to_string(d.report.rejected) + " draws=" + std::to_string(draws));
  log_counts(d);
  return d;
}

Dataset build_con_n(const DatasetManifest& manifest, const IsoClassCatalog& catalog) {
  Dataset d = start(manifest, catalog);
  const auto all = all_indices(catalog.size());
  for (std::size_t s = 0; s < 3; ++s) fill_class_split(d.splits[s], manifest, manifest.splits[s], catalog, all);
  log_counts(d);
  return d;
}

Dataset build_iso_n(const DatasetManifest& manifest, const IsoClassCatalog& catalog) {
  const auto& pool = manifest.splits[0].init_pool;
  for (const auto& spec : manifest.splits) {
    if (spec.init_pool != pool || spec.init_count != manifest.splits[0].init_count) {
      throw ValidationError("iso datasets share one initial-condition set across splits");
    }
  }
  return partitioned(manifest, catalog);
}

Dataset build_con_iso(const DatasetManifest& manifest, const IsoClassCatalog& catalog) {
  const auto& sp = manifest.splits;
  if (sp[0].init_pool == sp[1].init_pool || sp[0].init_pool == sp[2].init_pool || sp[1].init_pool == sp[2].init_pool) {
    throw ValidationError("con-iso datasets need a distinct initial-condition pool per split");
  }
  return partitioned(manifest, catalog);
}

Dataset build_sub_con_n(const DatasetManifest& manifest, const IsoClassCatalog& catalog) {
  Dataset d = start(manifest, catalog);
  const std::size_t train_count = required_classes(manifest.splits[0], "train");
  if (train_count > catalog.size()) throw ValidationError("sub-con train needs more classes than the catalog has");
  auto order = class_order(manifest, catalog.size());
  order.resize(train_count);
  std::sort(order.begin(), order.end());
  fill_class_split(d.splits[0], manifest, manifest.splits[0], catalog, order);
  // Val/test are built exactly as Con-n builds them.
  const auto all = all_indices(catalog.size());
  for (std::size_t s = 1; s < 3; ++s) fill_class_split(d.splits[s], manifest, manifest.splits[s], catalog, all);
  log_counts(d);
  return d;
}

int extrapolation_statistic(const IsoClass& c, const DatasetManifest& manifest) {
  const auto wanted = manifest.axis == ExtrapolationAxis::charge ? Interaction::charge : Interaction::ideal_spring;
  for (std::size_t l = 0; l < manifest.interactions.size(); ++l) {
    if (manifest.interactions[l] != wanted) continue;
    const auto& layer = c.representative.layers.at(l);
    return wanted == Interaction::charge ? layer.charged_count() : layer.edge_count();
  }
  throw ValidationError("no layer for extrapolation axis '" + std::string(to_string(manifest.axis)) + "'");
}

Dataset build_extrapolation(const DatasetManifest& manifest, const IsoClassCatalog& catalog) {
  Dataset d = start(manifest, catalog);
  std::vector<int> stat(catalog.size());
  std::map<int, std::size_t> histogram;
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    stat[i] = extrapolation_statistic(catalog.classes[i], manifest);
    ++histogram[stat[i]];
  }
  std::vector<int> sorted = stat;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.empty()) throw ValidationError("empty catalog");

  std::ostringstream hist;
  hist << "statistic histogram (" << to_string(manifest.axis) << "):";
  for (auto [v, count] : histogram) hist << ' ' << v << ':' << count;
  d.report.log(hist.str());

  // band(i): 0 = train, 1 = held out (val and test)
  std::function<bool(int)> held_out;
  if (manifest.mode == ExtrapolationMode::interpolate) {
    const int t1 = sorted[(sorted.size() - 1) / 3];
    const int t2 = sorted[(2 * (sorted.size() - 1)) / 3];
    d.report.log("tercile bounds: middle band = (" + std::to_string(t1) + ", " + std::to_string(t2) + "]");
    held_out = [=](int v) { return v > t1 && v <= t2; };
  } else {
    const int median = sorted[(sorted.size() - 1) / 2];
    d.report.log("median split at " + std::to_string(median) + " (ties in low band)");
    if (manifest.mode == ExtrapolationMode::extrap_high) {
      held_out = [=](int v) { return v > median; };
    } else {
      held_out = [=](int v) { return v <= median; };
    }
  }
  std::vector<std::size_t> train, held;
  for (std::size_t i = 0; i < catalog.size(); ++i) (held_out(stat[i]) ? held : train).push_back(i);
  if (train.empty() || held.empty()) {
    throw ValidationError("extrapolation band is empty (train " + std::to_string(train.size()) + ", held out " +
                          std::to_string(held.size()) + " classes)");
  }
  d.report.log("train classes=" + std::to_string(train.size()) + " held-out classes=" + std::to_string(held.size()));
  fill_class_split(d.splits[0], manifest, manifest.splits[0], catalog, train);
  fill_class_split(d.splits[1], manifest, manifest.splits[1], catalog, held);
  fill_class_split(d.splits[2], manifest, manifest.splits[2], catalog, held);
  log_counts(d);
  return d;
}

Dataset build_dataset(const DatasetManifest& manifest, const IsoClassCatalog& catalog) {
  switch (manifest.method) {
    case DatasetMethod::original_er:
      return build_original_er(manifest, catalog);
    case DatasetMethod::rejection_er:
      return build_rejection_er(manifest, catalog);
    case DatasetMethod::con:
      return build_con_n(manifest, catalog);
    case DatasetMethod::iso:
      return build_iso_n(manifest, catalog);
    case DatasetMethod::con_iso:
      return build_con_iso(manifest, catalog);
    case DatasetMethod::sub_con:
      return build_sub_con_n(manifest, catalog);
    case DatasetMethod::extrapolation:
      return build_extrapolation(manifest, catalog);
  }
  throw ValidationError("unknown dataset method");
}

Trajectory simulate_sample(const Sample& sample, const DatasetManifest& manifest) {
  const auto init = sample_initial_conditions(manifest.n, sample.init_seed, manifest.init.pos_std,
                                              manifest.init.vel_norm);
  return simulate(sample.network, manifest.interactions, init, manifest.sim);
}

// ---------------------------------------------------------------------------
// Binary formats

namespace {

constexpr char kTrajMagic[] = "MXTRJ1";
constexpr char kNetMagic[] = "MXNET1";
constexpr std::size_t kMagicLen = 6;

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ValidationError("truncated header");
  return std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 | std::uint32_t{b[3]} << 24;
}

void put_f32(std::ostream& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

void expect_magic(std::istream& in, const char* magic, const fs::path& path) {
  char buf[kMagicLen];
  if (!in.read(buf, kMagicLen) || std::memcmp(buf, magic, kMagicLen) != 0) {
    throw ValidationError(path.string() + ": bad magic, expected " + magic);
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

void write_trajectory_header(std::ostream& out, std::uint32_t samples, std::uint32_t frames, std::uint32_t particles) {
  out.write(kTrajMagic, kMagicLen);
  for (std::uint32_t v : {samples, frames, particles, 2u, 2u}) put_u32(out, v);
}

void append_trajectory(std::ostream& out, const Trajectory& t) {
  for (double v : t.data()) put_f32(out, static_cast<float>(v));
}

}  // namespace

Trajectory TrajectorySet::trajectory(std::size_t sample) const {
  if (sample >= samples) throw ValidationError("sample index out of range");
  Trajectory t(static_cast<int>(frames), static_cast<int>(particles));
  const std::size_t stride = std::size_t{frames} * particles * 4;
  auto out = t.data();
  for (std::size_t i = 0; i < stride; ++i) out[i] = values[sample * stride + i];
  return t;
}

void write_trajectories(const fs::path& path, std::span<const Trajectory> trajectories) {
  const std::uint32_t frames = trajectories.empty() ? 0 : trajectories[0].frames();
  const std::uint32_t particles = trajectories.empty() ? 0 : trajectories[0].particles();
  for (const auto& t : trajectories) {
    if (static_cast<std::uint32_t>(t.frames()) != frames || static_cast<std::uint32_t>(t.particles()) != particles) {
      throw ValidationError("trajectories differ in shape");
    }
  }
  auto out = open_out(path);
  write_trajectory_header(out, static_cast<std::uint32_t>(trajectories.size()), frames, particles);
  for (const auto& t : trajectories) append_trajectory(out, t);
}

TrajectorySet read_trajectories(const fs::path& path) {
  auto in = open_in(path);
  expect_magic(in, kTrajMagic, path);
  TrajectorySet set;
  set.samples = get_u32(in);
  set.frames = get_u32(in);
  set.particles = get_u32(in);
  if (get_u32(in) != 2 || get_u32(in) != 2) throw ValidationError(path.string() + ": expected D=2, C=2");
  const std::size_t count = std::size_t{set.samples} * set.frames * set.particles * 4;
  set.values.resize(count);
  std::vector<unsigned char> raw(count * 4);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw ValidationError(path.string() + ": truncated trajectory data");
  }
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned char* b = raw.data() + 4 * i;
    const std::uint32_t u =
        std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 | std::uint32_t{b[3]} << 24;
    set.values[i] = std::bit_cast<float>(u);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw ValidationError(path.string() + ": trailing bytes");
  return set;
}

void write_networks(const fs::path& path, std::span<const MultiplexNetwork> networks) {
  const std::uint32_t layers = networks.empty() ? 0 : networks[0].layers.size();
  const std::uint32_t n = networks.empty() ? 0 : networks[0].n;
  auto out = open_out(path);
  out.write(kNetMagic, kMagicLen);
  put_u32(out, static_cast<std::uint32_t>(networks.size()));
  put_u32(out, layers);
  put_u32(out, n);
  std::vector<std::uint8_t> bytes;
  for (const auto& net : networks) {
    if (net.layers.size() != layers || static_cast<std::uint32_t>(net.n) != n) {
      throw ValidationError("networks differ in shape");
    }
    bytes.clear();
    for (const auto& layer : net.layers) append_mask_bytes(net.n, layer.edges(), bytes);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
}

std::vector<MultiplexNetwork> read_networks(const fs::path& path, std::span<const GraphKind> kinds) {
  auto in = open_in(path);
  expect_magic(in, kNetMagic, path);
  const std::uint32_t count = get_u32(in);
  const std::uint32_t layers = get_u32(in);
  const std::uint32_t n = get_u32(in);
  if (n > static_cast<std::uint32_t>(kMaxVertices)) throw ValidationError(path.string() + ": n too large");
  if (!kinds.empty() && kinds.size() != layers) throw ValidationError(path.string() + ": layer count mismatch");
  const int nb = layer_byte_count(static_cast<int>(n));
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(nb));
  std::vector<MultiplexNetwork> out;
  out.reserve(count);
  for (std::uint32_t s = 0; s < count; ++s) {
    std::vector<LabeledGraph> ls;
    for (std::uint32_t l = 0; l < layers; ++l) {
      if (!in.read(reinterpret_cast<char*>(buf.data()), nb)) throw ValidationError(path.string() + ": truncated");
      const auto kind = kinds.empty() ? GraphKind::pairwise : kinds[l];
      ls.emplace_back(static_cast<int>(n), read_mask_bytes(static_cast<int>(n), buf), kind);
    }
    out.emplace_back(std::move(ls));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw ValidationError(path.string() + ": trailing bytes");
  return out;
}

void write_classes(const fs::path& path, std::span<const CanonicalForm> classes) {
  auto out = open_out(path);
  for (const auto& c : classes) out << c.hex() << '\n';
}

std::vector<CanonicalForm> read_classes(const fs::path& path) {
  auto in = open_in(path);
  std::vector<CanonicalForm> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(CanonicalForm::from_hex(line));
  }
  return out;
}

void write_dataset(const Dataset& dataset, const fs::path& dir, unsigned threads) {
  const auto& m = dataset.manifest;
  m.validate();
  fs::create_directories(dir);
  save_manifest(dir / "manifest.json", m);
  {
    auto out = open_out(dir / "report.txt");
    for (const auto& line : dataset.report.lines) out << line << '\n';
  }
  constexpr std::size_t kChunk = 512;
  for (const auto& split : dataset.splits) {
    const fs::path sdir = dir / split.name;
    fs::create_directories(sdir);
    const auto& samples = split.samples;

    std::vector<MultiplexNetwork> nets;
    std::vector<CanonicalForm> ids;
    nets.reserve(samples.size());
    ids.reserve(samples.size());
    for (const auto& s : samples) {
      nets.push_back(s.network);
      ids.push_back(s.class_id);
    }
    write_networks(sdir / "networks.bin", nets);
    write_classes(sdir / "classes.txt", ids);

    auto out = open_out(sdir / "trajectories.bin");
    write_trajectory_header(out, static_cast<std::uint32_t>(samples.size()), static_cast<std::uint32_t>(m.sim.n_frames),
                            static_cast<std::uint32_t>(m.n));
    std::vector<Trajectory> chunk;
    for (std::size_t begin = 0; begin < samples.size(); begin += kChunk) {
      const std::size_t end = std::min(samples.size(), begin + kChunk);
      chunk.assign(end - begin, Trajectory{});
      parallel_for(end - begin, threads, [&](std::size_t i) { chunk[i] = simulate_sample(samples[begin + i], m); });
      for (const auto& t : chunk) append_trajectory(out, t);
    }
    if (!out) throw ValidationError("write failed for " + (sdir / "trajectories.bin").string());
  }
}

// ---------------------------------------------------------------------------
// Leakage

std::size_t LeakReport::overlap(std::string_view first, std::string_view second) const {
  for (const auto& e : entries) {
    if ((e.first == first && e.second == second) || (e.first == second && e.second == first)) {
      return e.shared_classes;
    }
  }
  throw ValidationError("no leak entry for " + std::string(first) + " / " + std::string(second));
}

namespace {

std::size_t sorted_overlap(const std::vector<CanonicalForm>& a, const std::vector<CanonicalForm>& b) {
  std::size_t count = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

std::vector<CanonicalForm> distinct(std::vector<CanonicalForm> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

std::size_t class_overlap(const DatasetSplit& a, const DatasetSplit& b) {
  return sorted_overlap(a.distinct_classes(), b.distinct_classes());
}

LeakReport leak_check(std::span<const fs::path> dirs) {
  std::vector<std::pair<std::string, std::vector<CanonicalForm>>> splits;
  for (const auto& dir : dirs) {
    bool any = false;
    for (const char* name : kSplitNames) {
      const auto file = dir / name / "classes.txt";
      if (!fs::exists(file)) continue;
      splits.emplace_back((dir / name).string(), distinct(read_classes(file)));
      any = true;
    }
    if (!any) throw ValidationError(dir.string() + " contains no dataset splits");
  }
  LeakReport report;
  for (std::size_t a = 0; a < splits.size(); ++a) {
    for (std::size_t b = a + 1; b < splits.size(); ++b) {
      report.entries.push_back(
          {splits[a].first, splits[b].first, sorted_overlap(splits[a].second, splits[b].second)});
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Metrics

double mse_k(const Trajectory& pred, const Trajectory& truth, int k) {
  if (pred.particles() != truth.particles()) throw ValidationError("trajectory particle counts differ");
  if (k < 1 || k > pred.frames() || k > truth.frames()) throw ValidationError("k must be in [1, frames]");
  double sum = 0;
  for (int f = 0; f < k; ++f) {
    for (int i = 0; i < truth.particles(); ++i) {
      const Vec2 d = pred.position(f, i) - truth.position(f, i);
      sum += d.x * d.x + d.y * d.y;
    }
  }
  return sum / (static_cast<double>(k) * truth.particles() * 2);
}

double mse_k(const TrajectorySet& pred, const TrajectorySet& truth, int k) {
  if (pred.samples != truth.samples || pred.particles != truth.particles) {
    throw ValidationError("trajectory sets differ in shape");
  }
  if (truth.samples == 0) throw ValidationError("empty trajectory set");
  double sum = 0;
  for (std::size_t s = 0; s < truth.samples; ++s) sum += mse_k(pred.trajectory(s), truth.trajectory(s), k);
  return sum / truth.samples;
}

double stationary_mse(const Trajectory& truth, int observed_frames, int k) {
  if (observed_frames < 1 || k < 1 || observed_frames + k > truth.frames()) {
    throw ValidationError("stationary baseline needs observed_frames + k <= frames");
  }
  double sum = 0;
  for (int f = observed_frames; f < observed_frames + k; ++f) {
    for (int i = 0; i < truth.particles(); ++i) {
      const Vec2 d = truth.position(observed_frames - 1, i) - truth.position(f, i);
      sum += d.x * d.x + d.y * d.y;
    }
  }
  return sum / (static_cast<double>(k) * truth.particles() * 2);
}

EdgeAccuracy edge_accuracy(std::span<const MultiplexNetwork> pred, std::span<const MultiplexNetwork> truth,
                           bool allow_layer_matching) {
  if (pred.size() != truth.size() || truth.empty()) throw ValidationError("prediction and truth counts differ");
  const std::size_t layers = truth[0].layers.size();
  const int n = truth[0].n;
  for (std::size_t s = 0; s < truth.size(); ++s) {
    if (pred[s].n != n || truth[s].n != n || pred[s].layers.size() != layers || truth[s].layers.size() != layers) {
      throw ValidationError("prediction and truth networks differ in shape");
    }
  }
  const int slots = pair_count(n);
  const EdgeMask all = slots == 32 ? ~EdgeMask{0} : (EdgeMask{1} << slots) - 1;
  // correct[t][p]: correct slots when predicted layer p stands for true layer t
  std::vector<std::vector<std::uint64_t>> correct(layers, std::vector<std::uint64_t>(layers, 0));
  for (std::size_t s = 0; s < truth.size(); ++s) {
    for (std::size_t t = 0; t < layers; ++t) {
      for (std::size_t p = 0; p < layers; ++p) {
        const EdgeMask wrong = (pred[s].layers[p].edges() ^ truth[s].layers[t].edges()) & all;
        correct[t][p] += static_cast<std::uint64_t>(slots - std::popcount(wrong));
      }
    }
  }
  const auto kinds = truth[0].layer_kinds();
  std::vector<std::size_t> assignment(layers), best(layers);
  std::iota(assignment.begin(), assignment.end(), std::size_t{0});
  best = assignment;
  if (allow_layer_matching) {
    std::uint64_t best_total = 0;
    do {
      bool ok = true;
      for (std::size_t t = 0; t < layers; ++t) ok = ok && kinds[t] == kinds[assignment[t]];
      if (!ok) continue;
      std::uint64_t total = 0;
      for (std::size_t t = 0; t < layers; ++t) total += correct[t][assignment[t]];
      if (total > best_total) {
        best_total = total;
        best = assignment;
      }
    } while (std::next_permutation(assignment.begin(), assignment.end()));
  }
  EdgeAccuracy acc;
  acc.layer_assignment = best;
  const double per_layer_slots = static_cast<double>(slots) * truth.size();
  std::uint64_t total = 0;
  for (std::size_t t = 0; t < layers; ++t) {
    total += correct[t][best[t]];
    acc.per_layer.push_back(slots == 0 ? 1.0 : correct[t][best[t]] / per_layer_slots);
  }
  acc.overall = slots == 0 ? 1.0 : total / (per_layer_slots * layers);
  return acc;
}

EdgeAccuracy edge_accuracy(const MultiplexNetwork& pred, const MultiplexNetwork& truth, bool allow_layer_matching) {
  return edge_accuracy(std::span(&pred, 1), std::span(&truth, 1), allow_layer_matching);
}

}  // namespace mxiso
