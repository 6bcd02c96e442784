#include "mxiso/multiplex.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "mxiso/errors.hpp"
#include "mxiso/parallel.hpp"
#include "mxiso/version.hpp"

namespace mxiso {

namespace {

void check_basis_n(int n) {
  if (n < 2) throw ValidationError("basis enumeration needs n >= 2, got " + std::to_string(n));
  if (n > kMaxVertices) {
    throw ResourceLimitError("basis enumeration supports n <= " + std::to_string(kMaxVertices));
  }
}

IsoClass make_class(MultiplexNetwork network) {
  IsoClass c;
  const auto group = automorphisms(network.layers);
  c.orbit_size = factorial(network.n) / group.order();
  c.class_id = network.canonical();
  c.representative = std::move(network);
  return c;
}

std::vector<int> edge_counts(const MultiplexNetwork& m) {
  std::vector<int> counts;
  counts.reserve(m.layers.size());
  for (const auto& g : m.layers) counts.push_back(g.edge_count());
  return counts;
}

/// Graph whose edge mask is the first layer stored in a single-layer class id.
LabeledGraph graph_from_class_id(int n, const CanonicalForm& id, GraphKind kind) {
  return LabeledGraph(n, read_mask_bytes(n, id.bytes()), kind);
}

}  // namespace

MultiplexNetwork::MultiplexNetwork(std::vector<LabeledGraph> layers_in) : layers(std::move(layers_in)) {
  if (layers.empty()) throw ValidationError("a multiplex network needs at least one layer");
  n = layers.front().n();
  for (const auto& g : layers) {
    if (g.n() != n) throw ValidationError("multiplex layers must share the same vertex set");
  }
}

std::vector<GraphKind> MultiplexNetwork::layer_kinds() const {
  std::vector<GraphKind> kinds;
  for (const auto& g : layers) kinds.push_back(g.kind());
  return kinds;
}

MultiplexNetwork MultiplexNetwork::relabeled(const Permutation& p) const {
  std::vector<LabeledGraph> out;
  out.reserve(layers.size());
  for (const auto& g : layers) out.push_back(g.relabeled(p));
  return MultiplexNetwork(std::move(out));
}

std::uint64_t IsoClassCatalog::total_orbit_size() const {
  std::uint64_t total = 0;
  for (const auto& c : classes) total += c.orbit_size;
  return total;
}

std::string layer_kinds_to_string(std::span<const GraphKind> kinds) {
  std::string s;
  for (auto k : kinds) {
    if (!s.empty()) s += ',';
    s += to_string(k);
  }
  return s;
}

std::string IsoClassCatalog::reference() const {
  return "n=" + std::to_string(n) + ";layers=" + layer_kinds_to_string(layer_kinds) +
         ";classes=" + std::to_string(classes.size());
}

CatalogIndex::CatalogIndex(const IsoClassCatalog& catalog) {
  index_.reserve(catalog.classes.size());
  for (std::size_t i = 0; i < catalog.classes.size(); ++i) index_.emplace(catalog.classes[i].class_id, i);
}

std::optional<std::size_t> CatalogIndex::find(const CanonicalForm& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

LayerStack LayerStack::of(const LabeledGraph& g) { return of(MultiplexNetwork({g})); }

LayerStack LayerStack::of(const MultiplexNetwork& m) { return LayerStack{m, ::mxiso::automorphisms(m.layers)}; }

bool catalog_order(const IsoClass& a, const IsoClass& b) {
  const auto ea = edge_counts(a.representative);
  const auto eb = edge_counts(b.representative);
  if (ea != eb) return ea < eb;
  return a.class_id < b.class_id;
}

// ---------------------------------------------------------------------------
// Basis networks

std::vector<IsoClass> enumerate_pairwise_basis(int n) {
  check_basis_n(n);
  // Every graph with e+1 edges is some graph with e edges plus one edge, so
  // growing canonical representatives level by level reaches every class.
  std::vector<IsoClass> result;
  std::vector<LabeledGraph> level{LabeledGraph::empty(n)};
  const int pairs = pair_count(n);
  for (int e = 0; e <= pairs; ++e) {
    std::vector<LabeledGraph> next;
    std::unordered_set<CanonicalForm, CanonicalFormHash> seen;
    for (const auto& g : level) {
      result.push_back(make_class(MultiplexNetwork({g})));
      for (int bit = 0; bit < pairs; ++bit) {
        if ((g.edges() >> bit) & 1u) continue;
        const LabeledGraph grown(n, g.edges() | (EdgeMask{1} << bit));
        CanonicalForm id = canonical_form(grown);
        if (seen.insert(id).second) next.push_back(graph_from_class_id(n, id, GraphKind::pairwise));
      }
    }
    level = std::move(next);
  }
  std::sort(result.begin(), result.end(), catalog_order);
  return result;
}

std::vector<IsoClass> enumerate_collective_basis(int n) {
  check_basis_n(n);
  std::vector<IsoClass> result;
  for (int k = 0; k <= n; ++k) {
    if (k == 1) continue;  // a single charge has no partner; same edge set as k = 0
    const std::uint32_t charged = (1u << k) - 1u;
    IsoClass c;
    c.representative = MultiplexNetwork({LabeledGraph::collective(n, charged)});
    c.orbit_size = k == 0 ? 1 : binomial(n, k);
    c.class_id = c.representative.canonical();
    result.push_back(std::move(c));
  }
  return result;
}

std::vector<IsoClass> enumerate_basis(int n, GraphKind kind) {
  return kind == GraphKind::pairwise ? enumerate_pairwise_basis(n) : enumerate_collective_basis(n);
}

std::vector<IsoClass> sparse_half(std::span<const IsoClass> classes) {
  std::vector<IsoClass> kept;
  for (const auto& c : classes) {
    if (c.representative.layer_count() != 1 || c.representative.layers[0].kind() != GraphKind::pairwise) {
      throw ValidationError("sparse_half expects single-layer pairwise classes");
    }
    const auto& g = c.representative.layers[0];
    const int pairs = pair_count(g.n());
    const auto complement_id = canonical_form(complement(g));
    const int twice = 2 * g.edge_count();
    bool keep;
    if (complement_id == c.class_id) {
      keep = true;  // self-complementary
    } else if (twice != pairs) {
      keep = twice < pairs;
    } else {
      keep = c.class_id < complement_id;
    }
    if (keep) kept.push_back(c);
  }
  return kept;
}

// ---------------------------------------------------------------------------
// Combining layers

std::vector<PairingClass> combine_layers(const LayerStack& first, const LayerStack& second) {
  const int n = first.network.n;
  if (second.network.n != n) {
    throw ValidationError("combine_layers: vertex counts differ (" + std::to_string(n) + " vs " +
                          std::to_string(second.network.n) + ")");
  }
  const auto& table = permutation_table(n);
  const auto& first_aut = first.automorphisms.elements;
  const auto& second_aut = second.automorphisms.elements;

  std::vector<char> visited(table.size(), 0);
  std::vector<PairingClass> classes;
  std::deque<Permutation> queue;
  for (std::size_t r = 0; r < table.size(); ++r) {
    if (visited[r]) continue;
    PairingClass cls;
    visited[r] = 1;
    queue.push_back(table[r]);
    // Close the class: automorphisms of the first stack act on its labels,
    // those of the fixed second stack act on label positions.
    while (!queue.empty()) {
      const Permutation p = queue.front();
      queue.pop_front();
      cls.members.push_back(p);
      auto visit = [&](const Permutation& q) {
        const std::size_t rank = table.rank(q);
        if (!visited[rank]) {
          visited[rank] = 1;
          queue.push_back(q);
        }
      };
      for (const auto& a : first_aut) visit(p.compose(a));
      for (const auto& b : second_aut) visit(b.compose(p));
    }
    std::sort(cls.members.begin(), cls.members.end());
    cls.representative = cls.members.front();

    const FlattenedGraph flat = flatten(first, second, cls.representative);
    cls.orbit_size = factorial(n) / flat.automorphisms.order();
    cls.network = flat.network;
    classes.push_back(std::move(cls));
  }
  return classes;
}

FlattenedGraph flatten(const LayerStack& first, const LayerStack& second, const Permutation& pairing) {
  const int n = first.network.n;
  if (second.network.n != n || pairing.size() != n) throw ValidationError("flatten: size mismatch");
  std::vector<LabeledGraph> layers;
  for (const auto& g : first.network.layers) layers.push_back(g.relabeled(pairing));
  for (const auto& g : second.network.layers) layers.push_back(g);

  FlattenedGraph flat;
  flat.network = MultiplexNetwork(std::move(layers));
  flat.automorphisms.graph_n = n;
  const Permutation inverse = pairing.inverse();
  for (const auto& a : first.automorphisms.elements) {
    const Permutation conjugated = pairing.compose(a).compose(inverse);
    if (second.automorphisms.contains(conjugated)) flat.automorphisms.elements.push_back(conjugated);
  }
  std::sort(flat.automorphisms.elements.begin(), flat.automorphisms.elements.end());
  return flat;
}

FlattenedGraph flatten(const PairingClass& pairing_class) {
  return LayerStack::of(pairing_class.network);
}

// ---------------------------------------------------------------------------
// Catalogs

namespace {

void check_basis_sets(std::span<const std::vector<IsoClass>> basis_sets, int n) {
  if (basis_sets.empty() || basis_sets.size() > 3) {
    throw ValidationError("multiplex enumeration supports 1 to 3 layers, got " +
                          std::to_string(basis_sets.size()));
  }
  for (const auto& set : basis_sets) {
    if (set.empty()) throw ValidationError("empty basis set");
    for (const auto& c : set) {
      if (c.representative.n != n || c.representative.layer_count() != 1) {
        throw ValidationError("basis classes must be single layers on n=" + std::to_string(n));
      }
    }
  }
}

std::vector<GraphKind> kinds_of(std::span<const std::vector<IsoClass>> basis_sets) {
  std::vector<GraphKind> kinds;
  for (const auto& set : basis_sets) kinds.push_back(set.front().representative.layers[0].kind());
  return kinds;
}

std::vector<std::size_t> decode_tuple(std::size_t index, std::span<const std::vector<IsoClass>> sets) {
  std::vector<std::size_t> tuple(sets.size());
  for (std::size_t l = sets.size(); l-- > 0;) {
    tuple[l] = index % sets[l].size();
    index /= sets[l].size();
  }
  return tuple;
}

std::size_t tuple_count(std::span<const std::vector<IsoClass>> sets) {
  std::size_t total = 1;
  for (const auto& s : sets) total *= s.size();
  return total;
}

IsoClassCatalog finish_catalog(int n, std::vector<GraphKind> kinds, std::vector<IsoClass> classes,
                               std::string method) {
  IsoClassCatalog catalog;
  catalog.n = n;
  catalog.layer_kinds = std::move(kinds);
  std::unordered_set<CanonicalForm, CanonicalFormHash> seen;
  seen.reserve(classes.size());
  for (auto& c : classes) {
    if (seen.insert(c.class_id).second) catalog.classes.push_back(std::move(c));
  }
  std::sort(catalog.classes.begin(), catalog.classes.end(), catalog_order);
  catalog.metadata.method = std::move(method);
  catalog.metadata.generator_version = kGenerator;
  return catalog;
}

}  // namespace

IsoClassCatalog enumerate_multiplex(std::span<const std::vector<IsoClass>> basis_sets, int n,
                                    const EnumerationOptions& options) {
  check_basis_sets(basis_sets, n);
  std::vector<std::vector<LayerStack>> stacks(basis_sets.size());
  for (std::size_t l = 0; l < basis_sets.size(); ++l) {
    for (const auto& c : basis_sets[l]) stacks[l].push_back(LayerStack::of(c.representative));
  }

  const std::size_t tuples = tuple_count(basis_sets);
  std::vector<std::vector<IsoClass>> per_tuple(tuples);
  parallel_for(tuples, options.threads, [&](std::size_t t) {
    const auto tuple = decode_tuple(t, basis_sets);
    std::vector<LayerStack> current{stacks[0][tuple[0]]};
    for (std::size_t l = 1; l < tuple.size(); ++l) {
      std::vector<LayerStack> next;
      for (const auto& stack : current) {
        // Shared automorphisms are recomputed per class representative.
        for (auto& pc : combine_layers(stack, stacks[l][tuple[l]])) next.push_back(flatten(pc));
      }
      current = std::move(next);
    }
    auto& out = per_tuple[t];
    out.reserve(current.size());
    for (auto& stack : current) {
      IsoClass c;
      c.orbit_size = factorial(n) / stack.automorphisms.order();
      c.class_id = stack.network.canonical();
      c.representative = std::move(stack.network);
      out.push_back(std::move(c));
    }
  });

  std::vector<IsoClass> all;
  for (auto& v : per_tuple) {
    for (auto& c : v) all.push_back(std::move(c));
    v.clear();
    v.shrink_to_fit();
  }
  return finish_catalog(n, kinds_of(basis_sets), std::move(all), "automorphism");
}

std::vector<std::vector<IsoClass>> basis_sets_for(int n, std::span<const GraphKind> kinds) {
  std::vector<std::vector<IsoClass>> sets;
  std::vector<IsoClass> pairwise, collective;
  for (auto kind : kinds) {
    auto& cache = kind == GraphKind::pairwise ? pairwise : collective;
    if (cache.empty()) cache = enumerate_basis(n, kind);
    sets.push_back(cache);
  }
  return sets;
}

IsoClassCatalog enumerate_multiplex(int n, std::span<const GraphKind> kinds, const EnumerationOptions& options) {
  const auto sets = basis_sets_for(n, kinds);
  return enumerate_multiplex(sets, n, options);
}

std::vector<LabeledGraph> labeled_members(const LabeledGraph& representative) {
  std::vector<EdgeMask> masks;
  for (const auto& p : permutation_table(representative.n()).all()) masks.push_back(p.apply(representative.edges()));
  std::sort(masks.begin(), masks.end());
  masks.erase(std::unique(masks.begin(), masks.end()), masks.end());
  std::vector<LabeledGraph> out;
  out.reserve(masks.size());
  for (EdgeMask m : masks) out.emplace_back(representative.n(), m, representative.kind());
  return out;
}

IsoClassCatalog brute_force_multiplex(std::span<const std::vector<IsoClass>> basis_sets, int n,
                                      std::uint64_t tuple_limit) {
  check_basis_sets(basis_sets, n);
  std::vector<std::vector<LabeledGraph>> members(basis_sets.size());
  std::uint64_t total = 1;
  for (std::size_t l = 0; l < basis_sets.size(); ++l) {
    for (const auto& c : basis_sets[l]) {
      for (auto& g : labeled_members(c.representative.layers[0])) members[l].push_back(g);
    }
    total *= members[l].size();
    if (total > tuple_limit) {
      throw ResourceLimitError("brute-force oracle would enumerate more than " + std::to_string(tuple_limit) +
                               " labeled networks");
    }
  }

  struct Group {
    std::vector<LabeledGraph> layers;
    std::uint64_t count = 0;
  };
  std::vector<Group> groups;
  // Buckets keyed by cheap invariants (layerwise sorted degree sequences) so
  // isomorphism tests only run between plausible matches.
  std::map<std::vector<int>, std::vector<std::size_t>> buckets;

  std::vector<std::size_t> cursor(members.size(), 0);
  for (std::uint64_t t = 0; t < total; ++t) {
    std::vector<LabeledGraph> layers;
    for (std::size_t l = 0; l < members.size(); ++l) layers.push_back(members[l][cursor[l]]);

    std::vector<int> key;
    for (const auto& g : layers) {
      std::vector<int> degrees;
      for (int v = 0; v < n; ++v) degrees.push_back(g.degree(v));
      std::sort(degrees.begin(), degrees.end());
      key.insert(key.end(), degrees.begin(), degrees.end());
    }
    auto& bucket = buckets[key];
    bool placed = false;
    for (std::size_t gi : bucket) {
      if (is_isomorphic(layers, groups[gi].layers)) {
        ++groups[gi].count;
        placed = true;
        break;
      }
    }
    if (!placed) {
      bucket.push_back(groups.size());
      groups.push_back(Group{layers, 1});
    }

    for (std::size_t l = members.size(); l-- > 0;) {
      if (++cursor[l] < members[l].size()) break;
      cursor[l] = 0;
    }
  }

  std::vector<IsoClass> classes;
  classes.reserve(groups.size());
  for (auto& g : groups) {
    IsoClass c;
    c.representative = MultiplexNetwork(std::move(g.layers));
    c.orbit_size = g.count;
    c.class_id = c.representative.canonical();
    classes.push_back(std::move(c));
  }
  return finish_catalog(n, kinds_of(basis_sets), std::move(classes), "brute-force");
}

IsoClassCatalog expand_sparse_catalog(const IsoClassCatalog& sparse_catalog) {
  std::vector<std::size_t> pairwise_layers;
  for (std::size_t l = 0; l < sparse_catalog.layer_kinds.size(); ++l) {
    if (sparse_catalog.layer_kinds[l] == GraphKind::pairwise) pairwise_layers.push_back(l);
  }
  std::vector<IsoClass> classes;
  for (const auto& c : sparse_catalog.classes) {
    for (std::uint32_t subset = 0; subset < (1u << pairwise_layers.size()); ++subset) {
      auto layers = c.representative.layers;
      for (std::size_t i = 0; i < pairwise_layers.size(); ++i) {
        if ((subset >> i) & 1u) layers[pairwise_layers[i]] = complement(layers[pairwise_layers[i]]);
      }
      IsoClass e;
      e.representative = MultiplexNetwork(std::move(layers));
      e.orbit_size = c.orbit_size;  // complements share automorphisms
      e.class_id = e.representative.canonical();
      classes.push_back(std::move(e));
    }
  }
  auto out = finish_catalog(sparse_catalog.n, sparse_catalog.layer_kinds, std::move(classes),
                            sparse_catalog.metadata.method + "+complements");
  return out;
}

CatalogComparison compare_catalogs(const IsoClassCatalog& a, const IsoClassCatalog& b) {
  CatalogComparison cmp;
  std::unordered_map<CanonicalForm, std::uint64_t, CanonicalFormHash> orbits;
  for (const auto& c : a.classes) orbits.emplace(c.class_id, c.orbit_size);
  std::size_t matched = 0;
  for (const auto& c : b.classes) {
    auto it = orbits.find(c.class_id);
    if (it == orbits.end()) {
      ++cmp.only_in_second;
      continue;
    }
    ++matched;
    if (it->second != c.orbit_size) ++cmp.orbit_mismatches;
  }
  cmp.only_in_first = a.classes.size() - matched;
  cmp.equal = a.n == b.n && a.layer_kinds == b.layer_kinds && cmp.only_in_first == 0 &&
              cmp.only_in_second == 0 && cmp.orbit_mismatches == 0;
  return cmp;
}

// ---------------------------------------------------------------------------
// Catalog files

void write_catalog(std::ostream& out, const IsoClassCatalog& catalog) {
  out << "# mxiso-catalog v1\n";
  out << "# n=" << catalog.n << '\n';
  out << "# layers=" << layer_kinds_to_string(catalog.layer_kinds) << '\n';
  out << "# generator=" << catalog.metadata.generator_version << '\n';
  out << "# method=" << catalog.metadata.method << '\n';
  out << "# seed=" << catalog.metadata.seed << '\n';
  if (!catalog.metadata.timestamp.empty()) out << "# timestamp=" << catalog.metadata.timestamp << '\n';
  out << "# classes=" << catalog.classes.size() << '\n';
  for (const auto& c : catalog.classes) {
    out << "class=" << c.class_id.hex() << " orbit=" << c.orbit_size << " layers=[";
    for (std::size_t l = 0; l < c.representative.layers.size(); ++l) {
      if (l) out << ';';
      out << format_edge_list(c.representative.layers[l]);
    }
    out << "]\n";
  }
}

IsoClassCatalog read_catalog(std::istream& in) {
  IsoClassCatalog catalog;
  catalog.n = -1;
  std::optional<std::size_t> declared;
  bool have_layers = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "n") {
        catalog.n = std::stoi(value);
      } else if (key == "layers") {
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) catalog.layer_kinds.push_back(parse_graph_kind(item));
        have_layers = true;
      } else if (key == "generator") {
        catalog.metadata.generator_version = value;
      } else if (key == "method") {
        catalog.metadata.method = value;
      } else if (key == "seed") {
        catalog.metadata.seed = std::stoull(value);
      } else if (key == "timestamp") {
        catalog.metadata.timestamp = value;
      } else if (key == "classes") {
        declared = std::stoull(value);
      }
      continue;
    }
    if (catalog.n < 1 || !have_layers) throw ValidationError("catalog header lacks n or layers");
    const auto where = " (line " + std::to_string(line_no) + ")";
    if (line.rfind("class=", 0) != 0) throw ValidationError("malformed catalog line" + where);
    const auto orbit_pos = line.find(" orbit=");
    const auto layers_pos = line.find(" layers=[");
    if (orbit_pos == std::string::npos || layers_pos == std::string::npos || line.back() != ']') {
      throw ValidationError("malformed catalog line" + where);
    }
    IsoClass c;
    c.class_id = CanonicalForm::from_hex(line.substr(6, orbit_pos - 6));
    c.orbit_size = std::stoull(line.substr(orbit_pos + 7, layers_pos - orbit_pos - 7));
    const std::string body = line.substr(layers_pos + 9, line.size() - layers_pos - 10);
    std::vector<LabeledGraph> layers;
    std::size_t start = 0;
    for (std::size_t l = 0; l < catalog.layer_kinds.size(); ++l) {
      std::size_t end = body.find(';', start);
      if (end == std::string::npos) end = body.size();
      layers.emplace_back(catalog.n, parse_edge_list(catalog.n, body.substr(start, end - start)),
                          catalog.layer_kinds[l]);
      start = end + 1;
    }
    c.representative = MultiplexNetwork(std::move(layers));
    if (c.representative.canonical() != c.class_id) {
      throw ValidationError("catalog class id does not match its representative" + where);
    }
    catalog.classes.push_back(std::move(c));
  }
  if (catalog.n < 1 || !have_layers) throw ValidationError("catalog header lacks n or layers");
  if (declared && *declared != catalog.classes.size()) {
    throw ValidationError("catalog declares " + std::to_string(*declared) + " classes but lists " +
                          std::to_string(catalog.classes.size()));
  }
  return catalog;
}

void save_catalog(const std::string& path, const IsoClassCatalog& catalog) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  write_catalog(out, catalog);
  if (!out) throw ValidationError("failed writing '" + path + "'");
}

IsoClassCatalog load_catalog(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open catalog '" + path + "'");
  return read_catalog(in);
}

}  // namespace mxiso
