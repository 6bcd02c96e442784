#pragma once

// Multiplex isomorphism classes. Basis classes are enumerated per layer kind
// and combined layer by layer: every vertex-aligned way of stacking two
// labeled graphs is a pairing permutation applied to the first graph's labels,
// and pairings are grouped by closing under the automorphisms of both inputs.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mxiso/graph.hpp"

namespace mxiso {

struct MultiplexNetwork {
  int n = 0;
  std::vector<LabeledGraph> layers;

  MultiplexNetwork() = default;
  /// Throws ValidationError unless all layers share n and there is at least one.
  explicit MultiplexNetwork(std::vector<LabeledGraph> layers);

  std::size_t layer_count() const { return layers.size(); }
  std::vector<GraphKind> layer_kinds() const;
  MultiplexNetwork relabeled(const Permutation& p) const;
  CanonicalForm canonical() const { return canonical_form(layers); }

  friend bool operator==(const MultiplexNetwork&, const MultiplexNetwork&) = default;
};

struct IsoClass {
  MultiplexNetwork representative;
  std::uint64_t orbit_size = 0;  // labeled networks in the class
  CanonicalForm class_id;
};

struct GenerationMetadata {
  std::string method;
  std::uint64_t seed = 0;
  std::string generator_version;
  // Left empty by default so catalog files stay byte-reproducible.
  std::string timestamp;
};

struct IsoClassCatalog {
  int n = 0;
  std::vector<GraphKind> layer_kinds;
  std::vector<IsoClass> classes;
  GenerationMetadata metadata;

  std::size_t size() const { return classes.size(); }
  std::uint64_t total_orbit_size() const;
  /// Short identity string, e.g. "n=5;layers=pairwise,collective;classes=454".
  std::string reference() const;
};

/// Hash index from class id to catalog position.
class CatalogIndex {
 public:
  explicit CatalogIndex(const IsoClassCatalog& catalog);
  std::optional<std::size_t> find(const CanonicalForm& id) const;
  bool contains(const CanonicalForm& id) const { return find(id).has_value(); }

 private:
  std::unordered_map<CanonicalForm, std::size_t, CanonicalFormHash> index_;
};

/// A (possibly flattened) stack of layers together with the permutations that
/// fix every layer at once.
struct LayerStack {
  MultiplexNetwork network;
  AutomorphismGroup automorphisms;

  static LayerStack of(const LabeledGraph& g);
  static LayerStack of(const MultiplexNetwork& m);
};

/// A flattened multiplex pinned to one pairing, usable as combine_layers input.
using FlattenedGraph = LayerStack;

/// One equivalence class of pairings produced by combine_layers.
struct PairingClass {
  Permutation representative;        // applied to the first stack's labels
  std::vector<Permutation> members;  // all pairings in the class, sorted
  MultiplexNetwork network;          // representative(first) layers, then second's
  std::uint64_t orbit_size = 0;      // labeled multiplex networks in the class

  std::uint64_t pairing_orbit_size() const { return members.size(); }
};

/// Stable sort order for catalogs: layerwise edge counts, then class id bytes.
bool catalog_order(const IsoClass& a, const IsoClass& b);

std::vector<IsoClass> enumerate_pairwise_basis(int n);
std::vector<IsoClass> enumerate_collective_basis(int n);
std::vector<IsoClass> enumerate_basis(int n, GraphKind kind);

/// Keeps one graph of each complement pair (the sparser one); self-complementary
/// classes are kept once.
std::vector<IsoClass> sparse_half(std::span<const IsoClass> classes);

/// Groups all n! pairings of `first` against a statically ordered `second`.
/// Pairing p relabels `first` by p; p ~ b∘p∘a for a ∈ Aut(first), b ∈ Aut(second).
std::vector<PairingClass> combine_layers(const LayerStack& first, const LayerStack& second);

/// Stacks `first` relabeled by `pairing` on top of `second` and keeps only the
/// automorphisms both agree on.
FlattenedGraph flatten(const LayerStack& first, const LayerStack& second, const Permutation& pairing);
FlattenedGraph flatten(const PairingClass& pairing_class);

struct EnumerationOptions {
  unsigned threads = 0;  // 0 = hardware concurrency
};

/// Full catalog of multiplex classes with one basis class per layer drawn from
/// each set. Layers are added left to right, flattening after each step.
IsoClassCatalog enumerate_multiplex(std::span<const std::vector<IsoClass>> basis_sets, int n,
                                    const EnumerationOptions& options = {});

/// Convenience: full basis sets for the given kinds.
std::vector<std::vector<IsoClass>> basis_sets_for(int n, std::span<const GraphKind> kinds);
IsoClassCatalog enumerate_multiplex(int n, std::span<const GraphKind> kinds,
                                    const EnumerationOptions& options = {});

/// Reference method: lists every labeled layer tuple drawn from the basis
/// classes and groups them with pairwise isomorphism tests.
inline constexpr std::uint64_t kBruteForceTupleLimit = std::uint64_t{1} << 20;
IsoClassCatalog brute_force_multiplex(std::span<const std::vector<IsoClass>> basis_sets, int n,
                                      std::uint64_t tuple_limit = kBruteForceTupleLimit);

/// Every labeled graph isomorphic to the representative of a single-layer class.
std::vector<LabeledGraph> labeled_members(const LabeledGraph& representative);

/// Rebuilds a full catalog from one enumerated over sparse halves of every
/// pairwise basis set, by complementing each pairwise layer in every combination.
IsoClassCatalog expand_sparse_catalog(const IsoClassCatalog& sparse_catalog);

struct CatalogComparison {
  bool equal = false;
  std::size_t only_in_first = 0;
  std::size_t only_in_second = 0;
  std::size_t orbit_mismatches = 0;
};

/// Compares class-id sets and per-class orbit sizes.
CatalogComparison compare_catalogs(const IsoClassCatalog& a, const IsoClassCatalog& b);

// Catalog text format:
//   # mxiso-catalog v1
//   # n=<int>
//   # layers=<kind,kind,...>
//   # generator=<version>
//   # method=<name>
//   # seed=<int>
//   # classes=<count>
//   class=<hex> orbit=<int> layers=[<edge list>;<edge list>;...]
void write_catalog(std::ostream& out, const IsoClassCatalog& catalog);
IsoClassCatalog read_catalog(std::istream& in);
void save_catalog(const std::string& path, const IsoClassCatalog& catalog);
IsoClassCatalog load_catalog(const std::string& path);

std::string layer_kinds_to_string(std::span<const GraphKind> kinds);

}  // namespace mxiso
