#pragma once

// Small labeled graphs (n <= 8), permutations, automorphism groups and
// canonical forms. Edge sets are bitmasks over the (n choose 2) unordered
// pairs in row-major lexicographic order: (0,1), (0,2), ..., (0,n-1), (1,2), ...

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mxiso {

inline constexpr int kMaxVertices = 8;

using EdgeMask = std::uint32_t;

enum class GraphKind { pairwise, collective };

std::string_view to_string(GraphKind kind);
GraphKind parse_graph_kind(std::string_view text);

/// Number of unordered pairs on n vertices.
constexpr int pair_count(int n) { return n * (n - 1) / 2; }

/// Position of the pair {i, j} (i != j) in lexicographic pair order.
constexpr int pair_index(int n, int i, int j) {
  if (i > j) std::swap(i, j);
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

std::pair<int, int> pair_at(int n, int index);

std::uint64_t factorial(int n);
std::uint64_t binomial(int n, int k);

class Permutation {
 public:
  Permutation() = default;
  /// Throws ValidationError unless `mapping` is a bijection on 0..size-1.
  explicit Permutation(std::span<const int> mapping);
  Permutation(std::initializer_list<int> mapping);

  static Permutation identity(int n);

  int size() const { return n_; }
  int operator[](int v) const { return map_[static_cast<std::size_t>(v)]; }

  /// (*this ∘ inner)(v) = (*this)[inner[v]].
  Permutation compose(const Permutation& inner) const;
  Permutation inverse() const;
  bool is_identity() const;

  std::vector<int> mapping() const;
  std::string to_string() const;

  /// Image of a pair-index edge mask under this relabeling.
  EdgeMask apply(EdgeMask edges) const;

  friend bool operator==(const Permutation&, const Permutation&) = default;
  friend auto operator<=>(const Permutation&, const Permutation&) = default;

 private:
  std::uint8_t n_ = 0;
  std::array<std::uint8_t, kMaxVertices> map_{};
};

/// All permutations of n labels in lexicographic order, with O(n^2) ranking.
class PermutationTable {
 public:
  explicit PermutationTable(int n);
  int n() const { return n_; }
  std::size_t size() const { return perms_.size(); }
  const Permutation& operator[](std::size_t rank) const { return perms_[rank]; }
  std::span<const Permutation> all() const { return perms_; }
  std::size_t rank(const Permutation& p) const;

 private:
  int n_;
  std::vector<Permutation> perms_;
};

/// Shared, lazily built table for n <= kMaxVertices.
const PermutationTable& permutation_table(int n);

class LabeledGraph {
 public:
  LabeledGraph() = default;
  /// Validates the mask range and, for collective graphs, the clique shape.
  LabeledGraph(int n, EdgeMask edges, GraphKind kind = GraphKind::pairwise);

  static LabeledGraph from_edges(int n, std::span<const std::pair<int, int>> edges,
                                 GraphKind kind = GraphKind::pairwise);
  /// Clique on the vertices set in `charged` (bit v = vertex v).
  static LabeledGraph collective(int n, std::uint32_t charged);
  static LabeledGraph empty(int n, GraphKind kind = GraphKind::pairwise);
  static LabeledGraph complete(int n, GraphKind kind = GraphKind::pairwise);

  int n() const { return n_; }
  EdgeMask edges() const { return edges_; }
  GraphKind kind() const { return kind_; }

  bool has_edge(int i, int j) const;
  int edge_count() const;
  int degree(int v) const;
  std::vector<std::pair<int, int>> edge_list() const;

  /// Vertices touched by an edge. For collective graphs this is the charged set.
  std::uint32_t covered_vertices() const;
  /// Charged-node count of a collective layer (0 for the empty clique).
  int charged_count() const;

  LabeledGraph relabeled(const Permutation& p) const;

  friend bool operator==(const LabeledGraph&, const LabeledGraph&) = default;

 private:
  int n_ = 0;
  EdgeMask edges_ = 0;
  GraphKind kind_ = GraphKind::pairwise;
};

/// `n=<int> kind=<p|c> edges=<i-j,...>`
std::string format_graph(const LabeledGraph& g);
LabeledGraph parse_graph(std::string_view line);
/// Bare `i-j,i-j` list, pairs ascending.
std::string format_edge_list(const LabeledGraph& g);
EdgeMask parse_edge_list(int n, std::string_view text);

struct AutomorphismGroup {
  int graph_n = 0;
  std::vector<Permutation> elements;  // sorted, identity first

  std::size_t order() const { return elements.size(); }
  bool contains(const Permutation& p) const;
};

class CanonicalForm {
 public:
  CanonicalForm() = default;
  explicit CanonicalForm(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  std::string hex() const;
  static CanonicalForm from_hex(std::string_view hex);

  friend bool operator==(const CanonicalForm&, const CanonicalForm&) = default;
  friend auto operator<=>(const CanonicalForm&, const CanonicalForm&) = default;

 private:
  std::vector<std::uint8_t> bytes_;
};

struct CanonicalFormHash {
  std::size_t operator()(const CanonicalForm& c) const noexcept;
};

/// Bytes per layer in packed edge-flag encodings: ceil((n choose 2) / 8).
int layer_byte_count(int n);
/// Little-endian bit packing: pair i lives in byte i/8, bit i%8.
void append_mask_bytes(int n, EdgeMask mask, std::vector<std::uint8_t>& out);
EdgeMask read_mask_bytes(int n, std::span<const std::uint8_t> bytes);

/// Exactly the permutations fixing the edge set. Throws ResourceLimitError if n > 8.
AutomorphismGroup automorphisms(const LabeledGraph& g);
/// Permutations fixing every layer at once.
AutomorphismGroup automorphisms(std::span<const LabeledGraph> layers);

/// Complement within all unordered pairs. Pairwise graphs only.
LabeledGraph complement(const LabeledGraph& g);

/// Lexicographically minimal tuple of layer masks over all relabelings,
/// encoded layer after layer.
CanonicalForm canonical_form(std::span<const LabeledGraph> layers);
CanonicalForm canonical_form(const LabeledGraph& g);

/// True iff one permutation maps every layer of `a` onto the matching layer of `b`.
bool is_isomorphic(std::span<const LabeledGraph> a, std::span<const LabeledGraph> b);
bool is_isomorphic(const LabeledGraph& a, const LabeledGraph& b);

}  // namespace mxiso
