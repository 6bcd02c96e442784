#include "mxiso/graph.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>

#include "mxiso/errors.hpp"

namespace mxiso {

namespace {

struct PairTables {
  // pairs[n][index] = (i, j)
  std::array<std::array<std::pair<std::uint8_t, std::uint8_t>, 28>, kMaxVertices + 1> pairs{};
  // index[n][i][j]
  std::array<std::array<std::array<std::uint8_t, kMaxVertices>, kMaxVertices>, kMaxVertices + 1>
      index{};

  PairTables() {
    for (int n = 0; n <= kMaxVertices; ++n) {
      int k = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          pairs[n][k] = {static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(j)};
          index[n][i][j] = index[n][j][i] = static_cast<std::uint8_t>(k);
          ++k;
        }
      }
    }
  }
};

const PairTables& tables() {
  static const PairTables t;
  return t;
}

void check_size(int n) {
  if (n < 1) throw ValidationError("graph needs at least one vertex, got n=" + std::to_string(n));
  if (n > kMaxVertices) {
    throw ResourceLimitError("graph size n=" + std::to_string(n) + " exceeds the supported limit of " +
                             std::to_string(kMaxVertices));
  }
}

EdgeMask full_mask(int n) {
  const int m = pair_count(n);
  return m == 32 ? ~EdgeMask{0} : ((EdgeMask{1} << m) - 1);
}

using Adjacency = std::array<std::uint8_t, kMaxVertices>;

Adjacency adjacency(const LabeledGraph& g) {
  Adjacency adj{};
  const auto& t = tables();
  for (EdgeMask m = g.edges(); m != 0; m &= m - 1) {
    auto [i, j] = t.pairs[g.n()][std::countr_zero(m)];
    adj[i] |= static_cast<std::uint8_t>(1u << j);
    adj[j] |= static_cast<std::uint8_t>(1u << i);
  }
  return adj;
}

/// Per-vertex degree tuple across layers, packed 4 bits per layer.
std::array<std::uint64_t, kMaxVertices> signatures(std::span<const Adjacency> adj, int n) {
  std::array<std::uint64_t, kMaxVertices> sig{};
  for (int v = 0; v < n; ++v) {
    std::uint64_t s = 0;
    for (const auto& a : adj) s = (s << 4) | static_cast<std::uint64_t>(std::popcount(a[v]));
    sig[v] = s;
  }
  return sig;
}

void check_layers(std::span<const LabeledGraph> layers) {
  if (layers.empty()) throw ValidationError("at least one layer is required");
  if (layers.size() > 16) throw ValidationError("at most 16 layers are supported");
  const int n = layers.front().n();
  check_size(n);
  for (const auto& g : layers) {
    if (g.n() != n) {
      throw ValidationError("layer vertex counts differ: " + std::to_string(n) + " vs " +
                            std::to_string(g.n()));
    }
  }
}

/// Enumerates bijections mapping every layer of `a` onto the matching layer of
/// `b`, pruned by degree signatures and partial adjacency consistency. The
/// visitor returns false to stop the search.
class MappingSearch {
 public:
  MappingSearch(std::span<const LabeledGraph> a, std::span<const LabeledGraph> b)
      : n_(a.front().n()), layers_(a.size()) {
    for (std::size_t l = 0; l < layers_; ++l) {
      adj_a_.push_back(adjacency(a[l]));
      adj_b_.push_back(adjacency(b[l]));
    }
    sig_a_ = signatures(adj_a_, n_);
    sig_b_ = signatures(adj_b_, n_);
  }

  template <typename Visitor>
  void run(Visitor&& visit) {
    std::array<int, kMaxVertices> image{};
    std::uint32_t used = 0;
    recurse(0, image, used, visit);
  }

 private:
  template <typename Visitor>
  bool recurse(int v, std::array<int, kMaxVertices>& image, std::uint32_t& used, Visitor& visit) {
    if (v == n_) return visit(Permutation(std::span<const int>(image.data(), static_cast<std::size_t>(n_))));
    for (int w = 0; w < n_; ++w) {
      if ((used >> w) & 1u) continue;
      if (sig_a_[v] != sig_b_[w]) continue;
      bool consistent = true;
      for (std::size_t l = 0; l < layers_ && consistent; ++l) {
        for (int u = 0; u < v; ++u) {
          const bool ea = (adj_a_[l][v] >> u) & 1u;
          const bool eb = (adj_b_[l][w] >> image[u]) & 1u;
          if (ea != eb) {
            consistent = false;
            break;
          }
        }
      }
      if (!consistent) continue;
      image[v] = w;
      used |= 1u << w;
      const bool keep_going = recurse(v + 1, image, used, visit);
      used &= ~(1u << w);
      if (!keep_going) return false;
    }
    return true;
  }

  int n_;
  std::size_t layers_;
  std::vector<Adjacency> adj_a_, adj_b_;
  std::array<std::uint64_t, kMaxVertices> sig_a_{}, sig_b_{};
};

}  // namespace

std::string_view to_string(GraphKind kind) {
  return kind == GraphKind::pairwise ? "pairwise" : "collective";
}

GraphKind parse_graph_kind(std::string_view text) {
  if (text == "pairwise" || text == "p") return GraphKind::pairwise;
  if (text == "collective" || text == "c") return GraphKind::collective;
  throw ValidationError("unknown graph kind '" + std::string(text) + "'");
}

std::pair<int, int> pair_at(int n, int index) {
  if (n < 0 || n > kMaxVertices || index < 0 || index >= pair_count(n)) {
    throw ValidationError("pair index out of range");
  }
  auto [i, j] = tables().pairs[n][index];
  return {i, j};
}

std::uint64_t factorial(int n) {
  std::uint64_t f = 1;
  for (int k = 2; k <= n; ++k) f *= static_cast<std::uint64_t>(k);
  return f;
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

// ---------------------------------------------------------------------------
// Permutation

Permutation::Permutation(std::span<const int> mapping) {
  if (mapping.size() > static_cast<std::size_t>(kMaxVertices)) {
    throw ResourceLimitError("permutation size exceeds " + std::to_string(kMaxVertices));
  }
  n_ = static_cast<std::uint8_t>(mapping.size());
  std::uint32_t seen = 0;
  for (std::size_t i = 0; i < mapping.size(); ++i) {
    const int v = mapping[i];
    if (v < 0 || v >= n_ || ((seen >> v) & 1u)) throw ValidationError("mapping is not a bijection");
    seen |= 1u << v;
    map_[i] = static_cast<std::uint8_t>(v);
  }
}

Permutation::Permutation(std::initializer_list<int> mapping)
    : Permutation(std::span<const int>(mapping.begin(), mapping.size())) {}

Permutation Permutation::identity(int n) {
  std::vector<int> m(static_cast<std::size_t>(n));
  std::iota(m.begin(), m.end(), 0);
  return Permutation(m);
}

Permutation Permutation::compose(const Permutation& inner) const {
  if (inner.n_ != n_) throw ValidationError("cannot compose permutations of different sizes");
  Permutation r;
  r.n_ = n_;
  for (int v = 0; v < n_; ++v) r.map_[v] = map_[inner.map_[v]];
  return r;
}

Permutation Permutation::inverse() const {
  Permutation r;
  r.n_ = n_;
  for (int v = 0; v < n_; ++v) r.map_[map_[v]] = static_cast<std::uint8_t>(v);
  return r;
}

bool Permutation::is_identity() const {
  for (int v = 0; v < n_; ++v) {
    if (map_[v] != v) return false;
  }
  return true;
}

std::vector<int> Permutation::mapping() const { return {map_.begin(), map_.begin() + n_}; }

std::string Permutation::to_string() const {
  std::string s = "(";
  for (int v = 0; v < n_; ++v) {
    if (v) s += ' ';
    s += std::to_string(map_[v]);
  }
  return s + ")";
}

EdgeMask Permutation::apply(EdgeMask edges) const {
  const auto& t = tables();
  EdgeMask out = 0;
  for (EdgeMask m = edges; m != 0; m &= m - 1) {
    auto [i, j] = t.pairs[n_][std::countr_zero(m)];
    out |= EdgeMask{1} << t.index[n_][map_[i]][map_[j]];
  }
  return out;
}

PermutationTable::PermutationTable(int n) : n_(n) {
  check_size(n);
  std::vector<int> m(static_cast<std::size_t>(n));
  std::iota(m.begin(), m.end(), 0);
  do {
    perms_.emplace_back(m);
  } while (std::next_permutation(m.begin(), m.end()));
}

std::size_t PermutationTable::rank(const Permutation& p) const {
  // Lehmer code in the factorial number system matches lexicographic order.
  std::size_t r = 0;
  for (int i = 0; i < n_; ++i) {
    int smaller = 0;
    for (int j = i + 1; j < n_; ++j) {
      if (p[j] < p[i]) ++smaller;
    }
    r = r * static_cast<std::size_t>(n_ - i) + static_cast<std::size_t>(smaller);
  }
  return r;
}

const PermutationTable& permutation_table(int n) {
  check_size(n);
  static std::array<std::unique_ptr<PermutationTable>, kMaxVertices + 1> cache;
  static std::array<std::once_flag, kMaxVertices + 1> flags;
  std::call_once(flags[n], [n] { cache[n] = std::make_unique<PermutationTable>(n); });
  return *cache[n];
}

// ---------------------------------------------------------------------------
// LabeledGraph

LabeledGraph::LabeledGraph(int n, EdgeMask edges, GraphKind kind) : n_(n), edges_(edges), kind_(kind) {
  check_size(n);
  if ((edges & ~full_mask(n)) != 0) throw ValidationError("edge mask has bits beyond (n choose 2)");
  if (kind == GraphKind::collective) {
    const std::uint32_t cover = covered_vertices();
    const int k = std::popcount(cover);
    EdgeMask clique = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (((cover >> i) & 1u) && ((cover >> j) & 1u)) clique |= EdgeMask{1} << pair_index(n, i, j);
      }
    }
    if (k == 1 || clique != edges) {
      throw ValidationError("collective layer must be a clique on its charged vertices");
    }
  }
}

LabeledGraph LabeledGraph::from_edges(int n, std::span<const std::pair<int, int>> edges, GraphKind kind) {
  check_size(n);
  EdgeMask m = 0;
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n) throw ValidationError("edge endpoint out of range");
    if (i == j) throw ValidationError("self-loops are not allowed");
    const EdgeMask bit = EdgeMask{1} << pair_index(n, i, j);
    if (m & bit) throw ValidationError("duplicate edge");
    m |= bit;
  }
  return LabeledGraph(n, m, kind);
}

LabeledGraph LabeledGraph::collective(int n, std::uint32_t charged) {
  check_size(n);
  if (charged >> n) throw ValidationError("charged set has vertices beyond n");
  EdgeMask m = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (((charged >> i) & 1u) && ((charged >> j) & 1u)) m |= EdgeMask{1} << pair_index(n, i, j);
    }
  }
  return LabeledGraph(n, m, GraphKind::collective);
}

LabeledGraph LabeledGraph::empty(int n, GraphKind kind) { return LabeledGraph(n, 0, kind); }

LabeledGraph LabeledGraph::complete(int n, GraphKind kind) {
  check_size(n);
  return LabeledGraph(n, full_mask(n), kind);
}

bool LabeledGraph::has_edge(int i, int j) const {
  if (i == j) return false;
  return (edges_ >> pair_index(n_, i, j)) & 1u;
}

int LabeledGraph::edge_count() const { return std::popcount(edges_); }

int LabeledGraph::degree(int v) const {
  int d = 0;
  for (int u = 0; u < n_; ++u) d += has_edge(v, u) ? 1 : 0;
  return d;
}

std::vector<std::pair<int, int>> LabeledGraph::edge_list() const {
  std::vector<std::pair<int, int>> out;
  for (EdgeMask m = edges_; m != 0; m &= m - 1) out.push_back(pair_at(n_, std::countr_zero(m)));
  return out;
}

std::uint32_t LabeledGraph::covered_vertices() const {
  std::uint32_t cover = 0;
  const auto& t = tables();
  for (EdgeMask m = edges_; m != 0; m &= m - 1) {
    auto [i, j] = t.pairs[n_][std::countr_zero(m)];
    cover |= (1u << i) | (1u << j);
  }
  return cover;
}

int LabeledGraph::charged_count() const { return std::popcount(covered_vertices()); }

LabeledGraph LabeledGraph::relabeled(const Permutation& p) const {
  if (p.size() != n_) throw ValidationError("permutation size does not match graph size");
  LabeledGraph g = *this;
  g.edges_ = p.apply(edges_);
  return g;
}

std::string format_edge_list(const LabeledGraph& g) {
  std::string s;
  for (auto [i, j] : g.edge_list()) {
    if (!s.empty()) s += ',';
    s += std::to_string(i) + '-' + std::to_string(j);
  }
  return s;
}

namespace {

int parse_int(std::string_view text, std::string_view what) {
  int value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ValidationError("invalid " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

EdgeMask parse_edge_list(int n, std::string_view text) {
  check_size(n);
  std::vector<std::pair<int, int>> edges;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string_view item = text.substr(pos, comma - pos);
    const std::size_t dash = item.find('-');
    if (dash == std::string_view::npos) throw ValidationError("edge '" + std::string(item) + "' lacks '-'");
    edges.emplace_back(parse_int(item.substr(0, dash), "vertex"), parse_int(item.substr(dash + 1), "vertex"));
    pos = comma + 1;
  }
  return LabeledGraph::from_edges(n, edges).edges();
}

std::string format_graph(const LabeledGraph& g) {
  return "n=" + std::to_string(g.n()) + " kind=" + (g.kind() == GraphKind::pairwise ? "p" : "c") +
         " edges=" + format_edge_list(g);
}

LabeledGraph parse_graph(std::string_view line) {
  std::istringstream in{std::string(line)};
  std::string token;
  int n = -1;
  GraphKind kind = GraphKind::pairwise;
  std::string edges;
  bool have_edges = false;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw ValidationError("malformed graph token '" + token + "'");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "n") {
      n = parse_int(value, "vertex count");
    } else if (key == "kind") {
      kind = parse_graph_kind(value);
    } else if (key == "edges") {
      edges = value;
      have_edges = true;
    } else {
      throw ValidationError("unknown graph field '" + key + "'");
    }
  }
  if (n < 0 || !have_edges) throw ValidationError("graph line needs n= and edges= fields");
  return LabeledGraph(n, parse_edge_list(n, edges), kind);
}

bool AutomorphismGroup::contains(const Permutation& p) const {
  return std::binary_search(elements.begin(), elements.end(), p);
}

// ---------------------------------------------------------------------------
// CanonicalForm

std::string CanonicalForm::hex() const {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes_.size() * 2);
  for (auto b : bytes_) {
    s += digits[b >> 4];
    s += digits[b & 0xF];
  }
  return s;
}

CanonicalForm CanonicalForm::from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw ValidationError("hex class id has odd length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw ValidationError(std::string("invalid hex digit '") + c + "'");
  };
  std::vector<std::uint8_t> bytes;
  bytes.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    bytes.push_back(static_cast<std::uint8_t>(nibble(hex[i]) << 4 | nibble(hex[i + 1])));
  }
  return CanonicalForm(std::move(bytes));
}

std::size_t CanonicalFormHash::operator()(const CanonicalForm& c) const noexcept {
  // FNV-1a
  std::uint64_t h = 1469598103934665603ULL;
  for (auto b : c.bytes()) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

int layer_byte_count(int n) { return (pair_count(n) + 7) / 8; }

void append_mask_bytes(int n, EdgeMask mask, std::vector<std::uint8_t>& out) {
  for (int b = 0; b < layer_byte_count(n); ++b) out.push_back(static_cast<std::uint8_t>(mask >> (8 * b)));
}

EdgeMask read_mask_bytes(int n, std::span<const std::uint8_t> bytes) {
  const int count = layer_byte_count(n);
  if (bytes.size() < static_cast<std::size_t>(count)) throw ValidationError("truncated edge bitset");
  EdgeMask m = 0;
  for (int b = 0; b < count; ++b) m |= static_cast<EdgeMask>(bytes[b]) << (8 * b);
  if ((m & ~full_mask(n)) != 0) throw ValidationError("edge bitset has padding bits set");
  return m;
}

// ---------------------------------------------------------------------------
// Algorithms

AutomorphismGroup automorphisms(const LabeledGraph& g) { return automorphisms(std::span(&g, 1)); }

AutomorphismGroup automorphisms(std::span<const LabeledGraph> layers) {
  check_layers(layers);
  AutomorphismGroup group;
  group.graph_n = layers.front().n();
  MappingSearch search(layers, layers);
  search.run([&](const Permutation& p) {
    group.elements.push_back(p);
    return true;
  });
  // Vertex-ordered backtracking already yields lexicographic order.
  return group;
}

LabeledGraph complement(const LabeledGraph& g) {
  if (g.kind() != GraphKind::pairwise) {
    throw ValidationError("complements are only defined here for pairwise layers");
  }
  return LabeledGraph(g.n(), ~g.edges() & full_mask(g.n()), GraphKind::pairwise);
}

CanonicalForm canonical_form(const LabeledGraph& g) { return canonical_form(std::span(&g, 1)); }

CanonicalForm canonical_form(std::span<const LabeledGraph> layers) {
  check_layers(layers);
  const int n = layers.front().n();
  std::vector<Adjacency> adj;
  for (const auto& g : layers) adj.push_back(adjacency(g));
  const auto sig = signatures(adj, n);

  // Only relabelings that sort vertices by degree signature are tried; the set
  // is relabeling-equivariant so the minimum stays an isomorphism invariant.
  std::array<std::uint64_t, kMaxVertices> target{};
  std::copy(sig.begin(), sig.begin() + n, target.begin());
  std::sort(target.begin(), target.begin() + n);

  struct Placer {
    int n;
    std::span<const LabeledGraph> layers;
    const std::array<std::uint64_t, kMaxVertices>& sig;
    const std::array<std::uint64_t, kMaxVertices>& target;
    std::vector<EdgeMask> best;
    std::vector<EdgeMask> candidate;
    bool have_best = false;
    std::array<int, kMaxVertices> image{};
    std::uint32_t used = 0;

    void place(int position) {
      if (position == n) {
        const Permutation p(std::span<const int>(image.data(), static_cast<std::size_t>(n)));
        for (std::size_t l = 0; l < layers.size(); ++l) candidate[l] = p.apply(layers[l].edges());
        if (!have_best || candidate < best) {
          best = candidate;
          have_best = true;
        }
        return;
      }
      for (int v = 0; v < n; ++v) {
        if ((used >> v) & 1u || sig[v] != target[position]) continue;
        used |= 1u << v;
        image[v] = position;
        place(position + 1);
        used &= ~(1u << v);
      }
    }
  };
  Placer placer{n, layers, sig, target, std::vector<EdgeMask>(layers.size()),
                std::vector<EdgeMask>(layers.size())};
  placer.place(0);
  const auto& best = placer.best;

  std::vector<std::uint8_t> bytes;
  bytes.reserve(layers.size() * static_cast<std::size_t>(layer_byte_count(n)));
  for (EdgeMask m : best) append_mask_bytes(n, m, bytes);
  return CanonicalForm(std::move(bytes));
}

bool is_isomorphic(const LabeledGraph& a, const LabeledGraph& b) {
  return is_isomorphic(std::span(&a, 1), std::span(&b, 1));
}

bool is_isomorphic(std::span<const LabeledGraph> a, std::span<const LabeledGraph> b) {
  check_layers(a);
  check_layers(b);
  if (a.size() != b.size() || a.front().n() != b.front().n()) {
    throw ValidationError("is_isomorphic needs stacks with equal layer count and vertex count");
  }
  for (std::size_t l = 0; l < a.size(); ++l) {
    if (a[l].kind() != b[l].kind()) throw ValidationError("layer kinds differ between stacks");
    if (a[l].edge_count() != b[l].edge_count()) return false;
  }
  bool found = false;
  MappingSearch search(a, b);
  search.run([&](const Permutation&) {
    found = true;
    return false;
  });
  return found;
}

}  // namespace mxiso
