#include "mxiso/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "mxiso/errors.hpp"

namespace mxiso {

namespace {

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(std::string(name) + " must lie in [0, 1]");
}

bool greater_than(const Rational& a, const Rational& b) {
  using boost::multiprecision::denominator;
  using boost::multiprecision::numerator;
  return numerator(a) * denominator(b) > numerator(b) * denominator(a);
}

Rational power(const Rational& base, int exponent) {
  Rational r = 1;
  for (int i = 0; i < exponent; ++i) r *= base;
  return r;
}

/// Probability that Bernoulli node sampling yields exactly this collective layer.
Rational collective_layer_probability(const LabeledGraph& g, const Rational& q) {
  const int n = g.n();
  const int k = g.charged_count();
  const Rational miss = 1 - q;
  if (k == 0) return power(miss, n) + Rational(n) * q * power(miss, n - 1);
  return power(q, k) * power(miss, n - k);
}

std::uint64_t layer_orbit_size(const LabeledGraph& g) {
  if (g.kind() == GraphKind::collective) {
    const int k = g.charged_count();
    return k == 0 ? 1 : binomial(g.n(), k);
  }
  return factorial(g.n()) / automorphisms(g).order();
}

}  // namespace

std::string_view to_string(GenerationMethod method) {
  switch (method) {
    case GenerationMethod::original_er:
      return "original-er";
    case GenerationMethod::uniform_basis:
      return "uniform-basis";
    case GenerationMethod::uniform_multiplex:
      return "uniform-multiplex";
  }
  return "?";
}

GenerationMethod parse_generation_method(std::string_view text) {
  if (text == "original-er" || text == "original_er") return GenerationMethod::original_er;
  if (text == "uniform-basis" || text == "uniform_basis") return GenerationMethod::uniform_basis;
  if (text == "uniform-multiplex" || text == "uniform_multiplex") return GenerationMethod::uniform_multiplex;
  throw ValidationError("unknown generation method '" + std::string(text) + "'");
}

std::vector<double> ClassDistribution::as_doubles() const {
  std::vector<double> out;
  out.reserve(probs.size());
  for (const auto& p : probs) out.push_back(p.convert_to<double>());
  return out;
}

Rational to_rational(double value) {
  if (!std::isfinite(value)) throw ValidationError("cannot convert a non-finite value to a rational");
  int exponent = 0;
  const double mantissa = std::frexp(value, &exponent);
  // mantissa * 2^53 is an exact integer.
  const auto scaled = static_cast<long long>(std::ldexp(mantissa, 53));
  Rational r(scaled);
  exponent -= 53;
  const Rational two = 2;
  if (exponent > 0) {
    r *= power(two, exponent);
  } else if (exponent < 0) {
    r /= power(two, -exponent);
  }
  return r;
}

Rational parse_rational(std::string_view text) {
  const std::string s(text);
  try {
    const auto slash = s.find('/');
    if (slash != std::string::npos) {
      return Rational(boost::multiprecision::cpp_int(s.substr(0, slash)),
                      boost::multiprecision::cpp_int(s.substr(slash + 1)));
    }
    const auto dot = s.find('.');
    if (dot == std::string::npos) return Rational(boost::multiprecision::cpp_int(s));
    const std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    boost::multiprecision::cpp_int scale = 1;
    for (std::size_t i = dot + 1; i < s.size(); ++i) scale *= 10;
    return Rational(boost::multiprecision::cpp_int(digits.empty() ? "0" : digits), scale);
  } catch (const std::exception&) {
    throw ValidationError("invalid number '" + s + "'");
  }
}

Permutation random_permutation(int n, std::mt19937_64& rng) {
  std::vector<int> m(static_cast<std::size_t>(n));
  std::iota(m.begin(), m.end(), 0);
  std::shuffle(m.begin(), m.end(), rng);
  return Permutation(m);
}

// ---------------------------------------------------------------------------
// Samplers

ErSampler::ErSampler(int n, std::vector<GraphKind> kinds, double p_edge, double p_node, std::uint64_t seed)
    : n_(n), kinds_(std::move(kinds)), p_edge_(p_edge), p_node_(p_node), rng_(seed) {
  check_probability(p_edge, "p_edge");
  check_probability(p_node, "p_node");
  if (kinds_.empty()) throw ValidationError("at least one layer kind is required");
  LabeledGraph::empty(n);  // validates n
}

MultiplexNetwork ErSampler::next() {
  std::bernoulli_distribution edge(p_edge_), node(p_node_);
  std::vector<LabeledGraph> layers;
  for (auto kind : kinds_) {
    if (kind == GraphKind::pairwise) {
      EdgeMask m = 0;
      for (int b = 0; b < pair_count(n_); ++b) {
        if (edge(rng_)) m |= EdgeMask{1} << b;
      }
      layers.emplace_back(n_, m, GraphKind::pairwise);
    } else {
      std::uint32_t charged = 0;
      for (int v = 0; v < n_; ++v) {
        if (node(rng_)) charged |= 1u << v;
      }
      layers.push_back(LabeledGraph::collective(n_, charged));
    }
  }
  return MultiplexNetwork(std::move(layers));
}

UniformBasisSampler::UniformBasisSampler(std::vector<std::vector<IsoClass>> basis_sets, std::uint64_t seed)
    : rng_(seed) {
  if (basis_sets.empty()) throw ValidationError("at least one basis set is required");
  for (const auto& set : basis_sets) {
    if (set.empty()) throw ValidationError("basis sets must be non-empty");
    auto& layer = members_.emplace_back();
    for (const auto& c : set) layer.push_back(labeled_members(c.representative.layers.at(0)));
  }
}

MultiplexNetwork UniformBasisSampler::next() {
  std::vector<LabeledGraph> layers;
  for (const auto& layer : members_) {
    std::uniform_int_distribution<std::size_t> pick_class(0, layer.size() - 1);
    const auto& members = layer[pick_class(rng_)];
    std::uniform_int_distribution<std::size_t> pick_member(0, members.size() - 1);
    layers.push_back(members[pick_member(rng_)]);
  }
  return MultiplexNetwork(std::move(layers));
}

UniformMultiplexSampler::UniformMultiplexSampler(const IsoClassCatalog& catalog, std::uint64_t seed)
    : catalog_(&catalog), rng_(seed) {
  if (catalog.classes.empty()) throw ValidationError("catalog is empty");
}

MultiplexNetwork UniformMultiplexSampler::next() {
  std::uniform_int_distribution<std::size_t> pick(0, catalog_->classes.size() - 1);
  last_ = pick(rng_);
  const auto& rep = catalog_->classes[last_].representative;
  return rep.relabeled(random_permutation(rep.n, rng_));
}

MultiplexNetwork er_sample_network(int n, std::span<const GraphKind> kinds, double p_edge, double p_node,
                                   std::uint64_t seed) {
  return ErSampler(n, {kinds.begin(), kinds.end()}, p_edge, p_node, seed).next();
}

MultiplexNetwork uniform_basis_sample(std::span<const std::vector<IsoClass>> basis_sets, std::uint64_t seed) {
  return UniformBasisSampler({basis_sets.begin(), basis_sets.end()}, seed).next();
}

MultiplexNetwork uniform_multiplex_sample(const IsoClassCatalog& catalog, std::uint64_t seed) {
  return UniformMultiplexSampler(catalog, seed).next();
}

// ---------------------------------------------------------------------------
// Exact distributions

ClassDistribution class_probabilities(const IsoClassCatalog& catalog, GenerationMethod method, double p_edge,
                                      double p_node) {
  check_probability(p_edge, "p_edge");
  check_probability(p_node, "p_node");
  return class_probabilities(catalog, method, to_rational(p_edge), to_rational(p_node));
}

ClassDistribution class_probabilities(const IsoClassCatalog& catalog, GenerationMethod method,
                                      const Rational& p_edge, const Rational& p_node) {
  if (catalog.classes.empty()) throw ValidationError("catalog is empty");
  if (p_edge < 0 || p_edge > 1 || p_node < 0 || p_node > 1) {
    throw ValidationError("Bernoulli parameters must lie in [0, 1]");
  }
  ClassDistribution dist;
  dist.catalog_ref = catalog.reference();
  dist.method = method;
  dist.probs.reserve(catalog.classes.size());
  if (method == GenerationMethod::uniform_multiplex) {
    dist.probs.assign(catalog.classes.size(), Rational(1, static_cast<long long>(catalog.classes.size())));
    return dist;
  }

  const int n = catalog.n;
  const int pairs = pair_count(n);
  // Per-layer factors, indexed by edge count (pairwise) or charge count (collective).
  std::vector<std::vector<Rational>> factor(catalog.layer_kinds.size());
  std::unordered_map<EdgeMask, std::uint64_t> pairwise_orbits;
  std::vector<std::uint64_t> class_counts;
  if (method == GenerationMethod::original_er) {
    for (std::size_t l = 0; l < catalog.layer_kinds.size(); ++l) {
      if (catalog.layer_kinds[l] == GraphKind::pairwise) {
        for (int e = 0; e <= pairs; ++e) factor[l].push_back(power(p_edge, e) * power(1 - p_edge, pairs - e));
      } else {
        for (int k = 0; k <= n; ++k) {
          factor[l].push_back(k == 1 ? Rational(0)
                                     : collective_layer_probability(LabeledGraph::collective(n, (1u << k) - 1u),
                                                                    p_node));
        }
      }
    }
  } else {
    for (auto kind : catalog.layer_kinds) class_counts.push_back(enumerate_basis(n, kind).size());
  }

  // Probabilities take few distinct values; memoize on (orbit, layer statistics).
  std::map<std::vector<std::uint64_t>, Rational> memo;
  for (const auto& c : catalog.classes) {
    std::vector<std::uint64_t> layer_terms;
    for (std::size_t l = 0; l < c.representative.layers.size(); ++l) {
      const auto& layer = c.representative.layers[l];
      std::uint64_t term;
      if (method == GenerationMethod::original_er) {
        term = static_cast<std::uint64_t>(layer.kind() == GraphKind::pairwise ? layer.edge_count()
                                                                              : layer.charged_count());
      } else if (layer.kind() == GraphKind::pairwise) {
        auto [it, fresh] = pairwise_orbits.try_emplace(layer.edges(), 0);
        if (fresh) it->second = layer_orbit_size(layer);
        term = it->second;
      } else {
        term = layer_orbit_size(layer);
      }
      layer_terms.push_back(term);
    }
    std::vector<std::uint64_t> key = layer_terms;
    key.push_back(c.orbit_size);
    auto [it, fresh] = memo.try_emplace(std::move(key));
    if (fresh) {
      Rational prob(c.orbit_size);
      for (std::size_t l = 0; l < layer_terms.size(); ++l) {
        if (method == GenerationMethod::original_er) {
          prob *= factor[l][layer_terms[l]];
        } else {
          prob /= Rational(boost::multiprecision::cpp_int(class_counts[l]) * layer_terms[l]);
        }
      }
      it->second = std::move(prob);
    }
    dist.probs.push_back(it->second);
  }
  return dist;
}

RankFrequencyTable rank_frequency(const ClassDistribution& dist) {
  if (dist.probs.empty()) throw ValidationError("empty distribution");
  // Exact grouping: a descending map keyed by the rational value.
  auto descending = [](const Rational& a, const Rational& b) { return a != b && greater_than(a, b); };
  std::map<Rational, std::vector<std::size_t>, decltype(descending)> groups(descending);
  for (std::size_t i = 0; i < dist.probs.size(); ++i) groups[dist.probs[i]].push_back(i);

  RankFrequencyTable table;
  for (auto& [probability, indices] : groups) {
    RankGroup g;
    g.rank = table.rows.size() + 1;
    g.probability = probability;
    g.class_indices = std::move(indices);
    table.rows.push_back(std::move(g));
  }
  const Rational& lo = table.rows.back().probability;
  if (lo <= 0) {
    table.unbounded = true;
  } else {
    table.max_min_ratio = table.rows.front().probability / lo;
  }
  return table;
}

std::string RankFrequencyTable::ratio_string() const {
  if (unbounded) return "inf";
  return boost::multiprecision::numerator(max_min_ratio).str() + ":" +
         boost::multiprecision::denominator(max_min_ratio).str();
}

void write_rank_frequency_csv(std::ostream& out, const RankFrequencyTable& table, const IsoClassCatalog& catalog) {
  out << "rank,probability,class_count,class_ids\n";
  const auto old_precision = out.precision(17);
  for (const auto& row : table.rows) {
    out << row.rank << ',' << row.probability.convert_to<double>() << ',' << row.class_indices.size() << ',';
    for (std::size_t i = 0; i < row.class_indices.size(); ++i) {
      if (i) out << ';';
      out << catalog.classes.at(row.class_indices[i]).class_id.hex();
    }
    out << '\n';
  }
  out.precision(old_precision);
}

std::vector<RatioSweepRow> original_er_ratio_sweep(const IsoClassCatalog& catalog, std::span<const Rational> ps) {
  std::vector<RatioSweepRow> rows;
  for (const auto& p : ps) {
    const auto table = rank_frequency(class_probabilities(catalog, GenerationMethod::original_er, p, p));
    rows.push_back({p, table.max_min_ratio});
  }
  return rows;
}

}  // namespace mxiso
