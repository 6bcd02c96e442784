#pragma once

// Generators for interaction networks and the exact class distributions they
// induce over a catalog.

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mxiso/multiplex.hpp"

namespace mxiso {

using Rational = boost::multiprecision::cpp_rational;

enum class GenerationMethod { original_er, uniform_basis, uniform_multiplex };

std::string_view to_string(GenerationMethod method);
GenerationMethod parse_generation_method(std::string_view text);

struct ClassDistribution {
  std::string catalog_ref;
  GenerationMethod method = GenerationMethod::original_er;
  std::vector<Rational> probs;  // aligned with catalog.classes

  std::vector<double> as_doubles() const;
};

/// Exact conversion (every finite double is a dyadic rational).
Rational to_rational(double value);
/// Parses "0.3", "3/10" or "1" exactly.
Rational parse_rational(std::string_view text);

// -- Samplers ---------------------------------------------------------------

/// Bernoulli edges for pairwise layers, Bernoulli charged nodes for
/// collective layers (edges = clique on the charged set).
class ErSampler {
 public:
  ErSampler(int n, std::vector<GraphKind> kinds, double p_edge, double p_node, std::uint64_t seed);
  MultiplexNetwork next();

 private:
  int n_;
  std::vector<GraphKind> kinds_;
  double p_edge_, p_node_;
  std::mt19937_64 rng_;
};

/// One basis class per layer chosen uniformly, then a uniformly random
/// labeled member of it.
class UniformBasisSampler {
 public:
  UniformBasisSampler(std::vector<std::vector<IsoClass>> basis_sets, std::uint64_t seed);
  MultiplexNetwork next();

 private:
  std::vector<std::vector<std::vector<LabeledGraph>>> members_;  // [layer][class][member]
  std::mt19937_64 rng_;
};

/// Uniform class, then its representative under a uniformly random relabeling.
class UniformMultiplexSampler {
 public:
  UniformMultiplexSampler(const IsoClassCatalog& catalog, std::uint64_t seed);
  MultiplexNetwork next();
  /// Index of the class chosen by the most recent next().
  std::size_t last_class() const { return last_; }

 private:
  const IsoClassCatalog* catalog_;
  std::mt19937_64 rng_;
  std::size_t last_ = 0;
};

MultiplexNetwork er_sample_network(int n, std::span<const GraphKind> kinds, double p_edge, double p_node,
                                   std::uint64_t seed);
MultiplexNetwork uniform_basis_sample(std::span<const std::vector<IsoClass>> basis_sets, std::uint64_t seed);
MultiplexNetwork uniform_multiplex_sample(const IsoClassCatalog& catalog, std::uint64_t seed);

/// Uniformly random permutation of n labels.
Permutation random_permutation(int n, std::mt19937_64& rng);

// -- Exact distributions ----------------------------------------------------

/// Exact probability of each catalog class. original_er weighs each labeled
/// network by its Bernoulli probability; uniform_basis by the product over
/// layers of 1 / (basis class count * layer orbit size); uniform_multiplex is
/// 1 / |catalog|.
ClassDistribution class_probabilities(const IsoClassCatalog& catalog, GenerationMethod method,
                                      double p_edge = 0.5, double p_node = 0.5);
ClassDistribution class_probabilities(const IsoClassCatalog& catalog, GenerationMethod method,
                                      const Rational& p_edge, const Rational& p_node);

struct RankGroup {
  std::size_t rank = 0;  // 1-based, dense
  Rational probability;
  std::vector<std::size_t> class_indices;
};

struct RankFrequencyTable {
  std::vector<RankGroup> rows;  // non-increasing probability
  Rational max_min_ratio;
  bool unbounded = false;  // some class has probability zero

  /// "a:b" in lowest terms.
  std::string ratio_string() const;
};

RankFrequencyTable rank_frequency(const ClassDistribution& dist);

/// CSV with columns rank,probability,class_count,class_ids (ids separated by ';').
void write_rank_frequency_csv(std::ostream& out, const RankFrequencyTable& table, const IsoClassCatalog& catalog);

struct RatioSweepRow {
  Rational p;
  Rational original_er_ratio;
};

/// max:min ratio of the Original-ER distribution for p_edge = p_node = p.
std::vector<RatioSweepRow> original_er_ratio_sweep(const IsoClassCatalog& catalog, std::span<const Rational> ps);

}  // namespace mxiso
