#pragma once

// Training-example sampler whose selection probability follows an
// exponentially weighted average of each example's (or class's) recent error.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mxiso {

enum class PriorityMode { per_example, per_class };

std::string_view to_string(PriorityMode mode);
PriorityMode parse_priority_mode(std::string_view text);

struct PrioritySamplerConfig {
  double alpha = 0.3;
  /// Absolute floor added to every unit weight. When unset, the floor is
  /// relative_floor times the mean unit weight.
  std::optional<double> floor;
  double relative_floor = 1e-3;
  PriorityMode mode = PriorityMode::per_example;
};

class PrioritySampler {
 public:
  /// One entry per example. In per_class mode `example_units[i]` names the
  /// class of example i; in per_example mode it is ignored and may be empty.
  PrioritySampler(std::size_t example_count, std::vector<std::string> example_units,
                  PrioritySamplerConfig config = {});

  std::size_t example_count() const { return example_unit_.size(); }
  std::size_t unit_count() const { return unit_ids_.size(); }
  const std::vector<std::string>& unit_ids() const { return unit_ids_; }
  std::size_t unit_of(std::size_t example) const { return example_unit_.at(example); }
  const PrioritySamplerConfig& config() const { return config_; }

  /// ewma <- alpha * error + (1 - alpha) * ewma; a unit's first observation
  /// sets ewma = error. Example ids are looked up through their unit.
  void update(std::size_t example, double observed_error);
  void update_unit(std::size_t unit, double observed_error);

  /// Current EWMA of a unit, or nullopt before its first update.
  std::optional<double> ewma(std::size_t unit) const;
  /// Weight of a unit before the floor: its EWMA, or the largest observed
  /// EWMA for unvisited units (1 before any update).
  double unit_weight(std::size_t unit) const;
  double floor_value() const;

  /// Normalised selection probability of every example.
  std::vector<double> probabilities() const;

  /// batch_size i.i.d. draws (with replacement), deterministic per seed.
  std::vector<std::size_t> sample_batch(std::size_t batch_size, std::uint64_t seed) const;

  nlohmann::json to_json() const;
  static PrioritySampler from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static PrioritySampler load(const std::filesystem::path& path);

 private:
  PrioritySampler() = default;

  PrioritySamplerConfig config_;
  std::vector<std::string> unit_ids_;
  std::vector<std::size_t> example_unit_;
  std::vector<std::optional<double>> ewma_;
  std::vector<std::size_t> unit_sizes_;
};

}  // namespace mxiso
