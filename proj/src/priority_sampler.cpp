#include "mxiso/priority_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include "mxiso/errors.hpp"

using nlohmann::json;

namespace mxiso {

std::string_view to_string(PriorityMode mode) { return mode == PriorityMode::per_class ? "per-class" : "per-example"; }

PriorityMode parse_priority_mode(std::string_view text) {
  if (text == "per-example" || text == "per_example") return PriorityMode::per_example;
  if (text == "per-class" || text == "per_class") return PriorityMode::per_class;
  throw ValidationError("unknown priority mode '" + std::string(text) + "'");
}

namespace {

void check_config(const PrioritySamplerConfig& c) {
  if (!(c.alpha > 0 && c.alpha <= 1)) throw ValidationError("alpha must lie in (0, 1]");
  if (c.floor && !(*c.floor >= 0 && std::isfinite(*c.floor))) throw ValidationError("floor must be >= 0");
  if (!(c.relative_floor >= 0 && std::isfinite(c.relative_floor))) {
    throw ValidationError("relative floor must be >= 0");
  }
}

}  // namespace

PrioritySampler::PrioritySampler(std::size_t example_count, std::vector<std::string> example_units,
                                 PrioritySamplerConfig config)
    : config_(config) {
  check_config(config_);
  if (example_count == 0) throw ValidationError("priority sampler needs at least one example");
  example_unit_.resize(example_count);
  if (config_.mode == PriorityMode::per_example) {
    for (std::size_t i = 0; i < example_count; ++i) {
      unit_ids_.push_back(std::to_string(i));
      example_unit_[i] = i;
    }
  } else {
    if (example_units.size() != example_count) throw ValidationError("per-class mode needs one class id per example");
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < example_count; ++i) {
      auto [it, inserted] = index.try_emplace(example_units[i], unit_ids_.size());
      if (inserted) unit_ids_.push_back(example_units[i]);
      example_unit_[i] = it->second;
    }
  }
  ewma_.assign(unit_ids_.size(), std::nullopt);
  unit_sizes_.assign(unit_ids_.size(), 0);
  for (auto u : example_unit_) ++unit_sizes_[u];
}

void PrioritySampler::update(std::size_t example, double observed_error) {
  if (example >= example_unit_.size()) throw ValidationError("unknown example " + std::to_string(example));
  update_unit(example_unit_[example], observed_error);
}

void PrioritySampler::update_unit(std::size_t unit, double observed_error) {
  if (unit >= ewma_.size()) throw ValidationError("unknown unit " + std::to_string(unit));
  if (!(observed_error >= 0) || !std::isfinite(observed_error)) {
    throw ValidationError("observed error must be finite and >= 0");
  }
  auto& e = ewma_[unit];
  e = e ? config_.alpha * observed_error + (1 - config_.alpha) * *e : observed_error;
}

std::optional<double> PrioritySampler::ewma(std::size_t unit) const { return ewma_.at(unit); }

double PrioritySampler::unit_weight(std::size_t unit) const {
  if (ewma_.at(unit)) return *ewma_[unit];
  double best = -1;
  for (const auto& e : ewma_) {
    if (e) best = std::max(best, *e);
  }
  return best < 0 ? 1.0 : best;
}

double PrioritySampler::floor_value() const {
  if (config_.floor) return *config_.floor;
  double sum = 0;
  for (std::size_t u = 0; u < ewma_.size(); ++u) sum += unit_weight(u);
  return config_.relative_floor * sum / static_cast<double>(ewma_.size());
}

std::vector<double> PrioritySampler::probabilities() const {
  const double fl = floor_value();
  // Class mass is split evenly among its members.
  std::vector<double> unit_mass(ewma_.size());
  double total = 0;
  for (std::size_t u = 0; u < ewma_.size(); ++u) {
    unit_mass[u] = unit_weight(u) + fl;
    total += unit_mass[u];
  }
  std::vector<double> p(example_unit_.size());
  if (!(total > 0)) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
    return p;
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto u = example_unit_[i];
    const double share = config_.mode == PriorityMode::per_class ? unit_mass[u] / unit_sizes_[u] : unit_mass[u];
    p[i] = share / total;
  }
  return p;
}

std::vector<std::size_t> PrioritySampler::sample_batch(std::size_t batch_size, std::uint64_t seed) const {
  if (batch_size == 0) throw ValidationError("batch size must be >= 1");
  const auto p = probabilities();
  std::discrete_distribution<std::size_t> dist(p.begin(), p.end());
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> out(batch_size);
  for (auto& x : out) x = dist(rng);
  return out;
}

json PrioritySampler::to_json() const {
  json j;
  j["mode"] = std::string(to_string(config_.mode));
  j["alpha"] = config_.alpha;
  j["floor"] = config_.floor ? json(*config_.floor) : json(nullptr);
  j["relative_floor"] = config_.relative_floor;
  j["unit_ids"] = unit_ids_;
  j["example_units"] = example_unit_;
  json e = json::array();
  for (const auto& v : ewma_) e.push_back(v ? json(*v) : json(nullptr));
  j["ewma"] = e;
  return j;
}

PrioritySampler PrioritySampler::from_json(const json& j) {
  try {
    PrioritySampler s;
    s.config_.mode = parse_priority_mode(j.at("mode").get<std::string>());
    s.config_.alpha = j.at("alpha").get<double>();
    if (!j.at("floor").is_null()) s.config_.floor = j.at("floor").get<double>();
    s.config_.relative_floor = j.value("relative_floor", s.config_.relative_floor);
    check_config(s.config_);
    s.unit_ids_ = j.at("unit_ids").get<std::vector<std::string>>();
    s.example_unit_ = j.at("example_units").get<std::vector<std::size_t>>();
    const auto& e = j.at("ewma");
    if (e.size() != s.unit_ids_.size()) throw ValidationError("checkpoint ewma length mismatch");
    for (const auto& v : e) {
      if (v.is_null()) {
        s.ewma_.push_back(std::nullopt);
      } else {
        const double x = v.get<double>();
        if (!(x >= 0)) throw ValidationError("checkpoint ewma must be >= 0");
        s.ewma_.push_back(x);
      }
    }
    if (s.example_unit_.empty()) throw ValidationError("checkpoint has no examples");
    s.unit_sizes_.assign(s.unit_ids_.size(), 0);
    for (auto u : s.example_unit_) {
      if (u >= s.unit_ids_.size()) throw ValidationError("checkpoint example refers to unknown unit");
      ++s.unit_sizes_[u];
    }
    return s;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed sampler checkpoint: ") + e.what());
  }
}

void PrioritySampler::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

PrioritySampler PrioritySampler::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ValidationError("sampler checkpoint is not valid JSON: " + std::string(e.what()));
  }
}

}  // namespace mxiso
