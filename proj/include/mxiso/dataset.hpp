#pragma once

// Isomorphism-aware benchmark datasets: manifests, split builders, on-disk
// formats, leakage checks and evaluation metrics.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mxiso/dynamics.hpp"
#include "mxiso/multiplex.hpp"

namespace mxiso {

enum class DatasetMethod { original_er, rejection_er, con, iso, con_iso, sub_con, extrapolation };
enum class ExtrapolationAxis { charge, spring };
enum class ExtrapolationMode { extrap_high, extrap_low, interpolate };

std::string_view to_string(DatasetMethod m);
std::string_view to_string(ExtrapolationAxis a);
std::string_view to_string(ExtrapolationMode m);

inline constexpr std::array<const char*, 3> kSplitNames = {"train", "val", "test"};
inline constexpr int kManifestSchemaVersion = 1;

struct SplitSpec {
  /// Number of classes drawn for this split; unset means every eligible class.
  std::optional<std::size_t> classes;
  /// Initial conditions per class (class-based methods).
  std::size_t init_count = 0;
  /// Seed namespace for initial conditions. Splits naming the same pool reuse
  /// the same seed list.
  std::string init_pool;
  /// Sample count (Erdős–Rényi methods).
  std::optional<std::size_t> samples;
};

struct InitSpec {
  double pos_std = 0.5;
  double vel_norm = 0.5;
};

struct DatasetManifest {
  int schema_version = kManifestSchemaVersion;
  std::string name;
  /// Catalog identity (IsoClassCatalog::reference()); filled in by builders
  /// when empty, checked otherwise.
  std::string catalog_ref;
  DatasetMethod method = DatasetMethod::con;
  std::string generator_version;
  std::uint64_t seed = 0;
  int n = 5;
  std::vector<Interaction> interactions{Interaction::ideal_spring, Interaction::charge};
  double p_edge = 0.5;
  double p_node = 0.5;
  std::array<SplitSpec, 3> splits;
  ExtrapolationAxis axis = ExtrapolationAxis::charge;
  ExtrapolationMode mode = ExtrapolationMode::extrap_high;
  std::uint64_t rejection_budget = 10'000'000;
  InitSpec init;
  SimConfig sim;

  std::vector<GraphKind> layer_kinds() const;
  /// Structural checks that do not need a catalog.
  void validate() const;
};

void to_json(nlohmann::json& j, const DatasetManifest& m);
void from_json(const nlohmann::json& j, DatasetManifest& m);
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Named presets: original-er, rejection-er, con-<n>, iso-<n>, con-iso,
/// sub-con-<n>, xch, xcl, ic, xsh, xsl, is. Three-interaction variants use
/// interactions {spring, charge, fspring}.
DatasetManifest preset_manifest(std::string_view preset, std::uint64_t seed = 0,
                                std::vector<Interaction> interactions = {Interaction::ideal_spring,
                                                                         Interaction::charge});

struct Sample {
  MultiplexNetwork network;
  CanonicalForm class_id;
  std::uint64_t init_seed = 0;
};

struct DatasetSplit {
  std::string name;
  std::vector<Sample> samples;

  std::vector<CanonicalForm> distinct_classes() const;
};

struct BuildReport {
  std::vector<std::string> lines;
  std::size_t train_classes = 0;
  std::size_t catalog_classes = 0;
  std::uint64_t rejected = 0;

  void log(std::string line) { lines.push_back(std::move(line)); }
};

struct Dataset {
  DatasetManifest manifest;
  std::array<DatasetSplit, 3> splits;
  BuildReport report;
};

Dataset build_original_er(const DatasetManifest& manifest, const IsoClassCatalog& catalog);
Dataset build_rejection_er(const DatasetManifest& manifest, const IsoClassCatalog& catalog);
Dataset build_con_n(const DatasetManifest& manifest, const IsoClassCatalog& catalog);
Dataset build_iso_n(const DatasetManifest& manifest, const IsoClassCatalog& catalog);
Dataset build_con_iso(const DatasetManifest& manifest, const IsoClassCatalog& catalog);
Dataset build_sub_con_n(const DatasetManifest& manifest, const IsoClassCatalog& catalog);
Dataset build_extrapolation(const DatasetManifest& manifest, const IsoClassCatalog& catalog);
/// Dispatches on manifest.method.
Dataset build_dataset(const DatasetManifest& manifest, const IsoClassCatalog& catalog);

/// Per-class statistic used by the extrapolation bands: charged-node count of
/// the charge layer, or edge count of the first ideal-spring layer.
int extrapolation_statistic(const IsoClass& c, const DatasetManifest& manifest);

/// Simulates one sample with the manifest's initial-condition and sim settings.
Trajectory simulate_sample(const Sample& sample, const DatasetManifest& manifest);

/// Writes manifest.json, report.txt and per split trajectories.bin,
/// networks.bin, classes.txt. Trajectories are simulated in parallel chunks.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir, unsigned threads = 0);

// -- File formats -----------------------------------------------------------

struct TrajectorySet {
  std::uint32_t samples = 0;
  std::uint32_t frames = 0;
  std::uint32_t particles = 0;
  std::vector<float> values;  // (sample, frame, particle, dim, channel)

  /// Single sample as a double-precision Trajectory.
  Trajectory trajectory(std::size_t sample) const;
};

void write_trajectories(const std::filesystem::path& path, std::span<const Trajectory> trajectories);
TrajectorySet read_trajectories(const std::filesystem::path& path);

void write_networks(const std::filesystem::path& path, std::span<const MultiplexNetwork> networks);
/// Layer kinds are not stored in the file; pass them to validate collective
/// layers, or leave empty to read every layer as pairwise.
std::vector<MultiplexNetwork> read_networks(const std::filesystem::path& path,
                                            std::span<const GraphKind> kinds = {});

void write_classes(const std::filesystem::path& path, std::span<const CanonicalForm> classes);
std::vector<CanonicalForm> read_classes(const std::filesystem::path& path);

// -- Leakage ----------------------------------------------------------------

struct LeakEntry {
  std::string first;   // "<dir>/<split>"
  std::string second;
  std::size_t shared_classes = 0;
};

struct LeakReport {
  std::vector<LeakEntry> entries;
  std::size_t overlap(std::string_view first, std::string_view second) const;
};

/// Class-id overlaps between every pair of splits found under the given
/// dataset directories.
LeakReport leak_check(std::span<const std::filesystem::path> dirs);
std::size_t class_overlap(const DatasetSplit& a, const DatasetSplit& b);

// -- Metrics ----------------------------------------------------------------

/// Mean squared position error over the first k frames, all particles and
/// both dimensions. Velocities are ignored.
double mse_k(const Trajectory& pred, const Trajectory& truth, int k);
double mse_k(const TrajectorySet& pred, const TrajectorySet& truth, int k);

/// MSE of holding the last observed position fixed for the next k frames.
double stationary_mse(const Trajectory& truth, int observed_frames, int k);

struct EdgeAccuracy {
  double overall = 0;
  std::vector<double> per_layer;
  std::vector<std::size_t> layer_assignment;  // predicted layer used for each true layer
};

/// Fraction of (pair, layer) slots predicted correctly. With layer matching,
/// same-kind predicted layers may be permuted to maximise overall accuracy.
EdgeAccuracy edge_accuracy(const MultiplexNetwork& pred, const MultiplexNetwork& truth, bool allow_layer_matching);
EdgeAccuracy edge_accuracy(std::span<const MultiplexNetwork> pred, std::span<const MultiplexNetwork> truth,
                           bool allow_layer_matching);

}  // namespace mxiso
