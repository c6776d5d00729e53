#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "ganduf/design.hpp"
#include "json.hpp"

namespace ganduf {

inline constexpr int kDatasetFormatVersion = 1;

struct DatasetConfig {
  DesignKind kind = DesignKind::Airfoil;
  std::size_t n_nominal = 1528;
  std::size_t m_fabricated = 10;
  /// perturbation.seed is the base seed of the whole dataset.
  geometry::PerturbationConfig perturbation = geometry::PerturbationConfig::airfoil_defaults();
  /// Airfoils only: take nominal designs from a coordinate file instead of
  /// the built-in family.
  std::optional<std::filesystem::path> source;
  geometry::AirfoilFamilyRange family;
  unsigned threads = 1;

  static DatasetConfig defaults(DesignKind kind);
  void validate() const;
};

/// Per-channel min/max affine map onto [-1, 1]. Airfoils use two channels
/// (x, y interleaved), fields a single global channel.
struct Normalization {
  std::vector<double> lo, hi;

  std::size_t channels() const { return lo.size(); }
  std::vector<double> normalize(std::span<const double> values) const;
  std::vector<double> denormalize(std::span<const double> values) const;
  Design normalize(const Design& d) const { return {d.kind, normalize(d.values)}; }
  Design denormalize(const Design& d) const { return {d.kind, denormalize(d.values)}; }

  nlohmann::json to_json() const;
  static Normalization from_json(const nlohmann::json& j);
  bool operator==(const Normalization&) const = default;
};

Normalization fit_normalization(DesignKind kind, std::span<const double> values);

struct DesignDataset {
  DesignKind kind = DesignKind::Airfoil;
  std::size_t n_nominal = 0;
  std::size_t m_fabricated = 0;
  std::vector<double> nominal;     // n_nominal x design_size
  std::vector<double> fabricated;  // n_nominal x m_fabricated x design_size
  std::vector<double> motifs;      // metasurface only: 3 x 64 x 64
  nlohmann::json manifest;
  Normalization normalization;

  std::size_t design_size() const { return ganduf::design_size(kind); }
  std::span<const double> nominal_values(std::size_t i) const;
  std::span<const double> fabricated_values(std::size_t i, std::size_t j) const;
  Design nominal_design(std::size_t i) const;
  Design fabricated_design(std::size_t i, std::size_t j) const;

  bool operator==(const DesignDataset&) const = default;
};

/// Throws IoError naming the path when a source file is missing.
DesignDataset build_dataset(const DatasetConfig& cfg);
/// Rebuilds every design from the seeds recorded in a manifest.
DesignDataset regenerate(const nlohmann::json& manifest, unsigned threads = 1);

/// Writes manifest.json, nominal.bin, fabricated.bin (and motifs.bin).
void save_dataset(const DesignDataset& dataset, const std::filesystem::path& dir);
DesignDataset load_dataset(const std::filesystem::path& dir);

struct PairIndex {
  std::size_t nominal = 0;
  std::size_t fabricated = 0;
  bool operator==(const PairIndex&) const = default;
};

/// Uniform nominal index and, independently, a uniform fabricated index for it.
std::vector<PairIndex> sample_pairs(const DesignDataset& dataset, std::size_t batch, Rng& rng);

}  // namespace ganduf
