#include "ganduf/dataset.hpp"

#include <algorithm>
#include <fstream>

#include "ganduf/array_io.hpp"
#include "ganduf/error.hpp"
#include "ganduf/parallel.hpp"

namespace ganduf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Seed labels keep nominal and fabricated streams disjoint.
constexpr std::uint64_t kNominalLabel = 1;
constexpr std::uint64_t kFabricatedLabel = 2;

std::size_t channel_count(DesignKind kind) { return kind == DesignKind::Airfoil ? 2 : 1; }

json perturbation_json(const geometry::PerturbationConfig& p) {
  return {{"noise_std", p.noise_std}, {"filter_std", p.filter_std}, {"seed", p.seed}};
}

geometry::PerturbationConfig perturbation_from(const json& j) {
  return {j.at("noise_std").get<double>(), j.at("filter_std").get<double>(), j.at("seed").get<std::uint64_t>()};
}

json family_json(const geometry::AirfoilFamilyRange& r) {
  return {{"thickness", {r.thickness_min, r.thickness_max}},
          {"camber", {r.camber_min, r.camber_max}},
          {"camber_position", {r.position_min, r.position_max}}};
}

std::vector<geometry::AirfoilDesign> read_source(const fs::path& path, std::size_t n) {
  if (!fs::exists(path)) throw IoError("airfoil source file not found: " + path.string());
  auto designs = geometry::load_airfoil_text(path);
  if (designs.size() < n) {
    throw ConfigError(path.string() + " holds " + std::to_string(designs.size()) + " airfoils, " + std::to_string(n) +
                      " requested");
  }
  designs.resize(n);
  return designs;
}

/// Builds all arrays from a fully specified manifest (seeds included).
DesignDataset materialise(const json& manifest, unsigned threads) {
  DesignDataset ds;
  ds.kind = parse_design_kind(manifest.at("kind"));
  ds.n_nominal = manifest.at("n_nominal");
  ds.m_fabricated = manifest.at("m_fabricated");
  const auto pert = perturbation_from(manifest.at("perturbation"));
  const auto& seeds = manifest.at("seeds");
  const auto& nominal_seeds = seeds.at("nominal");
  const auto& fab_seeds = seeds.at("fabricated");
  if (nominal_seeds.size() != ds.n_nominal || fab_seeds.size() != ds.n_nominal) {
    throw ValidationError("manifest seed lists do not match n_nominal");
  }
  const std::size_t dsz = ds.design_size();
  ds.nominal.resize(ds.n_nominal * dsz);
  ds.fabricated.resize(ds.n_nominal * ds.m_fabricated * dsz);

  std::vector<geometry::AirfoilDesign> sourced;
  if (manifest.contains("source")) {
    const fs::path path = manifest["source"].at("path").get<std::string>();
    if (!fs::exists(path)) throw IoError("airfoil source file not found: " + path.string());
    const auto sum = io::file_checksum(path);
    if (sum != manifest["source"].at("checksum").get<std::uint64_t>()) {
      throw ChecksumError("airfoil source file " + path.string() + " changed since the dataset was built");
    }
    sourced = read_source(path, ds.n_nominal);
  }
  const json* params = manifest.contains("designs") ? &manifest["designs"] : nullptr;

  parallel_for(ds.n_nominal, threads, [&](std::size_t i) {
    Design nominal;
    if (ds.kind == DesignKind::Airfoil) {
      if (!sourced.empty()) {
        nominal = to_design(sourced[i]);
      } else {
        const auto& p = params->at(i);
        nominal = to_design(geometry::synthetic_airfoil({p.at("thickness"), p.at("camber"), p.at("camber_position")}));
      }
    } else {
      const auto& w = params->at(i).at("motif_weights");
      nominal = to_design(geometry::synth_metasurface_nominal({w[0], w[1], w[2]}));
    }
    std::copy(nominal.values.begin(), nominal.values.end(), ds.nominal.begin() + static_cast<std::ptrdiff_t>(i * dsz));
    for (std::size_t j = 0; j < ds.m_fabricated; ++j) {
      Rng rng(fab_seeds[i].at(j).get<std::uint64_t>());
      const auto fab = fabricate(nominal, pert, rng);
      std::copy(fab.values.begin(), fab.values.end(),
                ds.fabricated.begin() + static_cast<std::ptrdiff_t>((i * ds.m_fabricated + j) * dsz));
    }
  });

  if (ds.kind == DesignKind::Metasurface) {
    for (const auto& f : geometry::motif_fields()) ds.motifs.insert(ds.motifs.end(), f.values().begin(), f.values().end());
  }
  std::vector<double> all(ds.nominal);
  all.insert(all.end(), ds.fabricated.begin(), ds.fabricated.end());
  ds.normalization = fit_normalization(ds.kind, all);
  ds.manifest = manifest;
  ds.manifest["normalization"] = ds.normalization.to_json();
  return ds;
}

}  // namespace

DatasetConfig DatasetConfig::defaults(DesignKind kind) {
  DatasetConfig c;
  c.kind = kind;
  if (kind == DesignKind::Metasurface) {
    c.n_nominal = 1000;
    c.perturbation = geometry::PerturbationConfig::metasurface_defaults();
  }
  return c;
}

void DatasetConfig::validate() const {
  if (n_nominal < 1 || m_fabricated < 1) throw ConfigError("dataset needs n_nominal >= 1 and m_fabricated >= 1");
  perturbation.validate();
  if (source && kind != DesignKind::Airfoil) throw ConfigError("a source file is only supported for airfoils");
}

// ---------------------------------------------------------------------------

std::vector<double> Normalization::normalize(std::span<const double> values) const {
  std::vector<double> out(values.size());
  const std::size_t c = channels();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double lo_i = lo[i % c], range = hi[i % c] - lo_i;
    out[i] = range > 0.0 ? 2.0 * (values[i] - lo_i) / range - 1.0 : values[i] - lo_i;
  }
  return out;
}

std::vector<double> Normalization::denormalize(std::span<const double> values) const {
  std::vector<double> out(values.size());
  const std::size_t c = channels();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double lo_i = lo[i % c], range = hi[i % c] - lo_i;
    out[i] = range > 0.0 ? (values[i] + 1.0) * 0.5 * range + lo_i : values[i] + lo_i;
  }
  return out;
}

json Normalization::to_json() const { return {{"lo", lo}, {"hi", hi}}; }

Normalization Normalization::from_json(const json& j) {
  Normalization n{j.at("lo").get<std::vector<double>>(), j.at("hi").get<std::vector<double>>()};
  if (n.lo.empty() || n.lo.size() != n.hi.size()) throw ValidationError("malformed normalization statistics");
  return n;
}

Normalization fit_normalization(DesignKind kind, std::span<const double> values) {
  const std::size_t c = channel_count(kind);
  if (values.empty() || values.size() % c) throw DimensionError("cannot fit normalization to this many values");
  Normalization n{{values.begin(), values.begin() + static_cast<std::ptrdiff_t>(c)},
                  {values.begin(), values.begin() + static_cast<std::ptrdiff_t>(c)}};
  for (std::size_t i = 0; i < values.size(); ++i) {
    n.lo[i % c] = std::min(n.lo[i % c], values[i]);
    n.hi[i % c] = std::max(n.hi[i % c], values[i]);
  }
  return n;
}

// ---------------------------------------------------------------------------

std::span<const double> DesignDataset::nominal_values(std::size_t i) const {
  if (i >= n_nominal) throw IndexError("nominal index " + std::to_string(i) + " out of range");
  return {nominal.data() + i * design_size(), design_size()};
}

std::span<const double> DesignDataset::fabricated_values(std::size_t i, std::size_t j) const {
  if (i >= n_nominal || j >= m_fabricated) {
    throw IndexError("fabricated index (" + std::to_string(i) + ", " + std::to_string(j) + ") out of range");
  }
  return {fabricated.data() + (i * m_fabricated + j) * design_size(), design_size()};
}

Design DesignDataset::nominal_design(std::size_t i) const {
  const auto v = nominal_values(i);
  return {kind, {v.begin(), v.end()}};
}

Design DesignDataset::fabricated_design(std::size_t i, std::size_t j) const {
  const auto v = fabricated_values(i, j);
  return {kind, {v.begin(), v.end()}};
}

DesignDataset build_dataset(const DatasetConfig& cfg) {
  cfg.validate();
  const std::uint64_t base = cfg.perturbation.seed;
  json m;
  m["format_version"] = kDatasetFormatVersion;
  m["kind"] = to_string(cfg.kind);
  m["n_nominal"] = cfg.n_nominal;
  m["m_fabricated"] = cfg.m_fabricated;
  m["perturbation"] = perturbation_json(cfg.perturbation);
  m["seed_scheme"] = "derive_seed(base, 1, i) for nominal i; derive_seed(base, 2, i, j) for fabrication j of i";

  json nominal_seeds = json::array(), fab_seeds = json::array();
  for (std::size_t i = 0; i < cfg.n_nominal; ++i) {
    nominal_seeds.push_back(derive_seed(base, kNominalLabel, i));
    json row = json::array();
    for (std::size_t j = 0; j < cfg.m_fabricated; ++j) row.push_back(derive_seed(base, kFabricatedLabel, i, j));
    fab_seeds.push_back(std::move(row));
  }
  m["seeds"] = {{"base", base}, {"nominal", nominal_seeds}, {"fabricated", fab_seeds}};

  if (cfg.source) {
    read_source(*cfg.source, cfg.n_nominal);  // fail early with the path
    m["source"] = {{"path", fs::absolute(*cfg.source).string()}, {"checksum", io::file_checksum(*cfg.source)}};
  } else {
    json designs = json::array();
    for (std::size_t i = 0; i < cfg.n_nominal; ++i) {
      Rng rng(nominal_seeds[i].get<std::uint64_t>());
      if (cfg.kind == DesignKind::Airfoil) {
        const auto p = geometry::sample_airfoil_params(rng, cfg.family);
        designs.push_back({{"thickness", p.thickness}, {"camber", p.camber}, {"camber_position", p.camber_position}});
      } else {
        const auto w = geometry::sample_motif_weights(rng);
        designs.push_back({{"motif_weights", {w[0], w[1], w[2]}}});
      }
    }
    m["designs"] = std::move(designs);
    if (cfg.kind == DesignKind::Airfoil) m["family"] = family_json(cfg.family);
  }
  if (cfg.kind == DesignKind::Metasurface) {
    m["motifs"] = {{"order", {"i_beam", "cross", "square_ring"}},
                   {"distance_scale", 16.0},
                   {"i_beam", "flanges half-size (18, 4) at y = +-18, web half-size (4, 18)"},
                   {"cross", "bars half-size (24, 5) and (5, 24)"},
                   {"square_ring", "outer half-size 24, inner half-size 16"}};
  }
  return materialise(m, cfg.threads);
}

DesignDataset regenerate(const json& manifest, unsigned threads) {
  json m = manifest;
  m.erase("normalization");
  return materialise(m, threads);
}

// ---------------------------------------------------------------------------

void save_dataset(const DesignDataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "manifest.json");
    if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
    out << ds.manifest.dump(1) << '\n';
  }
  const auto n = static_cast<std::uint64_t>(ds.n_nominal);
  const auto m = static_cast<std::uint64_t>(ds.m_fabricated);
  const auto shape = design_shape(ds.kind);
  io::save_array(dir / "nominal.bin", {{n, shape[0], shape[1]}, ds.nominal});
  io::save_array(dir / "fabricated.bin", {{n, m, shape[0], shape[1]}, ds.fabricated});
  if (ds.kind == DesignKind::Metasurface) io::save_array(dir / "motifs.bin", {{3, shape[0], shape[1]}, ds.motifs});
}

DesignDataset load_dataset(const fs::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  const int version = manifest.value("format_version", -1);
  if (version != kDatasetFormatVersion) {
    throw VersionError(manifest_path.string() + ": dataset format version " + std::to_string(version) +
                       " is not supported (reader version " + std::to_string(kDatasetFormatVersion) + ")");
  }
  DesignDataset ds;
  ds.kind = parse_design_kind(manifest.at("kind"));
  ds.n_nominal = manifest.at("n_nominal");
  ds.m_fabricated = manifest.at("m_fabricated");
  ds.normalization = Normalization::from_json(manifest.at("normalization"));
  ds.manifest = std::move(manifest);

  const auto shape = design_shape(ds.kind);
  const std::vector<std::uint64_t> nominal_shape{ds.n_nominal, shape[0], shape[1]};
  const std::vector<std::uint64_t> fab_shape{ds.n_nominal, ds.m_fabricated, shape[0], shape[1]};
  auto nominal = io::load_array(dir / "nominal.bin");
  auto fabricated = io::load_array(dir / "fabricated.bin");
  if (nominal.shape != nominal_shape || fabricated.shape != fab_shape) {
    throw DimensionError("dataset arrays in " + dir.string() + " do not match the manifest");
  }
  ds.nominal = std::move(nominal.data);
  ds.fabricated = std::move(fabricated.data);
  if (ds.kind == DesignKind::Metasurface) ds.motifs = io::load_array(dir / "motifs.bin").data;
  return ds;
}

std::vector<PairIndex> sample_pairs(const DesignDataset& ds, std::size_t batch, Rng& rng) {
  if (ds.n_nominal == 0 || ds.m_fabricated == 0) throw ContractError("cannot sample from an empty dataset");
  std::vector<PairIndex> out(batch);
  for (auto& p : out) {
    p.nominal = rng.index(ds.n_nominal);
    p.fabricated = rng.index(ds.m_fabricated);
  }
  return out;
}

}  // namespace ganduf
