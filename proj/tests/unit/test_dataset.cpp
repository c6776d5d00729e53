#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "ganduf/array_io.hpp"
#include "ganduf/dataset.hpp"
#include "ganduf/error.hpp"
#include "temp_dir.hpp"

using namespace ganduf;
using testing_support::TempDir;

namespace {

std::vector<unsigned char> file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& b) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

DatasetConfig small_config(DesignKind kind, std::size_t n, std::size_t m, std::uint64_t seed) {
  auto cfg = DatasetConfig::defaults(kind);
  cfg.n_nominal = n;
  cfg.m_fabricated = m;
  cfg.perturbation.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("design kinds and conversions") {
  CHECK(parse_design_kind("airfoil") == DesignKind::Airfoil);
  CHECK(parse_design_kind("metasurface") == DesignKind::Metasurface);
  CHECK_THROWS_AS(parse_design_kind("wing"), ConfigError);
  CHECK(design_shape(DesignKind::Airfoil) == std::vector<std::size_t>{192, 2});
  CHECK(design_size(DesignKind::Metasurface) == 4096);

  const auto foil = geometry::synthetic_airfoil({});
  const auto d = to_design(foil);
  CHECK(d.values.size() == 384);
  CHECK(d.values[2] == foil.points()[1].x);
  CHECK(d.values[3] == foil.points()[1].y);
  CHECK(to_airfoil(d).points() == foil.points());
  CHECK_THROWS_AS(to_field(d), ContractError);

  Design bad{DesignKind::Metasurface, std::vector<double>(10, 0.0)};
  CHECK_THROWS_AS(bad.check(), DimensionError);
}

TEST_CASE("array files round-trip and reject damage") {
  io::NdArray a{{2, 3}, {1.0, -2.5, 3.25, 0.0, -0.0, 1e-300}};
  std::stringstream ss;
  io::write_array(ss, a);
  const auto bytes = ss.str();
  std::stringstream in(bytes);
  CHECK(io::read_array(in, "mem") == a);

  SUBCASE("corrupted payload byte") {
    auto b = bytes;
    b[b.size() - 3] ^= 0x10;
    std::stringstream s(b);
    CHECK_THROWS_AS(io::read_array(s, "mem"), ChecksumError);
  }
  SUBCASE("truncated payload") {
    std::stringstream s(bytes.substr(0, bytes.size() - 5));
    CHECK_THROWS_AS(io::read_array(s, "mem"), TruncatedError);
  }
  SUBCASE("unknown version names both versions") {
    auto b = bytes;
    b[8] = 7;
    std::stringstream s(b);
    try {
      io::read_array(s, "mem");
      FAIL("expected a version error");
    } catch (const VersionError& e) {
      const std::string msg = e.what();
      CHECK(msg.find('7') != std::string::npos);
      CHECK(msg.find(std::to_string(io::kArrayFormatVersion)) != std::string::npos);
    }
  }
  SUBCASE("bad magic") {
    auto b = bytes;
    b[0] = 'X';
    std::stringstream s(b);
    CHECK_THROWS_AS(io::read_array(s, "mem"), FormatError);
  }
  SUBCASE("shape and data disagree") {
    std::stringstream s;
    CHECK_THROWS_AS(io::write_array(s, io::NdArray{{4}, {1.0}}), ContractError);
  }
}

TEST_CASE("airfoil dataset shape, pairing and provenance") {
  const auto ds = build_dataset(small_config(DesignKind::Airfoil, 4, 3, 11));
  CHECK(ds.nominal.size() == 4 * 384);
  CHECK(ds.fabricated.size() == 4 * 3 * 384);
  CHECK(ds.manifest["seeds"]["nominal"].size() == 4);
  CHECK(ds.manifest["seeds"]["fabricated"][2].size() == 3);

  // fabricated[i][j] is the recorded perturbation of nominal[i].
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      Rng rng(ds.manifest["seeds"]["fabricated"][i][j].get<std::uint64_t>());
      const auto expect = fabricate(ds.nominal_design(i), geometry::PerturbationConfig::airfoil_defaults(), rng);
      CHECK(expect == ds.fabricated_design(i, j));
    }
  CHECK_THROWS_AS(ds.fabricated_values(4, 0), IndexError);
  CHECK_THROWS_AS(ds.fabricated_values(0, 3), IndexError);
}

TEST_CASE("regeneration from the manifest is bit-identical") {
  for (auto kind : {DesignKind::Airfoil, DesignKind::Metasurface}) {
    const auto ds = build_dataset(small_config(kind, 1, 1, 5));
    const auto again = regenerate(ds.manifest);
    CHECK(again == ds);
    const auto threaded = regenerate(ds.manifest, 3);
    CHECK(threaded == ds);
  }
  const auto a = build_dataset(small_config(DesignKind::Airfoil, 3, 2, 1));
  const auto b = build_dataset(small_config(DesignKind::Airfoil, 3, 2, 2));
  CHECK(a.nominal != b.nominal);
}

TEST_CASE("save and load round-trip including manifest") {
  TempDir tmp("ds");
  for (auto kind : {DesignKind::Airfoil, DesignKind::Metasurface}) {
    const auto ds = build_dataset(small_config(kind, 2, 2, 9));
    const auto dir = tmp / to_string(kind);
    save_dataset(ds, dir);
    CHECK(std::filesystem::exists(dir / "manifest.json"));
    CHECK(std::filesystem::exists(dir / "motifs.bin") == (kind == DesignKind::Metasurface));
    const auto back = load_dataset(dir);
    CHECK(back == ds);
    if (kind == DesignKind::Metasurface) CHECK(back.motifs.size() == 3 * 4096);
  }

  const auto dir = tmp / "airfoil";
  auto bytes = file_bytes(dir / "fabricated.bin");
  bytes[bytes.size() / 2] ^= 0x01;
  write_bytes(dir / "fabricated.bin", bytes);
  CHECK_THROWS_AS(load_dataset(dir), ChecksumError);

  bytes.resize(bytes.size() - 100);
  write_bytes(dir / "fabricated.bin", bytes);
  CHECK_THROWS_AS(load_dataset(dir), TruncatedError);

  CHECK_THROWS_AS(load_dataset(tmp / "missing"), IoError);
}

TEST_CASE("missing airfoil source names the path") {
  auto cfg = small_config(DesignKind::Airfoil, 2, 1, 0);
  cfg.source = "/nonexistent/foils.dat";
  try {
    build_dataset(cfg);
    FAIL("expected an I/O error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/foils.dat") != std::string::npos);
  }
}

TEST_CASE("airfoil source file provides nominal designs") {
  TempDir tmp("src");
  const auto path = tmp / "foils.dat";
  {
    std::ofstream out(path);
    for (double t : {0.1, 0.15}) {
      out << "foil\n";
      for (const auto& p : geometry::synthetic_airfoil({t, 0.02, 0.4}).points()) out << p.x << ' ' << p.y << '\n';
    }
  }
  auto cfg = small_config(DesignKind::Airfoil, 2, 1, 0);
  cfg.source = path;
  const auto ds = build_dataset(cfg);
  CHECK(ds.manifest.contains("source"));
  CHECK(regenerate(ds.manifest) == ds);
  cfg.n_nominal = 3;
  CHECK_THROWS_AS(build_dataset(cfg), ConfigError);
}

TEST_CASE("normalization") {
  const auto ds = build_dataset(small_config(DesignKind::Airfoil, 5, 3, 3));
  const auto& nz = ds.normalization;
  CHECK(nz.channels() == 2);
  double lo[2] = {1e9, 1e9}, hi[2] = {-1e9, -1e9};
  for (std::size_t i = 0; i < 5; ++i) {
    const auto n = nz.normalize(ds.nominal_values(i));
    for (std::size_t k = 0; k < n.size(); ++k) {
      lo[k % 2] = std::min(lo[k % 2], n[k]);
      hi[k % 2] = std::max(hi[k % 2], n[k]);
    }
    for (std::size_t j = 0; j < 3; ++j) {
      const auto f = nz.normalize(ds.fabricated_values(i, j));
      for (std::size_t k = 0; k < f.size(); ++k) {
        lo[k % 2] = std::min(lo[k % 2], f[k]);
        hi[k % 2] = std::max(hi[k % 2], f[k]);
      }
      const auto back = nz.denormalize(f);
      const auto orig = ds.fabricated_values(i, j);
      for (std::size_t k = 0; k < back.size(); ++k) CHECK(std::abs(back[k] - orig[k]) <= 1e-12);
    }
  }
  for (int c = 0; c < 2; ++c) {
    CHECK(lo[c] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(hi[c] == doctest::Approx(1.0).epsilon(1e-14));
  }

  // Constant-zero field stays constant.
  const std::vector<double> zeros(4096, 0.0);
  const auto flat = fit_normalization(DesignKind::Metasurface, zeros);
  const auto back = flat.denormalize(flat.normalize(zeros));
  CHECK(back == zeros);

  const auto js = Normalization::from_json(nz.to_json());
  CHECK(js == nz);
}

TEST_CASE("batch sampling keeps pairs intact") {
  const auto ds = build_dataset(small_config(DesignKind::Airfoil, 6, 4, 8));
  Rng rng(3);
  std::set<std::size_t> seen_i, seen_j;
  for (int rep = 0; rep < 50; ++rep) {
    for (const auto& p : sample_pairs(ds, 32, rng)) {
      REQUIRE(p.nominal < 6);
      REQUIRE(p.fabricated < 4);
      seen_i.insert(p.nominal);
      seen_j.insert(p.fabricated);
      // Pair lookup resolves to the fabrication of the same nominal.
      const auto f = ds.fabricated_values(p.nominal, p.fabricated);
      CHECK(f.data() == ds.fabricated.data() + (p.nominal * 4 + p.fabricated) * 384);
    }
  }
  CHECK(seen_i.size() == 6);
  CHECK(seen_j.size() == 4);
  Rng r1(4), r2(4);
  CHECK(sample_pairs(ds, 16, r1) == sample_pairs(ds, 16, r2));
}

TEST_CASE("config validation") {
  auto cfg = small_config(DesignKind::Airfoil, 0, 1, 0);
  CHECK_THROWS_AS(build_dataset(cfg), ConfigError);
  cfg = small_config(DesignKind::Metasurface, 1, 1, 0);
  cfg.source = "x.dat";
  CHECK_THROWS_AS(build_dataset(cfg), ConfigError);
  CHECK(DatasetConfig::defaults(DesignKind::Airfoil).n_nominal == 1528);
  CHECK(DatasetConfig::defaults(DesignKind::Metasurface).n_nominal == 1000);
  CHECK(DatasetConfig::defaults(DesignKind::Metasurface).m_fabricated == 10);
}
