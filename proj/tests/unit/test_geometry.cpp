#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "ganduf/error.hpp"
#include "ganduf/geometry.hpp"
#include "oracles.hpp"

using namespace ganduf::geometry;

namespace {

double max_gap(const AirfoilDesign& d) {
  double g = 0.0;
  const auto& p = d.points();
  for (std::size_t i = 1; i < p.size(); ++i) g = std::max(g, std::hypot(p[i].x - p[i - 1].x, p[i].y - p[i - 1].y));
  return g;
}

/// Direct double sum of the FFD map with its own Bernstein evaluation.
Point direct_ffd(double u, double v, const ControlLattice& lat) {
  Point out{0, 0};
  const int nx = static_cast<int>(lat.cols()) - 1, ny = static_cast<int>(lat.rows()) - 1;
  for (int l = 0; l <= nx; ++l)
    for (int m = 0; m <= ny; ++m) {
      const double bl = oracle::binomial(nx, l) * std::pow(u, l) * std::pow(1 - u, nx - l);
      const double bm = oracle::binomial(ny, m) * std::pow(v, m) * std::pow(1 - v, ny - m);
      out.x += bl * bm * lat.at(static_cast<std::size_t>(m), static_cast<std::size_t>(l)).x;
      out.y += bl * bm * lat.at(static_cast<std::size_t>(m), static_cast<std::size_t>(l)).y;
    }
  return out;
}

}  // namespace

TEST_CASE("bernstein polynomials") {
  CHECK(bernstein(2, 1, 0.5) == doctest::Approx(0.5));
  CHECK(bernstein(7, 0, 0.0) == 1.0);
  double s = 0.0;
  for (int i = 0; i <= 7; ++i) s += bernstein(7, i, 0.37);
  CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(bernstein(7, 8, 0.5), ganduf::IndexError);
  CHECK_THROWS_AS(bernstein(3, -1, 0.5), ganduf::IndexError);
}

TEST_CASE("parametric coordinates") {
  std::vector<Point> pts(kAirfoilPoints, Point{0.5, 0.1});
  pts[0] = {0.0, -0.2};
  pts[1] = {1.0, 0.4};
  pts[2] = {0.5, 0.1};
  const AirfoilDesign d(pts);
  const auto c = parametric_coords(d);
  CHECK(c.u[0] == 0.0);
  CHECK(c.v[0] == 0.0);
  CHECK(c.u[1] == 1.0);
  CHECK(c.v[1] == 1.0);
  CHECK(c.u[2] == doctest::Approx(0.5));
  CHECK(c.v[2] == doctest::Approx(0.5));

  std::vector<Point> flat(kAirfoilPoints);
  for (std::size_t i = 0; i < flat.size(); ++i) flat[i] = {static_cast<double>(i) / 191.0, 0.0};
  CHECK_THROWS_AS(parametric_coords(AirfoilDesign(flat)), ganduf::DegenerateGeometryError);
}

TEST_CASE("airfoil validation") {
  CHECK_THROWS_AS(AirfoilDesign(std::vector<Point>(10)), ganduf::ValidationError);
  std::vector<Point> nan_pts(kAirfoilPoints, Point{0.0, 0.0});
  nan_pts[3].y = std::nan("");
  CHECK_THROWS_AS(AirfoilDesign{nan_pts}, ganduf::ValidationError);
}

TEST_CASE("regular lattice follows the grid equation") {
  const BoundingBox box{-0.1, 1.3, -0.2, 0.4};
  const auto lat = ControlLattice::regular(box, 3, 8);
  for (std::size_t m = 0; m < 3; ++m)
    for (std::size_t l = 0; l < 8; ++l) {
      CHECK(lat.at(m, l).x == doctest::Approx(box.x_min + l / 7.0 * box.width()));
      CHECK(lat.at(m, l).y == doctest::Approx(box.y_min + m / 2.0 * box.height()));
    }
}

TEST_CASE("FFD identity, translation and a single raised control point") {
  const auto nominal = synthetic_airfoil({0.12, 0.03, 0.4});
  auto lattice = airfoil_lattice(nominal);

  const auto same = ffd_deform(nominal, lattice);
  for (std::size_t i = 0; i < kAirfoilPoints; ++i) {
    CHECK(std::abs(same.points()[i].x - nominal.points()[i].x) <= 1e-12);
    CHECK(std::abs(same.points()[i].y - nominal.points()[i].y) <= 1e-12);
  }

  auto shifted = lattice;
  for (std::size_t m = 0; m < 3; ++m)
    for (std::size_t l = 0; l < 8; ++l) shifted.at(m, l).y += 0.05;
  const auto moved = ffd_deform(nominal, shifted);
  for (std::size_t i = 0; i < kAirfoilPoints; ++i) {
    CHECK(moved.points()[i].x == doctest::Approx(nominal.points()[i].x).epsilon(1e-12));
    CHECK(moved.points()[i].y - nominal.points()[i].y == doctest::Approx(0.05).epsilon(1e-10));
  }

  auto raised = lattice;
  raised.at(1, 3).y += 0.1;
  const auto bumped = ffd_deform(nominal, raised);
  const auto coords = parametric_coords(nominal);
  for (std::size_t i = 0; i < kAirfoilPoints; ++i) {
    const auto expect = direct_ffd(coords.u[i], coords.v[i], raised);
    CHECK(bumped.points()[i].x == doctest::Approx(expect.x).epsilon(1e-12));
    CHECK(bumped.points()[i].y == doctest::Approx(expect.y).epsilon(1e-12));
  }

  CHECK_THROWS_AS(ffd_deform(nominal, ControlLattice::regular(nominal.bbox(), 4, 8)), ganduf::ConfigError);
}

TEST_CASE("airfoil perturbation") {
  const auto nominal = synthetic_airfoil({0.12, 0.02, 0.4});

  SUBCASE("end columns stay fixed") {
    auto lattice = airfoil_lattice(nominal);
    const auto before = lattice;
    ganduf::Rng rng(4);
    perturb_airfoil_lattice(lattice, 0.02, rng);
    for (std::size_t m = 0; m < 3; ++m) {
      CHECK(lattice.at(m, 0) == before.at(m, 0));
      CHECK(lattice.at(m, 7) == before.at(m, 7));
      for (std::size_t l = 1; l < 7; ++l) {
        CHECK(lattice.at(m, l).x == before.at(m, l).x);
        CHECK(lattice.at(m, l).y != before.at(m, l).y);
      }
    }
  }
  SUBCASE("fixed seed reproduces") {
    ganduf::Rng a(17), b(17);
    const auto cfg = PerturbationConfig::airfoil_defaults();
    CHECK(perturb_airfoil(nominal, cfg, a).points() == perturb_airfoil(nominal, cfg, b).points());
  }
  SUBCASE("vanishing noise converges to the nominal design") {
    ganduf::Rng rng(3);
    const auto out = perturb_airfoil(nominal, {1e-12, 0.0, 0}, rng);
    for (std::size_t i = 0; i < kAirfoilPoints; ++i) CHECK(std::abs(out.points()[i].y - nominal.points()[i].y) < 1e-10);
  }
  SUBCASE("fabricated outlines stay continuous") {
    ganduf::Rng rng(8);
    const double base = max_gap(nominal);
    for (int k = 0; k < 200; ++k) {
      const auto fab = perturb_airfoil(nominal, PerturbationConfig::airfoil_defaults(), rng);
      CHECK(max_gap(fab) <= 3.0 * base);
    }
  }
  CHECK_THROWS_AS(PerturbationConfig({0.0, 0.0, 0}).validate(), ganduf::ValidationError);
}

TEST_CASE("synthetic airfoil family") {
  const auto d = synthetic_airfoil({0.15, 0.04, 0.35});
  const auto& p = d.points();
  double thickness = 0.0, camber = 0.0;
  for (std::size_t i = 0; i < kAirfoilPoints / 2; ++i) {
    CHECK(p[i].x == doctest::Approx(p[kAirfoilPoints - 1 - i].x).epsilon(1e-12));
    thickness = std::max(thickness, p[i].y - p[kAirfoilPoints - 1 - i].y);
    camber = std::max(camber, 0.5 * (p[i].y + p[kAirfoilPoints - 1 - i].y));
  }
  CHECK(thickness == doctest::Approx(0.15).epsilon(0.01));
  CHECK(camber == doctest::Approx(0.04).epsilon(0.01));
  CHECK(d.bbox().x_min >= 0.0);
  CHECK(d.bbox().x_max == doctest::Approx(1.0));
}

TEST_CASE("airfoil text loader") {
  const auto dir = std::filesystem::temp_directory_path() / "ganduf_geom_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "two.dat";
  {
    std::ofstream out(path);
    for (auto t : {0.1, 0.14}) {
      out << "NACA-like " << t << "\n";
      for (const auto& pt : synthetic_airfoil({t, 0.02, 0.4}).points()) out << pt.x << " " << pt.y << "\n";
    }
  }
  const auto designs = load_airfoil_text(path);
  CHECK(designs.size() == 2);
  try {
    load_airfoil_text(dir / "missing.dat");
    FAIL("expected IoError");
  } catch (const ganduf::IoError& e) {
    CHECK(std::string(e.what()).find("missing.dat") != std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("metasurface nominal synthesis") {
  const auto motifs = motif_fields();
  CHECK(synth_metasurface_nominal({1, 0, 0}).values() == motifs[0].values());
  const auto half = synth_metasurface_nominal({0.5, 0.5, 0});
  for (std::size_t i = 0; i < half.values().size(); ++i) {
    CHECK(half.values()[i] == doctest::Approx(0.5 * (motifs[0].values()[i] + motifs[1].values()[i])));
  }
  ganduf::Rng rng(2);
  const auto w = sample_motif_weights(rng);
  CHECK(w[0] + w[1] + w[2] == doctest::Approx(1.0));
  const auto bin = synth_metasurface_nominal(w).binary();
  CHECK(bin.size() == 64 * 64);
  for (auto b : bin) CHECK((b == 0 || b == 1));
  CHECK_THROWS_AS(synth_metasurface_nominal({0.6, 0.6, 0}), ganduf::ValidationError);
  CHECK_THROWS_AS(synth_metasurface_nominal({1.2, -0.2, 0}), ganduf::ValidationError);

  // Every motif has material inside and void outside.
  for (const auto& m : motifs) {
    std::size_t filled = 0;
    for (auto b : m.binary()) filled += b;
    CHECK(filled > 200);
    CHECK(filled < 64 * 64 / 2);
  }
}

TEST_CASE("metasurface perturbation") {
  const auto field = synth_metasurface_nominal({0.2, 0.3, 0.5});

  SUBCASE("identity path") {
    const auto warped = gaussian_filter(ffd_warp_field(field, metasurface_lattice()), 0.0);
    for (std::size_t i = 0; i < field.values().size(); ++i) CHECK(std::abs(warped.values()[i] - field.values()[i]) <= 1e-12);
  }
  SUBCASE("constants survive") {
    const LevelSetField c(std::vector<double>(64 * 64, 0.37));
    ganduf::Rng rng(1);
    const auto out = perturb_metasurface(c, {3.0, 2.5, 0}, rng);
    for (double v : out.values()) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
  }
  SUBCASE("impulse response is the 2-D Gaussian kernel") {
    std::vector<double> v(64 * 64, 0.0);
    v[32 * 64 + 32] = 1.0;
    const auto out = gaussian_filter(LevelSetField(v), 2.0);
    // Independent kernel: normalised exp(-k^2/8) on [-8, 8], outer product.
    std::vector<double> k1(17);
    double tot = 0.0;
    for (int k = -8; k <= 8; ++k) tot += k1[static_cast<std::size_t>(k + 8)] = std::exp(-k * k / 8.0);
    for (auto& x : k1) x /= tot;
    for (int r = 0; r < 64; ++r)
      for (int c = 0; c < 64; ++c) {
        const int dr = r - 32, dc = c - 32;
        const double expect = (std::abs(dr) <= 8 && std::abs(dc) <= 8)
                                  ? k1[static_cast<std::size_t>(dr + 8)] * k1[static_cast<std::size_t>(dc + 8)]
                                  : 0.0;
        CHECK(out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) == doctest::Approx(expect).epsilon(1e-12));
      }
  }
  SUBCASE("filter preserves the mean") {
    ganduf::Rng rng(9);
    const LevelSetField noisy(rng.normal_vector(64 * 64));
    const auto out = gaussian_filter(noisy, 2.0);
    double a = 0.0, b = 0.0;
    for (double v : noisy.values()) a += v;
    for (double v : out.values()) b += v;
    CHECK(std::abs(a - b) / (64.0 * 64.0) < 1e-9);
  }
  SUBCASE("fixed seed reproduces") {
    ganduf::Rng a(5), b(5);
    const auto cfg = PerturbationConfig::metasurface_defaults();
    CHECK(perturb_metasurface(field, cfg, a).values() == perturb_metasurface(field, cfg, b).values());
  }
}
