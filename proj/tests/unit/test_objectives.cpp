#include <cmath>
#include <functional>
#include <numeric>

#include "doctest.h"
#include "ganduf/error.hpp"
#include "ganduf/objectives.hpp"

using namespace ganduf;
using namespace ganduf::objectives;
using geometry::Point;

namespace {

// Independent re-statement of the airfoil score: smoothing written as a
// convolution over an explicitly mirrored array, thickness and camber taken
// from the pair table directly.
double airfoil_score_oracle(const std::vector<Point>& p, const AirfoilProxyParams& k) {
  const std::size_t n = p.size();
  std::vector<double> padded;
  padded.push_back(p[1].y);
  for (const auto& q : p) padded.push_back(q.y);
  padded.push_back(p[n - 2].y);
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = (padded[i] + 2 * padded[i + 1] + padded[i + 2]) / 4;

  double lo = 1e300, hi = -1e300;
  for (const auto& q : p) lo = std::min(lo, q.x), hi = std::max(hi, q.x);
  const double chord = hi - lo;
  const Point te{(p[0].x + p[n - 1].x) / 2, (s[0] + s[n - 1]) / 2};
  const Point le{(p[n / 2 - 1].x + p[n / 2].x) / 2, (s[n / 2 - 1] + s[n / 2]) / 2};
  double t = -1e300, c = -1e300;
  for (std::size_t i = 0; i < n / 2; ++i) {
    const std::size_t j = n - 1 - i;
    const double x = (p[i].x + p[j].x) / 2;
    const double line = le.y + (te.y - le.y) * (x - le.x) / (te.x - le.x);
    t = std::max(t, s[i] - s[j]);
    c = std::max(c, (s[i] + s[j]) / 2 - line);
  }
  t /= chord;
  c /= chord;
  double r = 0;
  for (std::size_t i = 1; i + 1 < n; ++i) r += std::pow(p[i + 1].y - 2 * p[i].y + p[i - 1].y, 2);
  auto bump = [](double x, double m, double w, double h) { return h * std::exp(-(x - m) * (x - m) / (2 * w * w)); };
  return bump(t, k.fragile_thickness, k.fragile_width, k.fragile_height) +
         bump(t, k.robust_thickness, k.robust_width, k.robust_height) + k.camber_gain * c - k.roughness_weight * r;
}

// Absorbance oracle working from the binary image: union-find components,
// perimeter counted as 0/1 transitions along padded rows and columns.
double absorbance_oracle(const geometry::LevelSetField& f) {
  const int n = 64;
  const auto b = f.binary();
  auto at = [&](int r, int c) { return r >= 0 && c >= 0 && r < n && c < n && b[r * n + c]; };
  std::vector<int> parent(n * n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int i) { return parent[i] == i ? i : parent[i] = find(parent[i]); };
  int filled = 0, transitions = 0;
  for (int r = -1; r < n; ++r)
    for (int c = -1; c < n; ++c) {
      if (r >= 0) transitions += at(r, c) != at(r, c + 1);
      if (c >= 0) transitions += at(r, c) != at(r + 1, c);
    }
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      if (!at(r, c)) continue;
      ++filled;
      if (at(r, c + 1)) parent[find(r * n + c)] = find(r * n + c + 1);
      if (at(r + 1, c)) parent[find(r * n + c)] = find((r + 1) * n + c);
    }
  int components = 0;
  for (int i = 0; i < n * n; ++i) components += b[i] && find(i) == i;
  const double phi = filled / 4096.0, per = transitions / 256.0, k1 = components > 0 ? components - 1 : 0;
  const double f0 = 8 + 1.5 * phi + 0.5 * per - 0.1 * k1, g = 0.25 * (1 + 0.2 * k1);
  double total = 0;
  for (int i = 0; i <= 10; ++i) {
    const double fr = 8 + 0.1 * i;
    total += 0.02 + 0.98 * (1 - std::exp(-phi / 0.1)) / (1 + std::pow((fr - f0) / g, 2));
  }
  return total;
}

std::vector<Point> with_zigzag(std::vector<Point> p, double a) {
  for (std::size_t i = 1; i + 1 < p.size(); ++i) p[i].y += (i % 2 ? a : -a);
  return p;
}

Design field_design(const geometry::LevelSetField& f) { return Design{DesignKind::Metasurface, f.values()}; }

}  // namespace

TEST_CASE("airfoil proxy matches an independent formula") {
  for (const auto& prm : {geometry::AirfoilParams{0.12, 0.02, 0.4}, geometry::AirfoilParams{0.16, 0.05, 0.3},
                          geometry::AirfoilParams{0.07, 0.0, 0.5}}) {
    const auto foil = geometry::synthetic_airfoil(prm);
    const auto e = airfoil_performance(foil);
    REQUIRE(e.feasible);
    CHECK(e.value == doctest::Approx(airfoil_score_oracle(foil.points(), {})).epsilon(1e-12));
    const auto f = airfoil_features(foil.points());
    CHECK(f.thickness == doctest::Approx(prm.thickness).epsilon(0.03));
    CHECK(f.camber == doctest::Approx(prm.camber).epsilon(0.05));
    CHECK(f.signed_area > 0.0);
  }
}

TEST_CASE("airfoil proxy edge cases") {
  std::vector<Point> plate(192);
  for (std::size_t i = 0; i < 192; ++i) plate[i] = {0.5 * (1 + std::cos(2 * M_PI * double(i) / 191)), 0.0};
  const auto flat = airfoil_performance(plate);
  CHECK(flat.feasible);
  CHECK(std::isfinite(flat.value));

  auto pts = geometry::synthetic_airfoil({}).points();
  std::vector<Point> reversed(pts.rbegin(), pts.rend());
  CHECK_FALSE(airfoil_performance(reversed).feasible);

  auto bad = pts;
  bad[10].y = std::nan("");
  CHECK_FALSE(airfoil_performance(bad).feasible);

  std::vector<Point> point(192, Point{0.3, 0.1});
  CHECK_FALSE(airfoil_performance(point).feasible);

  const AirfoilProxy proxy;
  Design wrong{DesignKind::Metasurface, std::vector<double>(4096, 0.0)};
  CHECK_THROWS_AS(proxy.evaluate(wrong), ContractError);
}

TEST_CASE("zigzag lowers the airfoil score monotonically") {
  // Checked on the reference thicknesses of the family, where the thickness
  // bump is smooth enough that roughness dominates the change.
  for (double t : {0.08, 0.12, 0.16, 0.19}) {
    const auto pts = geometry::synthetic_airfoil({t, 0.02, 0.4}).points();
    double previous = airfoil_performance(pts).value;
    for (double a : {1e-4, 5e-4, 1e-3, 2e-3, 5e-3}) {
      const double v = airfoil_performance(with_zigzag(pts, a)).value;
      CHECK(v < previous);
      previous = v;
    }
  }
}

TEST_CASE("metasurface proxy") {
  const MetasurfaceProxy proxy;
  const geometry::LevelSetField empty(std::vector<double>(4096, -1.0));
  const auto spec = absorbance_spectrum(empty);
  REQUIRE(spec.absorbance.size() == 11);
  for (double a : spec.absorbance) CHECK(a == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(spec.frequencies.front() == 8.0);
  CHECK(spec.frequencies.back() == 9.0);

  for (auto motif : {geometry::Motif::IBeam, geometry::Motif::Cross, geometry::Motif::SquareRing}) {
    const auto f = geometry::motif_field(motif);
    const double j = proxy.evaluate(field_design(f)).value;
    CHECK(j == doctest::Approx(absorbance_oracle(f)).epsilon(1e-12));
    CHECK(j >= 0.0);
    CHECK(j <= 11.0);
  }

  // Two disjoint squares: two components.
  std::vector<double> two(4096, -1.0);
  for (int r = 5; r < 15; ++r)
    for (int c = 5; c < 15; ++c) two[r * 64 + c] = two[(r + 30) * 64 + c + 30] = 1.0;
  const geometry::LevelSetField tf(two);
  const auto feats = field_features(tf);
  CHECK(feats.components == 2);
  CHECK(feats.fill_fraction == doctest::Approx(200.0 / 4096.0));
  CHECK(feats.perimeter == doctest::Approx(80.0 / 256.0));
  CHECK(metasurface_performance(tf) == doctest::Approx(absorbance_oracle(tf)).epsilon(1e-12));

  const auto full = field_features(geometry::LevelSetField(std::vector<double>(4096, 1.0)));
  CHECK(full.components == 1);
  CHECK(full.perimeter == doctest::Approx(1.0));

  CHECK_THROWS_AS(MetasurfaceProxyParams::from_json({{"n_frequencies", 0}}), ConfigError);
}

TEST_CASE("external command evaluator") {
  const auto foil = to_design(geometry::synthetic_airfoil({}));
  CHECK(ExternalCommand(DesignKind::Airfoil, "echo 2.5 #").evaluate(foil).value == 2.5);
  const auto sized = ExternalCommand(DesignKind::Airfoil, "test -s {} && echo 3").evaluate(foil);
  CHECK(sized.feasible);
  CHECK(sized.value == 3.0);
  CHECK_FALSE(ExternalCommand(DesignKind::Airfoil, "false").evaluate(foil).feasible);
  CHECK_FALSE(ExternalCommand(DesignKind::Airfoil, "echo not-a-number #").evaluate(foil).feasible);
  CHECK_THROWS_AS(ExternalCommand(DesignKind::Airfoil, ""), ConfigError);

  auto e = make_evaluator({{"type", "external_command"}, {"kind", "airfoil"}, {"command", "echo 1 #"}});
  CHECK(e->evaluate(foil).value == 1.0);
  CHECK(make_evaluator({{"type", "airfoil_proxy"}})->name() == "airfoil_proxy");
  CHECK_THROWS_AS(make_evaluator({{"type", "cfd"}}), ConfigError);
}

TEST_CASE("fragile and robust fixture ordering") {
  const auto report = verify_fixture({}, {}, 2000, 0.05, 3);
  CHECK(report.fragile.nominal > report.robust.nominal);
  CHECK(report.fragile.quantile < report.robust.quantile);
  CHECK(report.gap_holds());
  CHECK(report.fragile.infeasible == 0);
  CHECK(report.robust.infeasible == 0);
}
