#include "ganduf/objectives.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>

#include "ganduf/array_io.hpp"
#include "ganduf/error.hpp"
#include "ganduf/stats.hpp"

namespace ganduf::objectives {

using geometry::Point;
using nlohmann::json;

namespace {

constexpr std::size_t kN = geometry::kAirfoilPoints;

double gaussian_bump(double x, double centre, double width, double height) {
  const double d = (x - centre) / width;
  return height * std::exp(-0.5 * d * d);
}

}  // namespace

json AirfoilProxyParams::to_json() const {
  return {{"fragile_thickness", fragile_thickness}, {"fragile_width", fragile_width},
          {"fragile_height", fragile_height},       {"robust_thickness", robust_thickness},
          {"robust_width", robust_width},           {"robust_height", robust_height},
          {"camber_gain", camber_gain},             {"roughness_weight", roughness_weight}};
}

AirfoilProxyParams AirfoilProxyParams::from_json(const json& j) {
  AirfoilProxyParams p;
  p.fragile_thickness = j.value("fragile_thickness", p.fragile_thickness);
  p.fragile_width = j.value("fragile_width", p.fragile_width);
  p.fragile_height = j.value("fragile_height", p.fragile_height);
  p.robust_thickness = j.value("robust_thickness", p.robust_thickness);
  p.robust_width = j.value("robust_width", p.robust_width);
  p.robust_height = j.value("robust_height", p.robust_height);
  p.camber_gain = j.value("camber_gain", p.camber_gain);
  p.roughness_weight = j.value("roughness_weight", p.roughness_weight);
  if (!(p.fragile_width > 0.0) || !(p.robust_width > 0.0) || p.roughness_weight < 0.0) {
    throw ConfigError("airfoil proxy widths must be positive and the roughness weight nonnegative");
  }
  return p;
}

AirfoilFeatures airfoil_features(const std::vector<Point>& pts) {
  if (pts.size() != kN) throw DimensionError("airfoil features need 192 points");
  // Whole-sample reflection at the ends, so an alternating sequence smooths to zero everywhere.
  std::vector<double> ys(kN);
  for (std::size_t i = 0; i < kN; ++i) {
    const double prev = pts[i == 0 ? 1 : i - 1].y;
    const double next = pts[i + 1 == kN ? kN - 2 : i + 1].y;
    ys[i] = 0.25 * (prev + 2.0 * pts[i].y + next);
  }
  double x_min = pts[0].x, x_max = pts[0].x;
  for (const auto& p : pts) {
    x_min = std::min(x_min, p.x);
    x_max = std::max(x_max, p.x);
  }
  const double chord = x_max - x_min;

  // Chord line from the trailing edge (mean of the end points) to the leading edge (middle pair).
  const double te_x = 0.5 * (pts.front().x + pts.back().x), te_y = 0.5 * (ys.front() + ys.back());
  const double le_x = 0.5 * (pts[kN / 2 - 1].x + pts[kN / 2].x), le_y = 0.5 * (ys[kN / 2 - 1] + ys[kN / 2]);
  AirfoilFeatures f;
  f.thickness = -std::numeric_limits<double>::infinity();
  f.camber = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < kN / 2; ++i) {
    const std::size_t k = kN - 1 - i;
    const double x = 0.5 * (pts[i].x + pts[k].x);
    const double t = (x - le_x) / (te_x - le_x == 0.0 ? 1.0 : te_x - le_x);
    const double chord_y = le_y + t * (te_y - le_y);
    f.thickness = std::max(f.thickness, ys[i] - ys[k]);
    f.camber = std::max(f.camber, 0.5 * (ys[i] + ys[k]) - chord_y);
  }
  if (chord > 0.0) {
    f.thickness /= chord;
    f.camber /= chord;
  }
  for (std::size_t i = 1; i + 1 < kN; ++i) {
    const double d2 = pts[i - 1].y - 2.0 * pts[i].y + pts[i + 1].y;
    f.roughness += d2 * d2;
  }
  for (std::size_t i = 0; i < kN; ++i) {
    const auto& a = pts[i];
    const auto& b = pts[(i + 1) % kN];
    f.signed_area += 0.5 * (a.x * b.y - b.x * a.y);
  }
  return f;
}

Evaluation airfoil_performance(const std::vector<Point>& pts, const AirfoilProxyParams& prm) {
  if (pts.size() != kN) return Evaluation::infeasible("airfoil needs 192 points");
  for (const auto& p : pts) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return Evaluation::infeasible("non-finite coordinate");
  }
  const auto f = airfoil_features(pts);
  double x_min = pts[0].x, x_max = pts[0].x;
  for (const auto& p : pts) {
    x_min = std::min(x_min, p.x);
    x_max = std::max(x_max, p.x);
  }
  if (!(x_max - x_min > 0.0)) return Evaluation::infeasible("zero chord");
  if (f.signed_area < -1e-9) return Evaluation::infeasible("inverted outline (negative area)");
  const double score = gaussian_bump(f.thickness, prm.fragile_thickness, prm.fragile_width, prm.fragile_height) +
                       gaussian_bump(f.thickness, prm.robust_thickness, prm.robust_width, prm.robust_height) +
                       prm.camber_gain * f.camber - prm.roughness_weight * f.roughness;
  return Evaluation::ok(score);
}

Evaluation airfoil_performance(const geometry::AirfoilDesign& design, const AirfoilProxyParams& params) {
  return airfoil_performance(design.points(), params);
}

// ---------------------------------------------------------------------------

json MetasurfaceProxyParams::to_json() const {
  return {{"floor", floor},
          {"band_thz", {band_lo, band_hi}},
          {"n_frequencies", n_frequencies},
          {"base_frequency", base_frequency},
          {"fill_shift", fill_shift},
          {"perimeter_shift", perimeter_shift},
          {"component_shift", component_shift},
          {"base_width", base_width},
          {"component_broadening", component_broadening},
          {"fill_saturation", fill_saturation}};
}

MetasurfaceProxyParams MetasurfaceProxyParams::from_json(const json& j) {
  MetasurfaceProxyParams p;
  p.floor = j.value("floor", p.floor);
  if (j.contains("band_thz")) {
    p.band_lo = j["band_thz"].at(0);
    p.band_hi = j["band_thz"].at(1);
  }
  p.n_frequencies = j.value("n_frequencies", p.n_frequencies);
  p.base_frequency = j.value("base_frequency", p.base_frequency);
  p.fill_shift = j.value("fill_shift", p.fill_shift);
  p.perimeter_shift = j.value("perimeter_shift", p.perimeter_shift);
  p.component_shift = j.value("component_shift", p.component_shift);
  p.base_width = j.value("base_width", p.base_width);
  p.component_broadening = j.value("component_broadening", p.component_broadening);
  p.fill_saturation = j.value("fill_saturation", p.fill_saturation);
  if (p.n_frequencies < 1) throw ConfigError("metasurface proxy needs n_frequencies >= 1");
  if (!(p.floor >= 0.0 && p.floor <= 1.0)) throw ConfigError("absorbance floor must lie in [0, 1]");
  if (!(p.base_width > 0.0) || !(p.fill_saturation > 0.0) || !(p.band_hi >= p.band_lo)) {
    throw ConfigError("invalid metasurface proxy constants");
  }
  return p;
}

FieldFeatures field_features(const geometry::LevelSetField& field) {
  constexpr std::size_t n = geometry::kFieldSize;
  const auto bin = field.binary();
  FieldFeatures f;
  std::size_t filled = 0, edges = 0;
  auto inside = [&](std::ptrdiff_t r, std::ptrdiff_t c) {
    if (r < 0 || c < 0 || r >= static_cast<std::ptrdiff_t>(n) || c >= static_cast<std::ptrdiff_t>(n)) return false;
    return bin[static_cast<std::size_t>(r) * n + static_cast<std::size_t>(c)] != 0;
  };
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(n); ++r)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(n); ++c) {
      if (!inside(r, c)) continue;
      ++filled;
      edges += !inside(r - 1, c) + !inside(r + 1, c) + !inside(r, c - 1) + !inside(r, c + 1);
    }
  f.fill_fraction = static_cast<double>(filled) / static_cast<double>(n * n);
  f.perimeter = static_cast<double>(edges) / 256.0;

  std::vector<std::uint8_t> seen(n * n, 0);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < n * n; ++start) {
    if (!bin[start] || seen[start]) continue;
    ++f.components;
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t idx = stack.back();
      stack.pop_back();
      const std::size_t r = idx / n, c = idx % n;
      const std::size_t nbr[4] = {r > 0 ? idx - n : idx, r + 1 < n ? idx + n : idx, c > 0 ? idx - 1 : idx,
                                  c + 1 < n ? idx + 1 : idx};
      for (std::size_t k : nbr) {
        if (bin[k] && !seen[k]) {
          seen[k] = 1;
          stack.push_back(k);
        }
      }
    }
  }
  return f;
}

AbsorbanceSpectrum absorbance_spectrum(const geometry::LevelSetField& field, const MetasurfaceProxyParams& p) {
  if (p.n_frequencies < 1) throw ConfigError("metasurface proxy needs n_frequencies >= 1");
  const auto f = field_features(field);
  const double extra = f.components > 0 ? static_cast<double>(f.components - 1) : 0.0;
  const double f0 = p.base_frequency + p.fill_shift * f.fill_fraction + p.perimeter_shift * f.perimeter -
                    p.component_shift * extra;
  const double gamma = p.base_width * (1.0 + p.component_broadening * extra);
  const double amp = 1.0 - std::exp(-f.fill_fraction / p.fill_saturation);
  AbsorbanceSpectrum s;
  for (std::size_t i = 0; i < p.n_frequencies; ++i) {
    const double freq = p.n_frequencies == 1
                            ? 0.5 * (p.band_lo + p.band_hi)
                            : p.band_lo + (p.band_hi - p.band_lo) * static_cast<double>(i) /
                                              static_cast<double>(p.n_frequencies - 1);
    const double d = (freq - f0) / gamma;
    s.frequencies.push_back(freq);
    s.absorbance.push_back(p.floor + (1.0 - p.floor) * amp / (1.0 + d * d));
  }
  return s;
}

double metasurface_performance(const geometry::LevelSetField& field, const MetasurfaceProxyParams& params) {
  const auto s = absorbance_spectrum(field, params);
  double j = 0.0;
  for (double a : s.absorbance) j += a;
  return j;
}

// ---------------------------------------------------------------------------

json AirfoilProxy::describe() const {
  json j = params_.to_json();
  j["type"] = name();
  return j;
}

Evaluation AirfoilProxy::evaluate(const Design& design) const {
  if (design.kind != DesignKind::Airfoil) throw ContractError("airfoil proxy given a non-airfoil design");
  design.check();
  std::vector<Point> pts(kN);
  for (std::size_t i = 0; i < kN; ++i) pts[i] = {design.values[2 * i], design.values[2 * i + 1]};
  return airfoil_performance(pts, params_);
}

MetasurfaceProxy::MetasurfaceProxy(MetasurfaceProxyParams params) : params_(params) {
  MetasurfaceProxyParams::from_json(params_.to_json());  // validates
}

json MetasurfaceProxy::describe() const {
  json j = params_.to_json();
  j["type"] = name();
  return j;
}

Evaluation MetasurfaceProxy::evaluate(const Design& design) const {
  if (design.kind != DesignKind::Metasurface) throw ContractError("metasurface proxy given a non-metasurface design");
  design.check();
  for (double v : design.values) {
    if (!std::isfinite(v)) return Evaluation::infeasible("non-finite level-set value");
  }
  return Evaluation::ok(metasurface_performance(geometry::LevelSetField(design.values), params_));
}

ExternalCommand::ExternalCommand(DesignKind kind, std::string command) : kind_(kind), command_(std::move(command)) {
  if (command_.empty()) throw ConfigError("external objective command is empty");
}

json ExternalCommand::describe() const { return {{"type", name()}, {"kind", to_string(kind_)}, {"command", command_}}; }

Evaluation ExternalCommand::evaluate(const Design& design) const {
  design.check();
  std::string path = (std::filesystem::temp_directory_path() / "ganduf_design_XXXXXX").string();
  const int fd = ::mkstemp(path.data());
  if (fd < 0) throw IoError("cannot create a temporary design file");
  ::close(fd);
  struct Cleanup {
    std::string p;
    ~Cleanup() { std::remove(p.c_str()); }
  } cleanup{path};

  const auto shape = design_shape(design.kind);
  io::save_array(path, {{shape[0], shape[1]}, design.values});

  std::string cmd = command_;
  if (cmd.find("{}") == std::string::npos) {
    cmd += " " + path;
  } else {
    for (auto pos = cmd.find("{}"); pos != std::string::npos; pos = cmd.find("{}", pos + path.size())) {
      cmd.replace(pos, 2, path);
    }
  }
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return Evaluation::infeasible("could not start objective command");
  std::string out;
  char buf[256];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  const int status = ::pclose(pipe);
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    return Evaluation::infeasible("objective command exited with status " +
                                  std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));
  }
  const char* begin = out.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  const char* stop = out.c_str() + out.size();
  const bool parsed =
      end != begin && std::all_of<const char*>(end, stop, [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
  if (!parsed || !std::isfinite(v)) return Evaluation::infeasible("objective command printed '" + out + "'");
  return Evaluation::ok(v);
}

std::unique_ptr<ObjectiveEvaluator> make_evaluator(const json& spec) {
  const std::string type = spec.value("type", "");
  if (type == "airfoil_proxy") return std::make_unique<AirfoilProxy>(AirfoilProxyParams::from_json(spec));
  if (type == "metasurface_proxy") return std::make_unique<MetasurfaceProxy>(MetasurfaceProxyParams::from_json(spec));
  if (type == "external_command") {
    return std::make_unique<ExternalCommand>(parse_design_kind(spec.at("kind")), spec.at("command").get<std::string>());
  }
  throw ConfigError("unknown objective type '" + type + "'");
}

// ---------------------------------------------------------------------------

bool FixtureReport::gap_holds() const {
  return fragile.nominal > robust.nominal && fragile.quantile < robust.quantile;
}

FixtureSummary score_under_perturbation(const geometry::AirfoilParams& params, const AirfoilProxyParams& proxy,
                                        std::size_t mc_samples, double tau, std::uint64_t seed) {
  const auto nominal = geometry::synthetic_airfoil(params);
  FixtureSummary s;
  const auto nom = airfoil_performance(nominal, proxy);
  s.nominal = nom.feasible ? nom.value : -std::numeric_limits<double>::infinity();
  std::vector<double> values(mc_samples);
  const auto cfg = geometry::PerturbationConfig::airfoil_defaults();
  for (std::size_t k = 0; k < mc_samples; ++k) {
    Rng rng(derive_seed(seed, k));
    const auto e = airfoil_performance(geometry::perturb_airfoil(nominal, cfg, rng), proxy);
    if (!e.feasible) ++s.infeasible;
    values[k] = e.feasible ? e.value : -std::numeric_limits<double>::infinity();
  }
  s.quantile = stats::estimate_quantile(values, tau).value;
  std::vector<double> finite;
  for (double v : values)
    if (std::isfinite(v)) finite.push_back(v);
  s.mean = finite.empty() ? -std::numeric_limits<double>::infinity() : stats::mean(finite);
  return s;
}

FixtureReport verify_fixture(const RobustnessFixture& fixture, const AirfoilProxyParams& proxy, std::size_t mc_samples,
                             double tau, std::uint64_t seed) {
  FixtureReport r;
  r.mc_samples = mc_samples;
  r.tau = tau;
  r.fragile = score_under_perturbation(fixture.fragile, proxy, mc_samples, tau, derive_seed(seed, 1));
  r.robust = score_under_perturbation(fixture.robust, proxy, mc_samples, tau, derive_seed(seed, 2));
  return r;
}

}  // namespace ganduf::objectives
