#include <fstream>
#include <iterator>
#include <sstream>

#include "doctest.h"
#include "ganduf/cli.hpp"
#include "ganduf/error.hpp"
#include "ganduf/studies.hpp"
#include "temp_dir.hpp"

using namespace ganduf;
using testing_support::TempDir;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result ganduf_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(ganduf_cli({"--help"}).code == cli::kExitOk);
  CHECK(ganduf_cli({"synth", "--help"}).code == cli::kExitOk);
  CHECK(ganduf_cli({}).code == cli::kExitConfig);

  TempDir tmp("cli");
  const auto bogus = ganduf_cli({"synth", "--kind", "airfoil", "--out", (tmp / "ds").string(), "--bogus"});
  CHECK(bogus.code == cli::kExitConfig);
  CHECK(bogus.err.find("--bogus") != std::string::npos);
  CHECK_FALSE(fs::exists(tmp / "ds"));

  CHECK(ganduf_cli({"synth", "--kind", "wing", "--out", (tmp / "ds").string()}).code == cli::kExitConfig);
  CHECK(ganduf_cli({"synth", "--kind", "airfoil", "--m", "0", "--out", (tmp / "ds").string()}).code == cli::kExitConfig);
  CHECK(ganduf_cli({"--threads", "0", "fixture-verify"}).code == cli::kExitConfig);
}

TEST_CASE("synth writes a dataset and a reloadable resolved config") {
  TempDir tmp("cli");
  const auto ds = (tmp / "ds").string();
  const auto r = ganduf_cli({"synth", "--kind", "airfoil", "--n", "6", "--m", "2", "--seed", "4", "--out", ds});
  REQUIRE(r.code == cli::kExitOk);
  for (const char* f : {"manifest.json", "nominal.bin", "fabricated.bin", "resolved_config.toml"}) {
    CHECK(fs::exists(fs::path(ds) / f));
  }

  SUBCASE("refuses a non-empty directory without --force") {
    const auto again = ganduf_cli({"synth", "--kind", "airfoil", "--n", "6", "--out", ds});
    CHECK(again.code == cli::kExitConfig);
    CHECK(again.err.find("--force") != std::string::npos);
    CHECK(ganduf_cli({"synth", "--kind", "airfoil", "--n", "6", "--m", "2", "--out", ds, "--force"}).code ==
          cli::kExitOk);
  }

  SUBCASE("the resolved config reproduces the run") {
    const auto ds2 = (tmp / "ds2").string();
    const auto cfg = (fs::path(ds) / "resolved_config.toml").string();
    REQUIRE(ganduf_cli({"--config", cfg, "synth", "--out", ds2}).code == cli::kExitOk);
    CHECK(slurp(fs::path(ds) / "nominal.bin") == slurp(fs::path(ds2) / "nominal.bin"));
    CHECK(slurp(fs::path(ds) / "fabricated.bin") == slurp(fs::path(ds2) / "fabricated.bin"));
  }
}

TEST_CASE("train, uq, optimize and plot on a tiny model") {
  TempDir tmp("cli");
  const auto ds = (tmp / "ds").string(), tr = (tmp / "tr").string();
  REQUIRE(ganduf_cli({"synth", "--kind", "airfoil", "--n", "8", "--m", "2", "--out", ds}).code == cli::kExitOk);
  REQUIRE(ganduf_cli({"train", "--data", ds, "--out", tr, "--steps", "4", "--batch", "4", "--parent-dim", "2",
                      "--checkpoint-every", "2"})
              .code == cli::kExitOk);
  CHECK(fs::exists(fs::path(tr) / "checkpoint.bin"));
  CHECK(fs::exists(fs::path(tr) / "checkpoint_step_2.bin"));
  CHECK(fs::exists(fs::path(tr) / "losses.csv"));
  const auto ckpt = (fs::path(tr) / "checkpoint.bin").string();

  const auto uq = ganduf_cli({"uq", "--checkpoint", ckpt, "--parent", "0.2", "--parent", "0.8", "--samples", "5", "--out",
                              (tmp / "uq").string()});
  REQUIRE(uq.code == cli::kExitOk);
  CHECK(fs::exists(tmp / "uq" / "uq.json"));
  CHECK(ganduf_cli({"uq", "--checkpoint", ckpt, "--parent", "0.2", "--out", (tmp / "uq1").string()}).code ==
        cli::kExitConfig);

  const auto op = (tmp / "op").string();
  REQUIRE(ganduf_cli({"optimize", "--checkpoint", ckpt, "--mode", "mean_std", "--n-init", "2", "--n-seq", "1", "--mc",
                      "3", "--ground-truth-mc", "4", "--out", op})
              .code == cli::kExitOk);
  for (const char* f : {"trace.csv", "trace.jsonl", "summary.json", "ground_truth.csv", "comparison.csv"}) {
    CHECK(fs::exists(fs::path(op) / f));
  }
  CHECK(ganduf_cli({"optimize", "--checkpoint", ckpt, "--mode", "reliability", "--out", (tmp / "rel").string()}).code ==
        cli::kExitConfig);
  CHECK_FALSE(fs::exists(tmp / "rel"));
  CHECK(ganduf_cli({"optimize", "--checkpoint", ckpt, "--objective", "metasurface_proxy", "--out",
                    (tmp / "mm").string()})
            .code == cli::kExitConfig);

  REQUIRE(ganduf_cli({"plot", "--run", op, "--out", (tmp / "pl").string()}).code == cli::kExitOk);
  CHECK(fs::exists(tmp / "pl" / "fabricated_performance.svg"));
  CHECK(fs::exists(tmp / "pl" / "convergence.svg"));

  CHECK(ganduf_cli({"optimize", "--checkpoint", (tmp / "missing.bin").string(), "--out", (tmp / "x").string()}).code ==
        cli::kExitRuntime);
}

TEST_CASE("fixture-verify reports the ordering") {
  TempDir tmp("cli");
  const auto r = ganduf_cli({"fixture-verify", "--mc", "300", "--out", (tmp / "fixture.json").string()});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("PASS") != std::string::npos);
  const auto j = nlohmann::json::parse(slurp(tmp / "fixture.json"));
  CHECK(j["gap_holds"] == true);
  CHECK(j["mc_samples"] == 300);
}

TEST_CASE("recipes and output directories") {
  CHECK(studies::recipe_names().size() == 4);
  CHECK_THROWS_AS(studies::make_recipe("airfoil_large"), ConfigError);
  CHECK(ganduf_cli({"recipe", "--name", "airfoil_large", "--out", "unused"}).code == cli::kExitConfig);

  const auto a = studies::make_recipe("airfoil_small", 3), b = studies::make_recipe("airfoil_small", 3);
  CHECK(a.to_json() == b.to_json());
  CHECK(a.to_json() != studies::make_recipe("airfoil_small", 4).to_json());

  TempDir tmp("cli");
  const auto dir = tmp / "out";
  studies::prepare_output_dir(dir, false);
  std::ofstream(dir / "stale.txt") << "x";
  CHECK_THROWS_AS(studies::prepare_output_dir(dir, false), ConfigError);
  studies::prepare_output_dir(dir, true);
  CHECK(fs::is_empty(dir));
}

TEST_CASE("ground truth is seeded per sample") {
  const objectives::AirfoilProxy proxy;
  const auto nominal = to_design(geometry::synthetic_airfoil({0.12, 0.02, 0.4}));
  const auto p = geometry::PerturbationConfig::airfoil_defaults();
  const auto one = studies::ground_truth(nominal, p, proxy, 40, 0.05, 9, 1);
  const auto two = studies::ground_truth(nominal, p, proxy, 40, 0.05, 9, 2);
  CHECK(one.samples == two.samples);
  CHECK(one.samples.size() == 40);
  Rng r(derive_seed(9, 7));
  const auto e = proxy.evaluate(fabricate(nominal, p, r));
  CHECK(one.samples[7] == (e.feasible ? e.value : -std::numeric_limits<double>::infinity()));
  CHECK(one.nominal == proxy.evaluate(nominal).value);
}
