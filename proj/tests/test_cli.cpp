#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "snls/cli.hpp"

namespace snls {
namespace {

namespace fs = std::filesystem;

// Scratch tree for configs and run directories, removed on scope exit.
struct CliSandbox {
  fs::path root;
  explicit CliSandbox(const std::string& name) : root("cli_" + name) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~CliSandbox() {
    std::error_code ec;
    fs::remove_all(root, ec);
  }

  std::string put_config(const std::string& name, const json& cfg) {
    const fs::path p = root / name;
    std::ofstream f(p, std::ios::binary);
    f << cfg.dump(2) << '\n';
    return p.string();
  }
  std::string put_text(const std::string& name, const std::string& text) {
    const fs::path p = root / name;
    std::ofstream f(p, std::ios::binary);
    f << text;
    return p.string();
  }
  std::string out(const std::string& name) const {
    return (root / name).string();
  }
};

std::string slurp(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> subdirs(const fs::path& root) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) names.push_back(entry.path().filename().string());
  return names;
}

json micro_convergence() {
  json cfg;
  cfg["experiment"] = "convergence";
  cfg["name"] = "cli-micro";
  cfg["axis"] = "spatial";
  cfg["model"]["drift"]["kind"] = "linear";
  cfg["model"]["drift"]["alpha"] = 1.0;
  cfg["noise"]["r"] = 1.5;
  cfg["eps"] = json::array({0.5});
  cfg["ladder"] = json::array();
  for (int K : {1, 2, 4}) {
    json pt;
    pt["K"] = K;
    pt["M"] = 8;
    cfg["ladder"].push_back(pt);
  }
  cfg["reference"]["K"] = 16;
  cfg["reference"]["M"] = 64;
  cfg["T"] = 1.0;
  cfg["paths"] = 3;
  cfg["seed"] = 5;
  cfg["mu"] = 1.0;
  return cfg;
}

TEST_CASE("cli rejects unknown subcommands and unreadable configs", "[cli]") {
  CHECK(dispatch("frobnicate", "nope.json", Overrides{}) == 2);

  CliSandbox box("badcfg");
  CHECK(dispatch("run-convergence", box.out("missing.json"), Overrides{}) == 2);
  const std::string garbled = box.put_text("garbled.json", "{ not json");
  CHECK(dispatch("run-convergence", garbled, Overrides{}) == 2);
  const std::string arr = box.put_text("array.json", "[1, 2]\n");
  CHECK(dispatch("run-convergence", arr, Overrides{}) == 2);
}

TEST_CASE("cli refuses an experiment kind that mismatches the subcommand",
          "[cli]") {
  CliSandbox box("mismatch");
  json cfg;
  cfg["experiment"] = "lemmas";
  cfg["tuples"] = 2;
  const std::string path = box.put_config("lemmas.json", cfg);
  CHECK(dispatch("run-convergence", path, Overrides{}) == 2);
  CHECK(dispatch("run-moments", path, Overrides{}) == 2);
}

TEST_CASE("config diagnostics name the offending field", "[cli]") {
  json cfg = micro_convergence();
  cfg.erase("reference");
  CHECK_THROWS_WITH(detail::plan_from_config(cfg, false),
                    Catch::Matchers::ContainsSubstring("config field") &&
                        Catch::Matchers::ContainsSubstring("reference"));

  json typed = micro_convergence();
  typed["paths"] = "many";
  CHECK_THROWS_WITH(detail::plan_from_config(typed, false),
                    Catch::Matchers::ContainsSubstring("config field"));

  CliSandbox box("fielddiag");
  json bad = micro_convergence();
  bad.erase("reference");
  CHECK(dispatch("run-convergence", box.put_config("bad.json", bad),
                 Overrides{}) == 2);
}

TEST_CASE("print-plan validates without touching the filesystem", "[cli]") {
  CliSandbox box("printplan");
  const std::string path = box.put_config("micro.json", micro_convergence());
  Overrides ov;
  ov.out = box.out("should_not_appear");
  CHECK(dispatch("print-plan", path, ov) == 0);
  CHECK_FALSE(fs::exists(box.out("should_not_appear")));
}

TEST_CASE("run-convergence writes the documented run directory", "[cli]") {
  CliSandbox box("runconv");
  const std::string path = box.put_config("micro.json", micro_convergence());
  Overrides ov;
  ov.out = box.out("runs");
  ov.threads = 1u;
  REQUIRE(dispatch("run-convergence", path, ov) == 0);

  const std::vector<std::string> dirs = subdirs(box.out("runs"));
  REQUIRE(dirs.size() == 1);
  CHECK(dirs[0].size() == 16);  // fnv1a64 digest in hex

  const fs::path run_dir = fs::path(box.out("runs")) / dirs[0];
  REQUIRE(fs::exists(run_dir / "errors.csv"));
  REQUIRE(fs::exists(run_dir / "rates.csv"));
  REQUIRE(fs::exists(run_dir / "manifest.json"));
  CHECK(slurp(run_dir / "errors.csv")
            .rfind("eps,K_cut,M,e_hat,stderr,paths\n", 0) == 0);
  CHECK(slurp(run_dir / "rates.csv").rfind("axis,slope,ci\n", 0) == 0);

  const json manifest = json::parse(std::ifstream(run_dir / "manifest.json"));
  CHECK(manifest.at("digest").get<std::string>() == dirs[0]);
  CHECK(manifest.at("command").get<std::string>() == "run-convergence");
  CHECK(manifest.at("config").at("name").get<std::string>() == "cli-micro");
  bool has_errors_csv = false;
  for (const json& o : manifest.at("outputs"))
    has_errors_csv = has_errors_csv || o.get<std::string>() == "errors.csv";
  CHECK(has_errors_csv);
  CHECK(manifest.at("result").at("pass").get<bool>());
}

TEST_CASE("identical runs produce identical bytes across thread counts",
          "[cli]") {
  CliSandbox box("repro");
  const std::string path = box.put_config("micro.json", micro_convergence());

  auto run_with = [&](const std::string& name, unsigned threads) {
    Overrides ov;
    ov.out = box.out(name);
    ov.threads = threads;
    REQUIRE(dispatch("run-convergence", path, ov) == 0);
    const std::vector<std::string> dirs = subdirs(box.out(name));
    REQUIRE(dirs.size() == 1);
    return fs::path(box.out(name)) / dirs[0];
  };

  const fs::path a = run_with("a", 1);
  const fs::path b = run_with("b", 1);
  const fs::path c = run_with("c", 2);
  CHECK(slurp(a / "errors.csv") == slurp(b / "errors.csv"));
  CHECK(slurp(a / "errors.csv") == slurp(c / "errors.csv"));
  CHECK(slurp(a / "rates.csv") == slurp(b / "rates.csv"));
  CHECK(slurp(a / "rates.csv") == slurp(c / "rates.csv"));
}

TEST_CASE("seed override selects a different run directory", "[cli]") {
  CliSandbox box("seedover");
  const std::string path = box.put_config("micro.json", micro_convergence());
  Overrides plain;
  plain.out = box.out("runs");
  REQUIRE(dispatch("run-convergence", path, plain) == 0);
  Overrides seeded = plain;
  seeded.seed = 123u;
  REQUIRE(dispatch("run-convergence", path, seeded) == 0);

  const std::vector<std::string> dirs = subdirs(box.out("runs"));
  REQUIRE(dirs.size() == 2);
  CHECK(dirs[0] != dirs[1]);
}

TEST_CASE("remaining subcommands dispatch end to end", "[cli]") {
  CliSandbox box("others");

  json lemmas;
  lemmas["experiment"] = "lemmas";
  lemmas["tuples"] = 2;
  lemmas["seed"] = 1;
  lemmas["max_m"] = 10;
  {
    Overrides ov;
    ov.out = box.out("lemmas");
    REQUIRE(dispatch("run-lemma-tests", box.put_config("lemmas.json", lemmas),
                     ov) == 0);
    const std::vector<std::string> dirs = subdirs(box.out("lemmas"));
    REQUIRE(dirs.size() == 1);
    CHECK(fs::exists(fs::path(box.out("lemmas")) / dirs[0] / "lemmas.csv"));
  }

  json moments;
  moments["experiment"] = "moments";
  moments["model"]["drift"]["kind"] = "linear";
  moments["model"]["drift"]["alpha"] = 1.0;
  moments["noise"]["r"] = 2.5;
  moments["eps"] = json::array({1.0, 0.5, 0.25});
  moments["resolution"]["K"] = 4;
  moments["resolution"]["M"] = 16;
  moments["T"] = 1.0;
  moments["paths"] = 2;
  moments["seed"] = 7;
  moments["mu"] = 1.0;
  moments["snapshots"] = 2;
  {
    Overrides ov;
    ov.out = box.out("moments");
    REQUIRE(dispatch("run-moments", box.put_config("moments.json", moments),
                     ov) == 0);
    const std::vector<std::string> dirs = subdirs(box.out("moments"));
    REQUIRE(dirs.size() == 1);
    const fs::path run_dir = fs::path(box.out("moments")) / dirs[0];
    CHECK(fs::exists(run_dir / "moments.csv"));
    CHECK(fs::exists(run_dir / "rates.csv"));
  }

  json meshing;
  meshing["experiment"] = "meshing";
  meshing["delta"] = 10.0;
  meshing["model"]["drift"]["kind"] = "linear";
  meshing["model"]["drift"]["alpha"] = 1.0;
  meshing["noise"]["r"] = 1.5;
  meshing["eps"] = 0.5;
  meshing["mu"] = 1.0;
  meshing["T"] = 0.05;
  meshing["candidates"] = json::array({2, 4});
  meshing["paths"] = 4;
  meshing["seed"] = 5;
  {
    Overrides ov;
    ov.out = box.out("meshing");
    REQUIRE(dispatch("run-meshing", box.put_config("meshing.json", meshing),
                     ov) == 0);
    const std::vector<std::string> dirs = subdirs(box.out("meshing"));
    REQUIRE(dirs.size() == 1);
    CHECK(fs::exists(fs::path(box.out("meshing")) / dirs[0] / "meshing.csv"));
  }
}

}  // namespace
}  // namespace snls
