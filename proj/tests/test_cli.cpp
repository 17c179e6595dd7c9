#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "tmsqz/io.hpp"
#include "tmsqz/scenarios.hpp"

namespace fs = std::filesystem;
using namespace tmsqz;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("tmsqz_cli_" + name);
  fs::remove_all(p);
  return p;
}

int run_tool(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" TMSQZ_CLI_PATH "\" " + args + " > /dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

cli::ScenarioConfig small(const std::string& scenario, const fs::path& out) {
  cli::ScenarioConfig cfg;
  cfg.scenario = scenario;
  cfg.seed = 77;
  cfg.n_frames = 100;
  cfg.output_dir = out;
  return cfg;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("scenario runs are byte-identical for a fixed seed") {
  for (const std::string sc : {"calibrate", "waveforms"}) {
    const auto a = scratch(sc + "_a"), b = scratch(sc + "_b");
    const auto ra = cli::run(small(sc, a));
    auto cfg = small(sc, b);
    cfg.threads = 3;
    const auto rb = cli::run(cfg);
    CHECK(ra.exit_code == 0);
    REQUIRE(ra.files == rb.files);
    for (const auto& f : ra.files) CHECK(io::read_text(a / f) == io::read_text(b / f));
    const auto m = json::parse(io::read_text(a / "manifest.json"));
    CHECK(m.at("seed").get<std::uint64_t>() == 77);
    CHECK(m.at("config_hash").get<std::string>().size() == 16);
    CHECK(m.at("status") == "ok");
    CHECK(m.at("files").size() + 1 == ra.files.size());
    fs::remove_all(a);
    fs::remove_all(b);
  }
}

TEST_CASE("seed and config hash are recorded and change with the inputs") {
  const auto a = scratch("hash_a");
  auto cfg = small("calibrate", a);
  const auto h1 = cli::run(cfg).manifest.at("config_hash").get<std::string>();
  cli::apply_override(cfg, "gain_noise=0.004");
  const auto h2 = cli::run(cfg).manifest.at("config_hash").get<std::string>();
  cfg.seed = 78;
  const auto h3 = cli::run(cfg).manifest.at("config_hash").get<std::string>();
  CHECK(h1 != h2);
  CHECK(h2 != h3);
  CHECK(io::read_text(a / "gain_curve.csv").rfind("# seed=78 config_hash=" + h3, 0) == 0);
  fs::remove_all(a);
}

TEST_CASE("configuration errors are usage errors") {
  auto cfg = small("nonsense", scratch("usage"));
  CHECK_THROWS_AS(cli::run(cfg), cli::UsageError);
  cfg.scenario = "epr";
  cli::apply_override(cfg, "no_such_key=1");
  CHECK_THROWS_AS(cli::run(cfg), cli::UsageError);
  cfg = small("epr", scratch("usage"));
  cli::apply_override(cfg, "gamma=\"fast\"");
  CHECK_THROWS_AS(cli::run(cfg), cli::UsageError);
  cfg = small("epr", scratch("usage"));
  cfg.n_frames = 10;
  CHECK_THROWS_AS(cli::run(cfg), cli::UsageError);
  CHECK_THROWS_AS(cli::apply_override(cfg, "novalue"), cli::UsageError);
  CHECK_THROWS_AS(cli::default_params("nope"), cli::UsageError);
  CHECK(cli::fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(cli::fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(cli::hex64(255) == "00000000000000ff");
}

TEST_CASE("binary exit codes and error.json") {
  const auto out = scratch("exit");
  CHECK(run_tool("run bogus --out " + out.string()) == 2);
  CHECK(run_tool("run calibrate --set oops --out " + out.string()) == 2);
  CHECK(run_tool("--no-such-flag") == 2);
  CHECK(run_tool("run calibrate --set unknown_key=3 --out " + out.string()) == 2);
  const auto err = json::parse(io::read_text(out / "error.json"));
  CHECK(err.at("error").at("kind") == "usage");

  // 9 dB exceeds what the pump can reach.
  CHECK(run_tool("run tm_squeezing --frames 100 --out " + out.string() +
                 " --set 'slots=[{\"quadrature\":\"x\",\"db\":9.0}]'") == 1);
  const auto err2 = json::parse(io::read_text(out / "error.json"));
  CHECK(err2.at("status") == "error");
  CHECK(err2.at("error").at("kind") == "compilation");

  CHECK(run_tool("run calibrate --seed 5 --out " + out.string()) == 0);
  CHECK(fs::exists(out / "calibration.json"));
  fs::remove_all(out);
}

TEST_CASE("TMSQZ_OUT sets the default output directory") {
  const auto out = scratch("env");
  CHECK(run_tool("run calibrate", "TMSQZ_OUT=" + out.string()) == 0);
  CHECK(fs::exists(out / "manifest.json"));
  fs::remove_all(out);
}

TEST_CASE("config files") {
  const auto dir = scratch("config");
  fs::create_directories(dir);
  io::write_json(dir / "cfg.json", {{"scenario", "calibrate"},
                                    {"seed", 9},
                                    {"output_dir", (dir / "o").string()},
                                    {"params", {{"gain_noise", 0.0}}}});
  const auto cfg = cli::load_config(dir / "cfg.json");
  CHECK(cfg.seed == 9);
  CHECK(cfg.params.at("gain_noise") == 0.0);
  const auto res = cli::run(cfg);
  CHECK(res.exit_code == 0);
  const auto cal = json::parse(io::read_text(dir / "o" / "calibration.json"));
  CHECK(cal.at("gain_fit").at("fit_residual").get<double>() < 1e-12);
  io::write_text(dir / "bad.json", "[1, 2");
  CHECK_THROWS_AS(cli::load_config(dir / "bad.json"), cli::UsageError);
  CHECK_THROWS_AS(cli::load_config(dir / "missing.json"), cli::UsageError);
  fs::remove_all(dir);
}

}  // TEST_SUITE
