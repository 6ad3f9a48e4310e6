#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <string>
#include <sys/wait.h>

#include "helpers.hpp"

namespace fs = std::filesystem;

namespace {

int cli(const std::string& args) {
  const std::string cmd = std::string(FRINGEBOS_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Files in a directory other than the run record, with their bytes.
std::map<std::string, std::vector<unsigned char>> outputs(const fs::path& dir) {
  std::map<std::string, std::vector<unsigned char>> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename() != "run_config.json") out[e.path().filename().string()] = testutil::slurp(e.path());
  }
  return out;
}

bool have_cli() { return std::string(FRINGEBOS_CLI).size() > 0; }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with 2") {
  if (!have_cli()) return;
  const auto dir = testutil::scratch("cli_usage");
  CHECK(cli("--no-such-flag") == 2);
  CHECK(cli("simulate --preset m9-0db --out " + dir.string()) == 2);
  CHECK(cli("sweep --values '' --out " + dir.string()) == 2);
  CHECK(cli("sweep --axis pv --values 1,2 --out " + dir.string()) == 2);
  CHECK(cli("fit-diffusion --frames " + dir.string() + " --out " + (dir / "fit").string()) == 2);
}

TEST_CASE("data errors exit with 3") {
  if (!have_cli()) return;
  const auto dir = testutil::scratch("cli_runtime");
  std::ofstream(dir / "bad.fpr") << "not a raster";
  CHECK(cli("demodulate " + (dir / "bad.fpr").string() + " --out " + (dir / "out").string()) == 3);
  CHECK(cli("demodulate " + (dir / "missing.fpr").string() + " --out " + (dir / "out").string()) == 2);
}

TEST_CASE("simulate is reproducible and writes the scene files") {
  if (!have_cli()) return;
  const auto dir = testutil::scratch("cli_simulate");
  REQUIRE(cli("simulate --preset m1-0db --seed 7 --size 128 --out " + (dir / "a").string()) == 0);
  REQUIRE(cli("simulate --preset m1-0db --seed 7 --size 128 --out " + (dir / "b").string()) == 0);
  for (const char* f : {"degraded.fpr", "truth_phase.fpr", "manifest.json", "run_config.json"}) {
    CHECK_MESSAGE(fs::exists(dir / "a" / f), f);
  }
  CHECK(outputs(dir / "a") == outputs(dir / "b"));
}

TEST_CASE("demodulate output does not depend on the thread count") {
  if (!have_cli()) return;
  const auto dir = testutil::scratch("cli_threads");
  REQUIRE(cli("simulate --preset m2-10db --seed 3 --size 128 --out " + (dir / "scene").string()) == 0);
  const std::string in = (dir / "scene" / "degraded.fpr").string();
  const std::string truth = " --truth " + (dir / "scene" / "truth_phase.fpr").string();
  for (const char* m : {"subspace", "ft", "wft"}) {
    const std::string base = "demodulate " + in + truth + " --method " + m + " --out ";
    REQUIRE(cli("--threads 1 " + base + (dir / (std::string(m) + "1")).string()) == 0);
    REQUIRE(cli("--threads 8 " + base + (dir / (std::string(m) + "8")).string()) == 0);
    CHECK_MESSAGE(outputs(dir / (std::string(m) + "1")) == outputs(dir / (std::string(m) + "8")), m);
    CHECK(fs::exists(dir / (std::string(m) + "1") / "phase.fpr"));
    CHECK(fs::exists(dir / (std::string(m) + "1") / "result.json"));
  }
}

TEST_CASE("sweep writes a CSV with one row per value and method") {
  if (!have_cli()) return;
  const auto dir = testutil::scratch("cli_sweep");
  REQUIRE(cli("sweep --axis snr --values 10,30 --mod m2 --methods subspace,ft --trials 1 --size 96 --out " +
              dir.string()) == 0);
  const auto csv = testutil::slurp(dir / "sweep.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

}
