// End-to-end checks of the installed binary: exit codes, determinism of
// result bytes, and the report subcommand. The binary path arrives via the
// POLYCHAIN_BIN environment variable set by CTest.

#include <catch2/catch.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "polychain/csv.hpp"

namespace fs = std::filesystem;

namespace {

std::string binary_path() {
  const char* bin = std::getenv("POLYCHAIN_BIN");
  REQUIRE(bin != nullptr);
  return bin;
}

int run_command(const std::string& command) {
  const int status = std::system(command.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("polychain_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& body) {
  const fs::path p = dir / name;
  std::ofstream out(p);
  out << body;
  return p;
}

const std::string kEnumerate = R"(kind = enumerate
[model]
beta = 1.0
alpha = 1.5
h = 0.3 0.1
[grid]
n_list = 1 2 3 4 5
)";

const std::string kScan = R"(kind = msd-scan
[model]
beta = 1.0
alpha = 1.5
[grid]
n_list = 4 8
[mcmc]
sweeps = 3000
burn_in = 500
thinning = 5
replicas = 2
batches = 8
[run]
seed = 7
)";

}  // namespace

TEST_CASE("run + report round trip with exit code 0") {
  TempDir tmp("roundtrip");
  const fs::path cfg = write_config(tmp.path, "exp.cfg", kEnumerate);
  const fs::path out = tmp.path / "out";
  CHECK(run_command(binary_path() + " run " + cfg.string() + " --quiet --out " + out.string() +
                    " >/dev/null 2>&1") == 0);
  CHECK(run_command(binary_path() + " report " + out.string() + " >/dev/null 2>&1") == 0);
  CHECK(fs::exists(out / "summary.csv"));
}

TEST_CASE("validation failures exit with status 2") {
  TempDir tmp("validation");
  const std::string bad = R"(kind = gamma-fit
[model]
beta = 1.0
alpha = 0.9
[grid]
n_list = 4 8 16
[mcmc]
sweeps = 2000
burn_in = 200
thinning = 5
replicas = 2
batches = 8
[run]
coupling_sum_check = true
)";
  const fs::path cfg = write_config(tmp.path, "bad.cfg", bad);
  CHECK(run_command(binary_path() + " run " + cfg.string() + " --quiet --out " +
                    (tmp.path / "out").string() + " >/dev/null 2>&1") == 2);

  const fs::path nocfg = tmp.path / "missing.cfg";
  CHECK(run_command(binary_path() + " run " + nocfg.string() + " >/dev/null 2>&1") != 0);
}

TEST_CASE("same config and seed produce byte-identical CSVs") {
  TempDir tmp("bytes");
  const fs::path cfg = write_config(tmp.path, "exp.cfg", kScan);
  const fs::path a = tmp.path / "a";
  const fs::path b = tmp.path / "b";
  REQUIRE(run_command(binary_path() + " run " + cfg.string() + " --quiet --out " + a.string() +
                      " >/dev/null 2>&1") == 0);
  REQUIRE(run_command(binary_path() + " run " + cfg.string() + " --quiet --out " + b.string() +
                      " >/dev/null 2>&1") == 0);
  CHECK(polychain::read_file(a / "msd_scan.csv") == polychain::read_file(b / "msd_scan.csv"));

  const fs::path c = tmp.path / "c";
  REQUIRE(run_command(binary_path() + " run " + cfg.string() + " --quiet --seed 123 --out " +
                      c.string() + " >/dev/null 2>&1") == 0);
  CHECK(polychain::read_file(a / "msd_scan.csv") != polychain::read_file(c / "msd_scan.csv"));
}

TEST_CASE("report on an empty directory exits with status 2") {
  TempDir tmp("empty");
  CHECK(run_command(binary_path() + " report " + tmp.path.string() + " >/dev/null 2>&1") == 2);
}

TEST_CASE("POLYCHAIN_OUT_ROOT supplies the default output root") {
  TempDir tmp("envroot");
  const fs::path cfg = write_config(tmp.path, "exp.cfg", kEnumerate);
  const fs::path root = tmp.path / "root";
  CHECK(run_command("POLYCHAIN_OUT_ROOT=" + root.string() + " " + binary_path() + " run " +
                    cfg.string() + " --quiet --threads 2 >/dev/null 2>&1") == 0);
  REQUIRE(fs::exists(root));
  bool found = false;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (fs::exists(entry.path() / "manifest.json")) found = true;
  }
  CHECK(found);
}

TEST_CASE("shipped sample configs execute") {
  const char* configs = std::getenv("POLYCHAIN_CONFIGS");
  REQUIRE(configs != nullptr);
  TempDir tmp("samples");
  // The exact samples are small enough to execute outright.
  for (const std::string name : {"enumerate_small.cfg", "pressure_scan.cfg"}) {
    const fs::path sample = fs::path(configs) / name;
    REQUIRE(fs::exists(sample));
    CHECK(run_command(binary_path() + " run " + sample.string() + " --quiet --out " +
                      (tmp.path / name).string() + " >/dev/null 2>&1") == 0);
  }
}
