#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "fedprov-cli-test";

int run(const std::string& args) {
  const std::string cmd = std::string(FEDPROV_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string out(const std::string& name) { return (kDir / name).string(); }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("subcommand pipeline") {
    fs::remove_all(kDir);
    fs::create_directories(kDir);
    const std::string o = "--out " + kDir.string();
    REQUIRE(run(o + " --seed 3 generate -n 2000 -o " + out("cohort.csv")) == 0);
    CHECK(slurp(kDir / "cohort.csv").rfind("age,sex_male,sbp", 0) == 0);
    REQUIRE(run(o + " --seed 4 generate -n 800 -o " + out("test.csv")) == 0);

    REQUIRE(run(o + " impute -i " + out("cohort.csv") + " -o " + out("imputed.csv")) == 0);
    CHECK(slurp(kDir / "imputed.csv").find(",,") == std::string::npos);

    CHECK(run(o + " train-central -i " + out("cohort.csv") + " -f lr -o " + out("c.ckpt")) == 0);
    CHECK(run(o + " train-local -i " + out("cohort.csv") + " -p ON -f mlp -s downsample -o " +
              out("on.ckpt")) == 0);
    CHECK(run(o + " train-fed -i " + out("cohort.csv") + " --test " + out("test.csv") +
              " -f lr --rounds 5 -o " + out("fl.ckpt")) == 0);
    const std::string rounds = slurp(kDir / "fl_rounds.csv");
    CHECK(rounds.rfind("round,selected,checksum,auc\n", 0) == 0);
    CHECK(std::count(rounds.begin(), rounds.end(), '\n') == 6);

    for (const char* model : {"c.ckpt", "on.ckpt", "fl.ckpt"}) {
      CHECK(run(o + " evaluate -m " + out(model) + " -i " + out("test.csv") + " -o " +
                out(std::string(model) + ".csv")) == 0);
    }
    CHECK(slurp(kDir / "fl.ckpt.csv").rfind("auc,f1,precision,recall,n\n", 0) == 0);
    CHECK(fs::exists(kDir / "fl.ckpt_calibration.csv"));
  }

  TEST_CASE("run-matrix and report") {
    fs::create_directories(kDir);
    write(kDir / "small.json", R"({"seeds": [1], "families": ["lr"], "fed": {"rounds": 5},
                                   "generator": {"total_patients": 2500}})");
    const std::string m = out("matrix");
    REQUIRE(run("--config " + out("small.json") + " --out " + m + " run-matrix") == 0);
    CHECK(fs::exists(fs::path(m) / "results.jsonl"));
    CHECK(fs::exists(fs::path(m) / "lr_global.csv"));
    CHECK(fs::exists(fs::path(m) / "lr_global.md"));
    CHECK(fs::exists(fs::path(m) / "calibration_lr_none_FL.svg"));
    const std::string r = out("rebuilt");
    REQUIRE(run("--out " + r + " report -r " + m + "/results.jsonl --format csv") == 0);
    CHECK(slurp(fs::path(m) / "lr_global.csv") == slurp(fs::path(r) / "lr_global.csv"));
  }

  TEST_CASE("output directory from the environment") {
    fs::create_directories(kDir);
    const fs::path env_dir = kDir / "from-env";
    const std::string cmd = "FEDPROV_OUT=" + env_dir.string() + " " + FEDPROV_CLI +
                            " generate -n 300 >/dev/null 2>&1";
    REQUIRE(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(env_dir / "cohort.csv"));
  }

  TEST_CASE("exit codes") {
    fs::create_directories(kDir);
    CHECK(run("") == 1);
    CHECK(run("frobnicate") == 1);
    CHECK(run("--config /nonexistent/x.json generate") == 1);
    write(kDir / "bad.json", R"({"unknown_key": 1})");
    CHECK(run("--config " + out("bad.json") + " generate") == 1);
    write(kDir / "bad.csv", "age,sbp\n1,2\n");
    CHECK(run("impute -i " + out("bad.csv") + " -o " + out("x.csv")) == 1);
    CHECK(run("impute -i " + out("missing.csv") + " -o " + out("x.csv")) == 1);
    write(kDir / "bad.ckpt", "garbage");
    CHECK(run("evaluate -m " + out("bad.ckpt") + " -i " + out("bad.csv")) == 1);
    CHECK(run("--help") == 0);
  }
}
