#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <sys/wait.h>

#include <protoridge/manifest.hpp>

#include "scratch.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result cli(const std::string& args, const Scratch& dir) {
  const fs::path log = dir / "stdout.txt";
  const std::string cmd = "env -u PROTORIDGE_OUT " + std::string(PROTORIDGE_CLI_PATH) + " " + args + " > " +
                          log.string() + " 2>" + (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp_bytes(log)};
}

std::size_t line_count(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

std::string gen_args(const fs::path& out, int seed = 2) {
  return "gen synth --kind gaussian --classes 6 --dim 8 --per-class 15 --tasks 3 --seed " + std::to_string(seed) +
         " --out " + out.string();
}

}  // namespace

TEST_CASE("gen synth writes a manifest and EMB1 files") {
  Scratch dir;
  REQUIRE(cli(gen_args(dir / "d"), dir).code == 0);
  const auto m = protoridge::load_manifest(dir / "d" / "manifest.json");
  CHECK(m.task_count() == 3);
  CHECK(m.total_classes == 6);
  CHECK(m.embedding_dim == 8);
  CHECK(fs::exists(dir / "d" / "task3_test.emb"));
}

TEST_CASE("relative output directories resolve against the manifest") {
  Scratch dir;
  const std::string in_dir = "cd " + dir.path().string() + " && ";
  REQUIRE(std::system((in_dir + PROTORIDGE_CLI_PATH + " gen synth --classes 4 --dim 8 --per-class 10 --out rel > /dev/null").c_str()) == 0);
  const auto m = protoridge::load_manifest(dir / "rel" / "manifest.json");
  CHECK(m.tasks[0].splits[0].train == dir / "rel" / "task1_train.emb");
  CHECK(slurp_bytes(dir / "rel" / "manifest.json").find("\"train\": \"task1_train.emb\"") != std::string::npos);
}

TEST_CASE("gen synth without an output directory is a usage error") {
  Scratch dir;
  const auto r = cli("gen synth --kind gaussian --classes 4 --dim 8", dir);
  CHECK(r.code == 2);
  CHECK(slurp_bytes(dir / "stderr.txt").find("--out") != std::string::npos);
  CHECK(cli("gen synth --kind xor --classes 3 --out " + (dir / "x").string(), dir).code == 2);
  CHECK(cli("frobnicate", dir).code == 2);
  CHECK(cli("--help", dir).code == 0);
}

TEST_CASE("gen synth is byte-identical across reruns") {
  Scratch dir;
  REQUIRE(cli(gen_args(dir / "a"), dir).code == 0);
  REQUIRE(cli(gen_args(dir / "b"), dir).code == 0);
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    CHECK(slurp_bytes(e.path()) == slurp_bytes(dir / "b" / e.path().filename()));
  }
}

TEST_CASE("run writes records and ledger CSVs") {
  Scratch dir;
  REQUIRE(cli(gen_args(dir / "d"), dir).code == 0);
  const auto r = cli("run --manifest " + (dir / "d" / "manifest.json").string() +
                         " --method proposed --q 32 --seeds 1,2 --out " + (dir / "r").string(),
                     dir);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("Q=32") != std::string::npos);
  CHECK(r.out.find("1e-08") != std::string::npos);
  CHECK(r.out.find("1e+08") != std::string::npos);
  CHECK(fs::exists(dir / "r" / "proposed_seed1.json"));
  CHECK(fs::exists(dir / "r" / "proposed_seed2.ledger.csv"));
  CHECK(slurp_bytes(dir / "r" / "proposed_seed1.ledger.csv").rfind("stage,task_1,task_2,task_3\n", 0) == 0);
}

TEST_CASE("run flags mark the variant") {
  Scratch dir;
  REQUIRE(cli(gen_args(dir / "d"), dir).code == 0);
  const auto r = cli("run --manifest " + (dir / "d" / "manifest.json").string() +
                         " --q 32 --seeds 1 --lambda-fixed 1e-2 --no-projection --out " + (dir / "r").string(),
                     dir);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("projection=off") != std::string::npos);
  CHECK(fs::exists(dir / "r" / "proposed_no_projection_lambda_0.01_seed1.json"));
  CHECK(cli("run --manifest " + (dir / "d" / "manifest.json").string() + " --no-projection --no-relu --out " +
                (dir / "r").string(),
            dir)
            .code == 2);
  CHECK(cli("run --manifest " + (dir / "missing.json").string() + " --out " + (dir / "r").string(), dir).code == 1);
}

TEST_CASE("report renders one row per method") {
  Scratch dir;
  REQUIRE(cli(gen_args(dir / "d"), dir).code == 0);
  REQUIRE(cli("run --manifest " + (dir / "d" / "manifest.json").string() +
                  " --method proposed,ncm --q 16 --seeds 1,2 --out " + (dir / "r").string(),
              dir)
              .code == 0);
  const auto table = cli("report --runs " + (dir / "r").string(), dir);
  REQUIRE(table.code == 0);
  CHECK(line_count(table.out) == 3);
  CHECK(table.out.find("ncm") != std::string::npos);

  const auto stages = cli("report --stagewise --runs " + (dir / "r").string(), dir);
  REQUIRE(stages.code == 0);
  CHECK(line_count(stages.out) == 1 + 2 * 3);
  CHECK(stages.out.rfind("method,variant,stage,", 0) == 0);
}

TEST_CASE("report refuses runs from different manifests") {
  Scratch dir;
  REQUIRE(cli(gen_args(dir / "d1", 2), dir).code == 0);
  REQUIRE(cli(gen_args(dir / "d2", 3), dir).code == 0);
  REQUIRE(cli("run --manifest " + (dir / "d1" / "manifest.json").string() + " --method ncm --seeds 1 --out " +
                  (dir / "r").string(),
              dir)
              .code == 0);
  REQUIRE(cli("run --manifest " + (dir / "d2" / "manifest.json").string() + " --method ncm --seeds 2 --out " +
                  (dir / "r").string(),
              dir)
              .code == 0);
  CHECK(cli("report --runs " + (dir / "r").string(), dir).code == 1);
  CHECK(cli("report --runs " + (dir / "nothing").string(), dir).code == 1);
}
