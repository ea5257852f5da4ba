#include <catch_amalgamated.hpp>

#include "helpers.hpp"

namespace fs = std::filesystem;
using tp_test::read_text;
using tp_test::run_cli;

namespace {

/// Small cohort shared by the CLI cases; generated once per process.
const fs::path& cohort_dir() {
  static const fs::path dir = [] {
    auto d = tp_test::scratch_dir("cli_cohort");
    const int rc = run_cli("synth --n-genes 300 --n-tumor 60 --n-normal 20 --block-size 30 --seed 3 --out " +
                               d.string(),
                           d / "log.txt");
    REQUIRE(rc == 0);
    return d;
  }();
  return dir;
}

std::string data_args() {
  return "--expr " + (cohort_dir() / "expression.tsv").string() + " --meta " +
         (cohort_dir() / "metadata.tsv").string();
}

const std::string kSmallArch = " --encoder-hidden 16 8 --projector-hidden 8 --projector-dim 4 --batch-size 16 ";

}  // namespace

TEST_CASE("synth writes a cohort and a manifest", "[cli]") {
  const auto& d = cohort_dir();
  CHECK(fs::exists(d / "expression.tsv"));
  CHECK(fs::exists(d / "metadata.tsv"));
  const auto manifest = read_text(d / "manifest.json");
  CHECK(manifest.find("\"command\": \"synth\"") != std::string::npos);
}

TEST_CASE("missing input files exit with status 1 and name the path", "[cli]") {
  const auto d = tp_test::scratch_dir("cli_missing");
  const auto missing = d / "no_such_table.tsv";
  CHECK(run_cli("train --model PCA --expr " + missing.string() + " --out " + (d / "o").string(), d / "log.txt") == 1);
  CHECK(read_text(d / "log.txt").find(missing.string()) != std::string::npos);
  CHECK(run_cli("train --model NOPE " + data_args(), d / "log2.txt") == 1);
  CHECK(run_cli("nonsense", d / "log3.txt") != 0);
}

TEST_CASE("train, embed, rank on the small cohort", "[cli]") {
  const auto d = tp_test::scratch_dir("cli_train");
  REQUIRE(run_cli("train --model PCA " + data_args() + " --out " + (d / "pca").string(), d / "log.txt") == 0);
  CHECK(fs::exists(d / "pca" / "model.ckpt"));
  CHECK(read_text(d / "pca" / "split.csv").rfind("sample_id,set\n", 0) == 0);
  REQUIRE(run_cli("embed " + data_args() + " --model " + (d / "pca" / "model.ckpt").string() + " --out " +
                      (d / "emb").string(),
                  d / "log2.txt") == 0);
  const auto emb = read_text(d / "emb" / "embedding.csv");
  CHECK(std::count(emb.begin(), emb.end(), '\n') == 81);
  REQUIRE(run_cli("rank " + data_args() + " --model " + (d / "pca" / "model.ckpt").string() + " --out " +
                      (d / "rank").string(),
                  d / "log3.txt") == 0);
  CHECK(fs::exists(d / "rank" / "PCA_dim0.rnk"));
  CHECK(fs::exists(d / "rank" / "signature.csv"));
}

TEST_CASE("gradcheck passes on the twin-view objective", "[cli]") {
  const auto d = tp_test::scratch_dir("cli_grad");
  CHECK(run_cli("gradcheck --n-genes 20 --batch 6" + kSmallArch, d / "log.txt") == 0);
  CHECK(read_text(d / "log.txt").find("max relative error") != std::string::npos);
}

TEST_CASE("tune is deterministic under a seed", "[cli]") {
  const auto d = tp_test::scratch_dir("cli_tune");
  const std::string args = "tune " + data_args() + kSmallArch + " --epochs 3 --n-trials 1 --seed 5 --out ";
  REQUIRE(run_cli(args + (d / "a").string(), d / "a.txt") == 0);
  REQUIRE(run_cli(args + (d / "b").string(), d / "b.txt") == 0);
  const auto trials = read_text(d / "a" / "trials.csv");
  CHECK(trials.rfind("trial,alpha,lambda,objective,final_loss\n", 0) == 0);
  CHECK(std::count(trials.begin(), trials.end(), '\n') == 2);
  CHECK(trials == read_text(d / "b" / "trials.csv"));
  CHECK(read_text(d / "a" / "best.csv") == read_text(d / "b" / "best.csv"));
}
