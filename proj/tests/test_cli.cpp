#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <string>

#include "testutil.hpp"

using testutil::TempDir;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::string& args, const TempDir& dir) {
  const std::string out_path = dir.file("cli_stdout.txt");
  const std::string err_path = dir.file("cli_stderr.txt");
  const std::string cmd = std::string(PCNN_CLI_PATH) + " " + args + " >" +
                          out_path + " 2>" + err_path;
  const int status = std::system(cmd.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = testutil::read_file(out_path);
  result.err = testutil::read_file(err_path);
  return result;
}

std::string grep_line(const std::string& text, const std::string& prefix) {
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    if (line.rfind(prefix, 0) == 0) return line;
    pos = end + 1;
  }
  return {};
}

}  // namespace

TEST_CASE("cli gen writes a reproducible corpus") {
  TempDir dir("cli_gen");
  const CliResult r1 =
      run_cli("gen --task crack --count 3 --size 48 --seed 5 --out " + dir.file("a"), dir);
  REQUIRE(r1.exit_code == 0);
  CHECK(r1.out.find("wrote 6 images") != std::string::npos);

  const CliResult r2 =
      run_cli("gen --task crack --count 3 --size 48 --seed 5 --out " + dir.file("b"), dir);
  REQUIRE(r2.exit_code == 0);
  CHECK(testutil::read_file(dir.file("a/manifest.csv")) ==
        testutil::read_file(dir.file("b/manifest.csv")));
  CHECK(testutil::read_file(dir.file("a/crack_0000.pgm")) ==
        testutil::read_file(dir.file("b/crack_0000.pgm")));
  CHECK(!testutil::read_file(dir.file("a/crack_0000.pgm")).empty());
}

TEST_CASE("cli gen rejects bad arguments") {
  TempDir dir("cli_gen_bad");
  CHECK(run_cli("gen --task crack --count 0 --out " + dir.file("x"), dir).exit_code == 2);
  CHECK(run_cli("gen --task lanes --count 2 --out " + dir.file("x"), dir).exit_code == 2);
  CHECK(run_cli("bogus-subcommand", dir).exit_code == 2);
  CHECK(run_cli("--help", dir).exit_code == 0);
}

TEST_CASE("cli train/eval/predict pipeline") {
  TempDir dir("cli_pipe");
  REQUIRE(run_cli("gen --task crack --count 6 --size 48 --seed 11 --out " +
                      dir.file("data"), dir).exit_code == 0);

  const std::string train_flags =
      "train --task crack --manifest " + dir.file("data/manifest.csv") +
      " --input-size 48 --epochs 3 --batch-size 4 --lr 0.05 --val-split 0.25 "
      "--seed 3 --no-early-stop";
  const CliResult t1 = run_cli(train_flags + " --model-out " + dir.file("m1.pcnn") +
                                   " --log-out " + dir.file("log1.csv"), dir);
  REQUIRE(t1.exit_code == 0);
  CHECK(t1.out.find("task=crack samples=12 train=9 val=3") != std::string::npos);
  const std::string final_line = grep_line(t1.out, "final ");
  CHECK(!final_line.empty());
  const std::string manifest_line = grep_line(t1.out, "manifest accuracy=");
  REQUIRE(!manifest_line.empty());

  // identical flags + seed reproduce the log and model byte for byte
  const CliResult t2 = run_cli(train_flags + " --model-out " + dir.file("m2.pcnn") +
                                   " --log-out " + dir.file("log2.csv"), dir);
  REQUIRE(t2.exit_code == 0);
  CHECK(testutil::read_file(dir.file("m1.pcnn")) ==
        testutil::read_file(dir.file("m2.pcnn")));
  CHECK(testutil::read_file(dir.file("log1.csv")) ==
        testutil::read_file(dir.file("log2.csv")));
  const std::string log = testutil::read_file(dir.file("log1.csv"));
  CHECK(log.rfind("epoch,train_loss,train_acc,val_loss,val_acc\n", 0) == 0);

  // eval of the saved model over the same manifest reproduces the
  // accuracy reported by train
  const CliResult ev = run_cli("eval --model " + dir.file("m1.pcnn") +
                                   " --manifest " + dir.file("data/manifest.csv"), dir);
  REQUIRE(ev.exit_code == 0);
  const std::string eval_acc = grep_line(ev.out, "loss=");
  REQUIRE(!eval_acc.empty());
  const std::string expect = manifest_line.substr(std::string("manifest ").size());
  CHECK(eval_acc.find(expect) != std::string::npos);
  CHECK(ev.out.find("confusion matrix") != std::string::npos);
  CHECK(ev.out.find("noncrack") != std::string::npos);

  // severity-labeled data is a task mismatch for a crack model
  REQUIRE(run_cli("gen --task severity --count 2 --size 48 --seed 1 --out " +
                      dir.file("sev"), dir).exit_code == 0);
  CHECK(run_cli("eval --model " + dir.file("m1.pcnn") + " --manifest " +
                    dir.file("sev/manifest.csv"), dir).exit_code == 2);

  // predict: one line per image, probabilities formatted to sum to 1
  const CliResult pr = run_cli("predict --model " + dir.file("m1.pcnn") +
                                   " --image " + dir.file("data/crack_0000.pgm") +
                                   " --image " + dir.file("data/noncrack_0001.pgm"), dir);
  REQUIRE(pr.exit_code == 0);
  CHECK(grep_line(pr.out, dir.file("data/crack_0000.pgm")) != "");

  // a missing file fails that image but not the rest, and exits 1
  const CliResult pm = run_cli("predict --model " + dir.file("m1.pcnn") +
                                   " --image " + dir.file("data/crack_0000.pgm") +
                                   " --image " + dir.file("data/absent.pgm"), dir);
  CHECK(pm.exit_code == 1);
  CHECK(grep_line(pm.out, dir.file("data/crack_0000.pgm")) != "");
  CHECK(pm.err.find("absent.pgm") != std::string::npos);
}
