#include <doctest.h>

#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "pe_writer.hpp"
#include "secimg/dataset.hpp"
#include "secimg/tensor_file.hpp"
#include "synth.hpp"

using namespace secimg;
using namespace secimg::testing;
namespace fs = std::filesystem;

namespace {

struct CaptureStdout {
  CaptureStdout() : old(std::cout.rdbuf(buffer.rdbuf())) {}
  ~CaptureStdout() { std::cout.rdbuf(old); }
  std::string text() const { return buffer.str(); }

  std::ostringstream buffer;
  std::streambuf* old;
};

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "--quiet");
  return cli::run(args);
}

void write_corpus(const fs::path& dir, int per_family, std::uint64_t seed) {
  fs::create_directories(dir);
  std::mt19937_64 rng(seed);
  LabelMap labels;
  for (int f = 0; f < 3; ++f) {
    for (int i = 0; i < per_family; ++i) {
      const std::string id = "f" + std::to_string(f + 1) + "s" + std::to_string(i);
      write_family_sample(dir, id, three_family_profiles()[f], rng);
      labels[id] = f + 1;
    }
  }
  std::ofstream out(dir / "labels.csv");
  write_labels_csv(out, labels);
}

}  // namespace

TEST_CASE("score on perfect predictions") {
  TempDir dir("cli-score");
  write_file(dir.path() / "p.csv",
             std::string("Id,Prediction1,Prediction2,Prediction3,Prediction4,Prediction5,"
                         "Prediction6,Prediction7,Prediction8,Prediction9\n"
                         "a,1,0,0,0,0,0,0,0,0\n"
                         "b,0,0,0,0,0,0,0,0,1\n"));
  write_file(dir.path() / "l.csv", std::string("Id,Class\na,1\nb,9\n"));
  CaptureStdout cap;
  const int code = run({"score", "--preds", (dir.path() / "p.csv").string(), "--labels",
                        (dir.path() / "l.csv").string(), "--out", dir.str()});
  CHECK(code == cli::kOk);
  CHECK(cap.text().find("accuracy: 1") != std::string::npos);
  double ll = -1;
  std::istringstream(cap.text().substr(cap.text().find("logloss: ") + 9)) >> ll;
  CHECK(ll >= 0.0);
  CHECK(ll < 1e-12);
  CHECK(fs::exists(dir.path() / "metrics.json"));
}

TEST_CASE("render S3 from a bytes/asm pair") {
  TempDir dir("cli-render");
  std::mt19937_64 rng(1);
  write_family_sample(dir.path(), "sample", three_family_profiles()[0], rng);
  const std::string in =
      (dir.path() / "sample.bytes").string() + "+" + (dir.path() / "sample.asm").string();
  REQUIRE(run({"render", "--scheme", "S3", "--in", in, "--out", (dir.path() / "out").string()}) ==
          cli::kOk);
  const auto stack = import_stack((dir.path() / "out" / "sample.msit").string());
  REQUIRE(stack.channel_count() == 3);
  CHECK(stack.height() == 224);
  CHECK(stack.channels[0] == stack.channels[1]);
  CHECK(stack.channels[1] == stack.channels[2]);
}

TEST_CASE("render a PE file with PNGs and a custom target") {
  TempDir dir("cli-render-pe");
  write_file(dir.path() / "a.exe", build_pe(standard_fixture()));
  REQUIRE(run({"render", "--in", (dir.path() / "a.exe").string(), "--scheme", "S4", "--target",
               "32x48", "--png", "--out", dir.str()}) == cli::kOk);
  const auto stack = import_stack((dir.path() / "a.msit").string());
  CHECK(stack.channel_count() == 3);
  CHECK(stack.height() == 32);
  CHECK(stack.width() == 48);
  CHECK(fs::exists(dir.path() / "a.c2.png"));
}

TEST_CASE("manifest then export with a mask spec") {
  TempDir dir("cli-export");
  write_corpus(dir.path() / "corpus", 2, 2);
  REQUIRE(run({"manifest", "--in", (dir.path() / "corpus").string(), "--labels",
               (dir.path() / "corpus" / "labels.csv").string(), "--out", dir.str()}) == cli::kOk);
  const auto entries = read_manifest_file((dir.path() / "manifest.jsonl").string());
  CHECK(entries.size() == 6);
  REQUIRE(run({"export", "--manifest", (dir.path() / "manifest.jsonl").string(), "--spec",
               "mode=mask;channels=imgs-1024,.text,.rsrc;width=1024", "--out",
               (dir.path() / "t").string(), "-j", "3"}) == cli::kOk);
  for (const auto& e : entries) {
    const auto stack = import_stack((dir.path() / "t" / (e.sample_id + ".msit")).string());
    CHECK(stack.channel_count() == 3);
    CHECK(stack.uniform());
    CHECK(stack.channels[0] != stack.channels[1]);
  }
}

TEST_CASE("fit, predict and score through separate commands") {
  TempDir dir("cli-knn");
  write_corpus(dir.path() / "corpus", 3, 3);
  const auto d = [&](const std::string& name) { return (dir.path() / name).string(); };
  REQUIRE(run({"manifest", "--in", d("corpus"), "--labels", d("corpus/labels.csv"), "--out",
               dir.str()}) == cli::kOk);
  REQUIRE(run({"export", "--manifest", d("manifest.jsonl"), "--scheme", "S5", "--out",
               d("t")}) == cli::kOk);
  REQUIRE(run({"knn-fit", "--manifest", d("manifest.jsonl"), "--tensors", d("t"), "--k", "1",
               "--side", "16", "--out", d("m")}) == cli::kOk);
  REQUIRE(run({"knn-predict", "--model", d("m"), "--manifest", d("manifest.jsonl"), "--tensors",
               d("t"), "--out", d("p")}) == cli::kOk);
  CaptureStdout cap;
  REQUIRE(run({"score", "--preds", d("p/predictions.csv"), "--labels", d("corpus/labels.csv")}) ==
          cli::kOk);
  CHECK(cap.text().find("accuracy: 1") != std::string::npos);
}

TEST_CASE("exit codes") {
  TempDir dir("cli-codes");
  CHECK(run({}) == cli::kBadArguments);
  CHECK(run({"frobnicate"}) == cli::kBadArguments);
  CHECK(run({"render"}) == cli::kBadArguments);
  CHECK(run({"render", "--in", "x.exe", "--scheme", "S9"}) == cli::kBadArguments);
  CHECK(run({"render", "--in", "x.exe", "--spec", "channels=.bogus"}) == cli::kBadArguments);
  CHECK(run({"render", "--in", "x.exe", "--scheme", "S3", "--spec", "channels=.text"}) ==
        cli::kBadArguments);
  CHECK(run({"render", "--in", "x.exe", "--target", "0x5"}) == cli::kBadArguments);
  CHECK(run({"manifest", "--in", dir.str(), "--layout", "zip"}) == cli::kBadArguments);

  write_file(dir.path() / "elf.exe", non_pe_fixture());
  CHECK(run({"render", "--in", (dir.path() / "elf.exe").string(), "--out", dir.str()}) ==
        cli::kDataError);
  CHECK(run({"manifest", "--in", dir.str(), "--layout", "big2015", "--out", dir.str()}) ==
        cli::kDataError);
  CHECK(run({"render", "--in", (dir.path() / "missing.exe").string()}) == cli::kIoError);
  CHECK(run({"score", "--preds", "/nonexistent/p.csv", "--labels", "/nonexistent/l.csv"}) ==
        cli::kIoError);

  CaptureStdout cap;
  CHECK(run({"--help"}) == cli::kOk);
}

TEST_CASE("pipeline with a config file") {
  TempDir dir("cli-pipeline");
  write_corpus(dir.path() / "corpus", 5, 4);
  write_file(dir.path() / "run.cfg",
             "# pipeline settings\n"
             "in = " + (dir.path() / "corpus").string() + "\n"
             "labels = " + (dir.path() / "corpus" / "labels.csv").string() + "\n"
             "scheme = S5\n"
             "holdout = 0.4\n"
             "k = 1\n"
             "side = 16\n"
             "seed = 3\n"
             "out = " + (dir.path() / "ignored").string() + "\n");
  CaptureStdout cap;
  REQUIRE(run({"pipeline", "--config", (dir.path() / "run.cfg").string(), "--out",
               (dir.path() / "out").string()}) == cli::kOk);
  CHECK_FALSE(fs::exists(dir.path() / "ignored"));
  for (const char* f : {"manifest.jsonl", "train.jsonl", "holdout.jsonl", "knn.msit", "knn.json",
                        "predictions.csv", "metrics.json"}) {
    CHECK(fs::exists(dir.path() / "out" / f));
  }
  CHECK(read_manifest_file((dir.path() / "out" / "holdout.jsonl").string()).size() == 6);
  CHECK(cap.text().find("accuracy: 1") != std::string::npos);

  write_file(dir.path() / "bad.cfg", std::string("no equals sign\n"));
  CHECK(run({"pipeline", "--config", (dir.path() / "bad.cfg").string()}) == cli::kBadArguments);
  CHECK(run({"pipeline", "--config", (dir.path() / "missing.cfg").string()}) == cli::kIoError);
}
