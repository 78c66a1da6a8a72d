#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "json.hpp"
#include "test_support.hpp"

using namespace testing_support;

namespace {

// Runs the CLI with `args`, output captured in `log`; returns the exit code.
int run_cli(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = std::string(SAGNN_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

class Cli : public ::testing::Test {
 protected:
  TempDir dir;
  std::string at(const std::string& name) const { return (dir / name).string(); }
  int run(const std::string& args) { return run_cli(args, dir / "log.txt"); }
  std::string log() const { return read_bytes(dir / "log.txt"); }
};

}  // namespace

TEST_F(Cli, EndToEndWorkflowSucceeds) {
  ASSERT_EQ(run("synth --out " + at("data") + " --users 150 --low-signal 0.3 --seed 4"), 0) << log();
  ASSERT_EQ(run("build-graph --data " + at("data") + " --out " + at("g.bin") + " --degree-report " + at("deg.tsv")), 0)
      << log();
  EXPECT_TRUE(std::filesystem::exists(dir / "g.bin"));
  EXPECT_FALSE(read_bytes(dir / "deg.tsv").empty());

  ASSERT_EQ(run("train --data " + at("data") + " --out " + at("model") +
                " --model sagnn --layers 2 --dim 8 --epochs 1 --batch-size 64 --seed 3"),
            0)
      << log();
  for (const char* f : {"config.json", "history.jsonl", "report.json", "weights.bin"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "model" / f)) << f;
  }

  ASSERT_EQ(run("evaluate --data " + at("data") + " --model-dir " + at("model") +
                " --buckets feature_signal,second_order_degree --out " + at("eval.json")),
            0)
      << log();
  auto eval = read_json(dir / "eval.json");
  EXPECT_TRUE(eval.contains("test") || eval.contains("accuracy")) << eval.dump();

  ASSERT_EQ(run("export --data " + at("data") + " --model-dir " + at("model") + " --embeddings " + at("emb.tsv") +
                " --fraction 1 --logits " + at("logits.tsv")),
            0)
      << log();
  EXPECT_FALSE(read_bytes(dir / "emb.tsv").empty());
}

TEST_F(Cli, TrialsWithRepeatedSeedAreByteIdentical) {
  ASSERT_EQ(run("synth --out " + at("data") + " --users 120 --seed 2"), 0) << log();
  ASSERT_EQ(run("trials --data " + at("data") + " --out " + at("trials") +
                " --seeds 1,1 --model sagnn --layers 1 --dim 8 --epochs 1 --batch-size 64"),
            0)
      << log();
  const auto a = read_bytes(dir / "trials" / "trial_0_seed_1.json");
  const auto b = read_bytes(dir / "trials" / "trial_1_seed_1.json");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
  auto summary = read_json(dir / "trials" / "summary.json");
  EXPECT_EQ(summary["reports"].size(), 2u);
  EXPECT_EQ(summary["aggregate"]["accuracy"]["std"].get<double>(), 0.0);
}

TEST_F(Cli, AnnotateWritesCorpusFiles) {
  std::ofstream(dir / "posts.jsonl") << R"({"id":"1","text":"vote #maga","author":"a","retweeters":["b"]})" << "\n"
                                     << R"({"id":"2","text":"shame #traitortrump","author":"b","retweeters":[]})"
                                     << "\n"
                                     << R"({"id":"3","text":"RT @a: vote #maga","author":"c","retweet_of":"1"})"
                                     << "\n";
  std::ofstream(dir / "lex.tsv") << "maga\tproB\tseed\ntraitortrump\tproA\tseed\n";
  ASSERT_EQ(run("annotate --corpus " + at("posts.jsonl") + " --lexicon " + at("lex.tsv") + " --out " + at("out") +
                " --feature-dim 16"),
            0)
      << log();
  EXPECT_EQ(read_bytes(dir / "out" / "labels.tsv"), "1\t1\n2\t0\n");
  EXPECT_EQ(read_bytes(dir / "out" / "edges.tsv"), "1\ta\tpost\n1\tb\tretweet\n1\tc\tretweet\n2\tb\tpost\n");
}

TEST_F(Cli, ValidationErrorsExitTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("bogus"), 2);
  EXPECT_EQ(run("synth"), 2);  // missing --out
  EXPECT_EQ(run("synth --out " + at("x") + " --epsilon 0.7"), 2);
  EXPECT_EQ(run("train --data " + at("missing") + " --out " + at("m")), 2);
  ASSERT_EQ(run("synth --out " + at("data") + " --users 60"), 0) << log();
  EXPECT_EQ(run("train --data " + at("data") + " --out " + at("m") + " --model nope"), 2);
  EXPECT_EQ(run("train --data " + at("data") + " --out " + at("m") + " --agg median"), 2);
  EXPECT_EQ(run("trials --data " + at("data") + " --out " + at("t") + " --seeds 1,x"), 2);
  std::ofstream(dir / "data" / "edges.tsv", std::ios::app) << "garbage\n";
  EXPECT_EQ(run("train --data " + at("data") + " --out " + at("m") + " --epochs 1"), 2);
  EXPECT_NE(log().find("edges.tsv"), std::string::npos) << log();
}

TEST_F(Cli, RuntimeFailuresExitThree) {
  EXPECT_EQ(run("synth --out /dev/null/sub --users 60"), 3);
}
