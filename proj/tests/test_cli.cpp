#include <dapdag/format.hpp>

#include "xml_check.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string err;
  std::string out;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dapdag_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd =
      std::string(DAPDAG_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WEXITSTATUS(status), slurp(err), slurp(out)};
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST(Cli, GenerateIsDeterministic) {
  const auto d = scratch("gen");
  ASSERT_EQ(run("generate --task regression --domains 10 --seed 7 --out " + (d / "a").string(), d).code, 0);
  ASSERT_EQ(run("generate --task regression --domains 10 --seed 7 --out " + (d / "b").string(), d).code, 0);
  int csvs = 0;
  for (const auto& e : fs::directory_iterator(d / "a")) {
    EXPECT_EQ(slurp(e.path()), slurp(d / "b" / e.path().filename())) << e.path();
    csvs += e.path().extension() == ".csv";
  }
  EXPECT_EQ(csvs, 10);
  EXPECT_TRUE(fs::exists(d / "a" / "truth.json"));

  const auto m = nlohmann::json::parse(slurp(d / "a" / "manifest.json"));
  EXPECT_EQ(m.at("command"), "generate");
  EXPECT_EQ(m.at("config_hash"), dapdag::hex64(dapdag::fnv1a64(m.at("config").dump())));
  EXPECT_EQ(m.at("config").at("seed"), 7);
}

TEST(Cli, GenerateErrorsAreMachineReadable) {
  const auto d = scratch("gen_err");
  const auto r = run("generate --domains 0 --out " + (d / "x").string(), d);
  EXPECT_NE(r.code, 0);
  const auto j = nlohmann::json::parse(r.err);
  EXPECT_EQ(j.at("error").at("command"), "generate");
  EXPECT_NE(j.at("error").at("message").get<std::string>().find("domains"), std::string::npos);

  write(d / "bad.json", R"({"task":"regression","bogus":1})");
  const auto r2 = run("generate --config " + (d / "bad.json").string() + " --out " + (d / "y").string(), d);
  EXPECT_NE(r2.code, 0);
  EXPECT_NE(r2.err.find("unknown key 'bogus'"), std::string::npos);

  const auto r3 = run("generate --no-such-flag", d);
  EXPECT_NE(r3.code, 0);
  EXPECT_EQ(nlohmann::json::parse(r3.err).at("error").at("kind"), "usage");
}

TEST(Cli, ClassificationDataValidates) {
  const auto d = scratch("cls");
  ASSERT_EQ(run("generate --task classification --domains 2 --mean-size 50 --seed 1 --out " + (d / "data").string(), d)
                .code,
            0);
  write(d / "train.json", R"({"max_epochs":2})");
  const auto r = run("train --data " + (d / "data").string() + " --config " + (d / "train.json").string() +
                         " --out " + (d / "m").string(),
                     d);
  EXPECT_EQ(r.code, 0) << r.err;
}

class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = scratch("pipe");
    ASSERT_EQ(run("generate --task regression --domains 4 --mean-size 80 --seed 3 --out " + data().string(), dir_).code,
              0);
    write(dir_ / "train.json", R"({"max_epochs":4,"learning_rate":0.01})");
    const auto r = run("train --data " + data().string() + " --exclude domain_00 --seed 5 --config " +
                           (dir_ / "train.json").string() + " --out " + (dir_ / "model").string(),
                       dir_);
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static fs::path data() { return dir_ / "data"; }
  static fs::path ckpt() { return dir_ / "model" / "checkpoint.json"; }
  static fs::path dir_;
};
fs::path CliPipeline::dir_;

TEST_F(CliPipeline, TrainIsDeterministic) {
  const auto r = run("train --data " + data().string() + " --exclude domain_00 --seed 5 --config " +
                         (dir_ / "train.json").string() + " --out " + (dir_ / "model2").string(),
                     dir_);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(ckpt()), slurp(dir_ / "model2" / "checkpoint.json"));
  EXPECT_EQ(slurp(dir_ / "model" / "log.jsonl"), slurp(dir_ / "model2" / "log.jsonl"));
  const auto m = nlohmann::json::parse(slurp(dir_ / "model" / "manifest.json"));
  EXPECT_EQ(m.at("config").at("seed"), 5);
  EXPECT_EQ(m.at("inputs").size(), 4u);  // schema + three sources
}

TEST_F(CliPipeline, PredictWritesPredictionsAndEnvironment) {
  const std::string base = "predict --checkpoint " + ckpt().string() + " --input " + (data() / "domain_00.csv").string();
  ASSERT_EQ(run(base + " --out " + (dir_ / "p1").string(), dir_).code, 0);
  ASSERT_EQ(run(base + " --out " + (dir_ / "p2").string(), dir_).code, 0);
  const std::string pred = slurp(dir_ / "p1" / "predictions.csv");
  EXPECT_EQ(pred, slurp(dir_ / "p2" / "predictions.csv"));
  EXPECT_EQ(pred.rfind("row,prediction\n", 0), 0u);
  EXPECT_EQ(slurp(dir_ / "p1" / "e_hat.csv").rfind("component,mean,var\n", 0), 0u);

  ASSERT_EQ(run(base + " --mode bayes --draws 20 --seed 9 --out " + (dir_ / "b1").string(), dir_).code, 0);
  ASSERT_EQ(run(base + " --mode bayes --draws 20 --seed 9 --out " + (dir_ / "b2").string(), dir_).code, 0);
  EXPECT_EQ(slurp(dir_ / "b1" / "predictions.csv"), slurp(dir_ / "b2" / "predictions.csv"));
  EXPECT_NE(slurp(dir_ / "b1" / "predictions.csv"), pred);

  // Features-only input (label column dropped) gives the same predictions.
  std::ifstream in(data() / "domain_00.csv");
  std::ofstream feat(dir_ / "features.csv");
  std::string line;
  while (std::getline(in, line)) feat << line.substr(0, line.rfind(',')) << "\n";
  feat.close();
  ASSERT_EQ(run("predict --checkpoint " + ckpt().string() + " --input " + (dir_ / "features.csv").string() +
                    " --out " + (dir_ / "p3").string(),
                dir_)
                .code,
            0);
  EXPECT_EQ(slurp(dir_ / "p3" / "predictions.csv"), pred);
}

TEST_F(CliPipeline, PredictErrors) {
  const auto r = run("predict --checkpoint " + (dir_ / "missing.json").string() + " --input " +
                         (data() / "domain_00.csv").string() + " --out " + (dir_ / "px").string(),
                     dir_);
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("checkpoint not found"), std::string::npos);

  write(dir_ / "narrow.csv", "a,b\n1,2\n");
  const auto r2 = run("predict --checkpoint " + ckpt().string() + " --input " + (dir_ / "narrow.csv").string() +
                          " --out " + (dir_ / "py").string(),
                      dir_);
  EXPECT_NE(r2.code, 0);
  EXPECT_EQ(nlohmann::json::parse(r2.err).at("error").at("kind"), "data");
}

TEST_F(CliPipeline, EvaluateAndDagEval) {
  const auto r = run("evaluate --checkpoint " + ckpt().string() + " --input " + (data() / "domain_00.csv").string() +
                         " " + (data() / "domain_01.csv").string() + " --out " + (dir_ / "ev").string(),
                     dir_);
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string metrics = slurp(dir_ / "ev" / "metrics.csv");
  EXPECT_EQ(metrics.rfind("method,setting,seed,target,metric,value\n", 0), 0u);
  EXPECT_NE(metrics.find("domain_01,r2,"), std::string::npos);

  const auto g = run("dag-eval --checkpoint " + ckpt().string() + " --truth " + (data() / "truth.json").string() +
                         " --threshold 0.3 --out " + (dir_ / "dag").string(),
                     dir_);
  ASSERT_EQ(g.code, 0) << g.err;
  const std::string dm = slurp(dir_ / "dag" / "dag_metrics.csv");
  EXPECT_NE(dm.find(",shd,"), std::string::npos);
  EXPECT_NE(dm.find("empty,tau=0.3,5,graph,shd,10"), std::string::npos);
  EXPECT_EQ(slurp(dir_ / "dag" / "adjacency.csv").rfind("from,X1,", 0), 0u);
}

TEST_F(CliPipeline, BaselineTrainAndPredict) {
  const auto r = run("train --baseline --data " + data().string() + " --exclude domain_00 --config " +
                         (dir_ / "train.json").string() + " --out " + (dir_ / "base").string(),
                     dir_);
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_EQ(run("predict --checkpoint " + (dir_ / "base" / "checkpoint.json").string() + " --input " +
                    (data() / "domain_00.csv").string() + " --out " + (dir_ / "bp").string(),
                dir_)
                .code,
            0);
  EXPECT_TRUE(fs::exists(dir_ / "bp" / "predictions.csv"));
  EXPECT_FALSE(fs::exists(dir_ / "bp" / "e_hat.csv"));
  const auto g = run("dag-eval --checkpoint " + (dir_ / "base" / "checkpoint.json").string() + " --out " +
                         (dir_ / "bd").string(),
                     dir_);
  EXPECT_NE(g.code, 0);
}

TEST_F(CliPipeline, AblationFlagsReachTheConfig) {
  const auto r = run("train --data " + data().string() + " --exclude domain_00 --enable-dag false --config " +
                         (dir_ / "train.json").string() + " --out " + (dir_ / "nodag").string(),
                     dir_);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = nlohmann::json::parse(slurp(dir_ / "nodag" / "manifest.json"));
  EXPECT_EQ(m.at("config").at("enable_dag"), false);
  EXPECT_EQ(m.at("config").at("enable_sparsity"), true);
}

TEST_F(CliPipeline, DistanceTable) {
  const auto r = run("distance --data " + data().string() + " --out " + (dir_ / "dist").string(), dir_);
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string t = slurp(dir_ / "dist" / "distances.csv");
  int distances = 0;
  for (std::size_t p = t.find(",distance,"); p != std::string::npos; p = t.find(",distance,", p + 1)) ++distances;
  EXPECT_EQ(distances, 6);
  EXPECT_NE(t.find(",spearman,"), std::string::npos);
  std::string why;
  EXPECT_TRUE(dapdag::testing::xml_well_formed(slurp(dir_ / "dist" / "distances.svg"), &why)) << why;
}

TEST(Cli, ExperimentOutputsAreDeterministic) {
  const auto d = scratch("exp");
  write(d / "exp.json",
        R"({"study":"loo","domains":3,"sources":2,"mean_size":60,"seeds":[0],"train":{"max_epochs":2}})");
  const std::string base = "experiment --config " + (d / "exp.json").string();
  ASSERT_EQ(run(base + " --out " + (d / "a").string(), d).code, 0);
  ASSERT_EQ(run(base + " --threads 2 --out " + (d / "b").string(), d).code, 0);
  EXPECT_EQ(slurp(d / "a" / "results.csv"), slurp(d / "b" / "results.csv"));
  EXPECT_EQ(slurp(d / "a" / "summary.csv"), slurp(d / "b" / "summary.csv"));
  EXPECT_EQ(slurp(d / "a" / "manifest.json"), slurp(d / "b" / "manifest.json"));
  const std::string results = slurp(d / "a" / "results.csv");
  EXPECT_EQ(results.rfind("method,setting,seed,target,metric,value\n", 0), 0u);
  std::string why;
  EXPECT_TRUE(dapdag::testing::xml_well_formed(slurp(d / "a" / "scores.svg"), &why)) << why;

  write(d / "bad.json", R"({"study":"loo","train":{"max_epoch":2}})");
  const auto r = run("experiment --config " + (d / "bad.json").string() + " --out " + (d / "c").string(), d);
  EXPECT_NE(r.code, 0);
  EXPECT_EQ(nlohmann::json::parse(r.err).at("error").at("command"), "experiment");
}

TEST(Cli, UnwritableOutput) {
  const auto d = scratch("unwritable");
  write(d / "file", "x");
  const auto r = run("generate --out " + (d / "file" / "sub").string(), d);
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("output directory"), std::string::npos);
}
