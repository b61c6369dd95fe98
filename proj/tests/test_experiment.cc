#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mfg/experiment.h"

namespace mfg {
namespace {

namespace fs = std::filesystem;

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& name)
      : path_(fs::temp_directory_path() /
              ("mfg_test_" + name + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()))) {
    fs::remove_all(path_);
  }
  ~ScratchDir() { fs::remove_all(path_); }
  std::string sub(const std::string& rel) const { return (path_ / rel).string(); }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

ExperimentSpec toy_spec(const std::string& out) {
  ExperimentSpec spec = parse_spec(R"({
    "env": {"kind": "toy", "states": 3, "actions": 2, "seed": 7},
    "steps": 1000, "alpha": 0.05, "seeds": 2, "cadence": 100,
    "exploitability_cadence": 500, "threads": 2
  })");
  spec.out_dir = out;
  return spec;
}

TEST(Spec, DefaultsAndFields) {
  const ExperimentSpec d = parse_spec("{}");
  EXPECT_EQ(d.env.kind, "ring-road");
  EXPECT_EQ(effective_seeds(d).size(), 10u);
  EXPECT_EQ(d.run.total_steps, 100000);
  const ExperimentSpec s = parse_spec(R"({
    "env": "flocking", "algorithm": "fpi", "variant": "md", "inner_k": 50,
    "seeds": [4, 9], "seed_offset": 100, "basis": {"kind": "tan-normal", "d2": 5},
    "alpha": 0.5, "decay": 1.0, "inverse_temperature": 10
  })");
  EXPECT_EQ(s.env.kind, "flocking");
  EXPECT_EQ(s.run.algorithm, Algorithm::kFpiMd);
  EXPECT_EQ(s.run.inner_loop, 50);
  EXPECT_EQ(effective_seeds(s), (std::vector<std::uint64_t>{104, 109}));
  EXPECT_EQ(s.basis.d2, 5);
  EXPECT_DOUBLE_EQ(step_size(s.run.step_size, 9), 0.05);
  EXPECT_TRUE(s.inverse_temperature_set);
}

TEST(Spec, ErrorsNameTheField) {
  auto message = [](const std::string& json) -> std::string {
    try {
      parse_spec(json);
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "no error";
  };
  EXPECT_NE(message(R"({"stepz": 3})").find("stepz"), std::string::npos);
  EXPECT_NE(message(R"({"env": {"kind": "toy", "colour": 1}})").find("env.colour"),
            std::string::npos);
  EXPECT_NE(message(R"({"steps": "many"})").find("steps"), std::string::npos);
  EXPECT_NE(message(R"({"seeds": 0})").find("seeds"), std::string::npos);
  EXPECT_NE(message(R"({"algorithm": "semisgd", "variant": "fp"})").find("variant"),
            std::string::npos);
  EXPECT_NE(message("{not json").find("JSON"), std::string::npos);
  EXPECT_NE(message(R"({"cadence": 0})").find("cadence"), std::string::npos);
  EXPECT_THROW(load_spec("/nonexistent/spec.json"), IoError);
}

TEST(Spec, EnvironmentFactory) {
  EnvSpec e;
  e.kind = "sioux-falls";
  e.network = std::string(MFG_TEST_DATA_DIR) + "/sioux_falls.net";
  EXPECT_EQ(make_environment(e)->name(), "sioux-falls");
  e.kind = "toy";
  e.toy_states = 4;
  EXPECT_EQ(make_environment(e)->num_states(), 4);
  e.kind = "mars";
  EXPECT_THROW(make_environment(e), ConfigError);
  EXPECT_DOUBLE_EQ(default_inverse_temperature("sioux-falls"), 1e3);
}

TEST(CmdRun, CountsRowsAndCreatesDirectories) {
  ScratchDir dir("run");
  const ExperimentSpec spec = toy_spec(dir.sub("nested/deeper"));
  cmd_run(spec);
  const auto agg = lines(slurp(dir.sub("nested/deeper/aggregate.csv")));
  ASSERT_EQ(agg.size(), 12u);
  EXPECT_EQ(agg[0], "step,mse_mean,mse_std,expl_mean,expl_std");
  EXPECT_EQ(agg[1].substr(0, 2), "0,");
  EXPECT_EQ(agg[11].substr(0, 5), "1000,");
  const auto seed1 = lines(slurp(dir.sub("nested/deeper/run_seed1.csv")));
  EXPECT_EQ(seed1[0], "step,mse,exploitability");
  EXPECT_EQ(seed1.size(), 12u);
  // Exploitability appears only at its own cadence and at T.
  EXPECT_EQ(seed1[2].back(), ',');
  EXPECT_NE(seed1[6].back(), ',');
  EXPECT_TRUE(fs::exists(dir.sub("nested/deeper/run_seed2.csv")));
}

TEST(CmdRun, SchemaIdenticalAcrossAlgorithms) {
  ScratchDir dir("schema");
  ExperimentSpec a = toy_spec(dir.sub("semisgd"));
  ExperimentSpec b = toy_spec(dir.sub("fpi"));
  b.run.algorithm = Algorithm::kFpiVanilla;
  b.run.inner_loop = 100;
  cmd_run(a);
  cmd_run(b);
  const auto la = lines(slurp(dir.sub("semisgd/aggregate.csv")));
  const auto lb = lines(slurp(dir.sub("fpi/aggregate.csv")));
  ASSERT_EQ(la.size(), lb.size());
  EXPECT_EQ(la[0], lb[0]);
  for (std::size_t i = 1; i < la.size(); ++i) {
    EXPECT_EQ(la[i].substr(0, la[i].find(',')), lb[i].substr(0, lb[i].find(',')));
  }
}

TEST(CmdRun, RerunIsByteIdentical) {
  ScratchDir dir("rerun");
  ExperimentSpec a = toy_spec(dir.sub("a"));
  ExperimentSpec b = toy_spec(dir.sub("b"));
  b.threads = 1;
  cmd_run(a);
  cmd_run(b);
  for (const char* f : {"aggregate.csv", "run_seed1.csv", "run_seed2.csv"}) {
    EXPECT_EQ(slurp(dir.sub(std::string("a/") + f)), slurp(dir.sub(std::string("b/") + f)));
  }
}

TEST(CmdReference, WritesTablesAndReloads) {
  ScratchDir dir("reference");
  ExperimentSpec spec = toy_spec(dir.sub("ref"));
  cmd_reference(spec);
  const auto rows = lines(slurp(dir.sub("ref/reference.csv")));
  EXPECT_EQ(rows[0], "section,i,j,value");
  EXPECT_EQ(rows[1].substr(0, 5), "mu,0,");
  int q_rows = 0;
  std::vector<double> expl;
  for (const auto& r : rows) {
    if (r.rfind("q,", 0) == 0) ++q_rows;
    if (r.rfind("exploitability,", 0) == 0) expl.push_back(std::stod(r.substr(r.rfind(',') + 1)));
  }
  EXPECT_EQ(q_rows, 6);
  ASSERT_FALSE(expl.empty());
  for (std::size_t k = expl.size() / 2; k + 1 < expl.size(); ++k) {
    EXPECT_LE(expl[k + 1], expl[k] + 1e-12);
  }
  EXPECT_LE(expl.back(), 1e-8);
  // The cached population feeds later runs without re-solving.
  spec.reference_path = dir.sub("ref/mu_star.txt");
  const auto env = make_environment(spec.env);
  const Vector cached = reference_population(spec, *env);
  spec.reference_path.clear();
  EXPECT_EQ(cached, reference_population(spec, *env));
}

TEST(CmdReference, RejectsMismatchedCache) {
  ScratchDir dir("badcache");
  ExperimentSpec spec = toy_spec(dir.sub("x"));
  fs::create_directories(dir.sub(""));
  std::ofstream(dir.sub("mu.txt")) << "0.5\n0.5\n";
  spec.reference_path = dir.sub("mu.txt");
  EXPECT_THROW(cmd_run(spec), ConfigError);
}

TEST(CmdSweepK, SingleInnerStepMatchesSemiSgdFinalRow) {
  ScratchDir dir("sweep");
  ExperimentSpec run = toy_spec(dir.sub("run"));
  cmd_run(run);
  ExperimentSpec sweep = toy_spec(dir.sub("sweep"));
  sweep.k_list = {1};
  cmd_sweep_k(sweep);
  const auto agg = lines(slurp(dir.sub("run/aggregate.csv")));
  const auto sk = lines(slurp(dir.sub("sweep/sweep_k.csv")));
  ASSERT_EQ(sk.size(), 2u);
  const std::string tail_run = agg.back().substr(agg.back().find(','));
  const std::string tail_sweep = sk[1].substr(sk[1].find(','));
  EXPECT_EQ(tail_run, tail_sweep);
}

TEST(CmdSweepK, EmptyListIsAnError) {
  ExperimentSpec spec = toy_spec("unused");
  spec.k_list.clear();
  EXPECT_THROW(cmd_sweep_k(spec), ConfigError);
  spec.k_list = {2000};
  EXPECT_THROW(cmd_sweep_k(spec), ConfigError);
}

TEST(CmdCompareLfa, SingleBasisFunctionFreezesPopulation) {
  ScratchDir dir("compare");
  ExperimentSpec spec = parse_spec(R"({
    "env": "ring-road", "seeds": 3, "d2_list": [1, 25],
    "compare": {"grid": 50, "steps": 500}, "reference": {"outer_iters": 20}
  })");
  spec.out_dir = dir.sub("c");
  cmd_compare_lfa(spec);
  const auto rows = lines(slurp(dir.sub("c/compare_lfa.csv")));
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], "d2,method,mse_mean,mse_std");
  EXPECT_EQ(rows[2].substr(0, 9), "1,pa-lfa,");
  EXPECT_EQ(rows[2].substr(rows[2].rfind(',') + 1), "0");
  EXPECT_EQ(rows[3].substr(0, 18), "25,discretization,");
  spec.env.kind = "toy";
  EXPECT_THROW(cmd_compare_lfa(spec), ConfigError);
}

}  // namespace
}  // namespace mfg
