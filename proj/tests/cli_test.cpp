// Drives the frob executable through the shell.
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

const char* kConfig = R"(
seed: 2
mode: iii
few_shots: 8
normal: {kind: gaussian-mixture, size: 150, scale: 0.08, means: [[0, 0.4], [-0.3464, -0.2], [0.3464, -0.2]]}
few_shot_pool: {kind: ring, size: 100}
test_sets:
  - {name: ring, kind: ring, size: 40}
  - {name: noise, kind: uniform-noise, size: 40}
schedule: {phase_a_epochs: 4, phase_b_epochs: 20, phase_c_epochs: 4, boundary_pool_size: 16}
classifier: {hidden: [8], activation: tanh}
generator: {latent_dim: 3, hidden: [8], activation: tanh}
budget: {pgd_steps: 3}
)";

struct Result {
  int status = -1;
  std::string out;
};

// Runs the CLI with `args` from `cwd`; captures stdout only.
Result run(const std::string& args, const fs::path& cwd) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" + FROB_CLI + "' " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 512> buf{};
  while (fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("frob_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "exp.yaml") << kConfig;
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
};

std::size_t count_results(const fs::path& runs) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(runs)) {
    const auto name = e.path().filename().string();
    n += name.ends_with(".json") && !name.ends_with(".meta.json");
  }
  return n;
}

}  // namespace

TEST_F(Cli, GradCheckPrintsStatusLine) {
  auto r = run("grad-check --instances 10 --seed 4", dir_);
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("instances=10 "), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("status=pass"), std::string::npos) << r.out;
}

TEST_F(Cli, UnknownKeyExitsWithTwo) {
  EXPECT_EQ(run("-q train -c exp.yaml -o out --set budget.epsilonn=0.1", dir_).status, 2);
  EXPECT_EQ(run("-q train -o out", dir_).status, 2);
  EXPECT_EQ(run("-q train -c missing.yaml -o out", dir_).status, 2);
  EXPECT_EQ(run("--no-such-flag", dir_).status, 2);
}

TEST_F(Cli, FailedRunExitsWithOne) {
  EXPECT_EQ(run("-q train -c exp.yaml -o out --set few_shots=500", dir_).status, 1);
  EXPECT_EQ(run("-q eval -c exp.yaml -o out --classifier nowhere.ckpt", dir_).status, 1);
}

TEST_F(Cli, SweepWritesOneResultPerCountInsideOutputDir) {
  auto r = run("-q sweep -c exp.yaml -o out -j 2 --set sweep.counts=8,4,0", dir_);
  ASSERT_EQ(r.status, 0);
  EXPECT_EQ(count_results(dir_ / "out" / "runs"), 3u);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "summary.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "sweep.json"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "plots" / "iii_ring_auroc.dat"));
  // Nothing besides the config and the output directory appears in cwd.
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir_)) ++entries;
  EXPECT_EQ(entries, 2u);
}

TEST_F(Cli, TrainThenEvalReusesCheckpoint) {
  ASSERT_EQ(run("-q train -c exp.yaml -o out", dir_).status, 0);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "models" / "classifier.ckpt"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "models" / "generator.ckpt"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "data" / "boundary_pool.csv"));
  ASSERT_EQ(run("-q eval -c exp.yaml -o out", dir_).status, 0);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "scores" / "eval-iii-fs8-s2_ring.csv"));
}

TEST_F(Cli, GenDataInlineSpec) {
  ASSERT_EQ(run("-q gen-data -o out --set kind=ring --set size=25 --set seed=3", dir_).status, 0);
  std::ifstream csv(dir_ / "out" / "data" / "dataset.csv");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(csv, line)) ++lines;
  EXPECT_EQ(lines, 26u);
  EXPECT_EQ(run("-q gen-data -o out --set kind=spiral", dir_).status, 2);
}

TEST_F(Cli, GenDataFromConfig) {
  ASSERT_EQ(run("-q gen-data -c exp.yaml -o out", dir_).status, 0);
  for (auto name : {"normal.csv", "in_test.csv", "few_shot_pool.csv", "test_ring.csv", "test_noise.csv"})
    EXPECT_TRUE(fs::exists(dir_ / "out" / "data" / name)) << name;
}

TEST_F(Cli, OutputRootFromEnvironment) {
  const std::string args = "-q ablate -c exp.yaml --set ablation.modes=i";
  const std::string cmd = "cd '" + dir_.string() + "' && FROB_OUTPUT_ROOT=envout '" + FROB_CLI + "' " + args +
                          " >/dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(raw));
  EXPECT_EQ(WEXITSTATUS(raw), 0);
  EXPECT_TRUE(fs::exists(dir_ / "envout" / "summary.csv"));
}
