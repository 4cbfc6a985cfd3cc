#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;  // stdout and stderr interleaved
};

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" + NSF_CLI_PATH + "' " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.output.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

const char* kBase = R"([model]
gamma = 4
m = 2.5
l = 1.5
mu = 1
lambda = 0
f = 0.1
a1 = 1
a2 = 1
a3 = 1
a4 = 1
M = 1

[theta0]
preset = constant
value = 1

[approx]
epsilon = 0.01
k = 10

[grid]
lx = 1
ly = 1
nx = 12
ny = 12
)";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nsf-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string config(const std::string& force, const std::string& extra = "") {
    return write("case.ini", std::string(kBase) + "\n[force]\n" + force + "\n[output]\ndirectory = " +
                                 (dir_ / "out").string() + "\n" + extra);
  }
  std::string out_env() const { return "NSF_OUTPUT_DIR='" + (dir_ / "env-out").string() + "'"; }

  fs::path dir_;
};

const std::string kSmallForce = "preset = constant\nx = 0.1\ny = 0\n";
const std::string kHugeForce = "preset = constant\nx = 1e6\ny = 0\n";
const std::string kBlowUp = "[schedule]\nt_steps = 0, 1\ndamping = 1\n";

}  // namespace

TEST_F(Cli, RunConvergesAndWritesOutputs) {
  const Result r = run("run '" + config(kSmallForce, "write_fields = true\n") + "'");
  EXPECT_EQ(r.code, 0) << r.output;
  for (const char* f : {"report.json", "state.state", "rho.csv", "u.csv", "v.csv", "s.csv", "s_boundary.csv"})
    EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
  EXPECT_NE(slurp(dir_ / "out" / "report.json").find("\"status\": \"converged\""), std::string::npos);
}

TEST_F(Cli, OutputDirectoryFromEnvironmentWins) {
  const Result r = run("run '" + config(kSmallForce) + "'", out_env());
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(fs::exists(dir_ / "env-out" / "report.json"));
  EXPECT_FALSE(fs::exists(dir_ / "out"));
}

TEST_F(Cli, RestartFromStateFile) {
  ASSERT_EQ(run("run '" + config(kSmallForce) + "'").code, 0);
  const fs::path first = dir_ / "first.state";
  fs::rename(dir_ / "out" / "state.state", first);
  const Result r = run("run '" + config(kSmallForce, "\n[run]\ninitial_state = " + first.string() + "\n") + "'");
  EXPECT_EQ(r.code, 0) << r.output;
}

TEST_F(Cli, ConfigErrorsExitOne) {
  Result r = run("run '" + write("bad.ini", "[model]\ngamma = 4\n") + "'");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("missing required key"), std::string::npos) << r.output;
  r = run("run '" + (dir_ / "missing.ini").string() + "'");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("cannot open"), std::string::npos) << r.output;
}

TEST_F(Cli, StrictModeRejectsGammaThree) {
  std::string text = std::string(kBase) + "\n[force]\n" + kSmallForce;
  text.replace(text.find("gamma = 4"), 9, "gamma = 3");
  const Result r = run("run '" + write("g3.ini", text) + "'", out_env());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("gamma > 3"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("(gamma = 3, needs > 3)"), std::string::npos) << r.output;
}

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("verify --suite=bogus").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, NonConvergedRunExitsTwo) {
  const Result r = run("run '" + config(kHugeForce, kBlowUp) + "'");
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_NE(slurp(dir_ / "out" / "report.json").find("\"status\": \"failed\""), std::string::npos);
}

TEST_F(Cli, SweepWritesCsvAndRejectsUnsortedValues) {
  const std::string cfg = config(kSmallForce);
  Result r = run("sweep '" + cfg + "' --sweep=epsilon --values=0.1,0.01");
  ASSERT_EQ(r.code, 0) << r.output;
  const std::string csv = slurp(dir_ / "out" / "sweep.csv");
  EXPECT_EQ(csv.rfind("epsilon,", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  r = run("sweep '" + cfg + "' --sweep=k --values=5,20,10");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("sorted"), std::string::npos) << r.output;
  // k must stay above the mean density.
  EXPECT_EQ(run("sweep '" + cfg + "' --sweep=k --values=0.5,5").code, 1);
}

TEST_F(Cli, FailedSweepPointExitsThree) {
  const Result r = run("sweep '" + config(kHugeForce, kBlowUp) + "' --sweep=epsilon --values=0.1");
  EXPECT_EQ(r.code, 3) << r.output;
  EXPECT_TRUE(fs::exists(dir_ / "out" / "sweep.csv"));
}

TEST_F(Cli, VerifyInvariantsPasses) {
  const Result r = run("verify --suite=invariants");
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(r.output.find("FAIL"), std::string::npos) << r.output;
}
