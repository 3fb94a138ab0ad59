#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome cli(const std::string& args) {
  const fs::path capture = fs::temp_directory_path() / "stfem_cli_stdout.txt";
  const std::string cmd = std::string(STFEM_CLI_PATH) + " " + args + " > " + capture.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(capture);
  std::stringstream ss;
  ss << in.rdbuf();
  o.out = ss.str();
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("stfem_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream cfg(dir / "small.cfg");
    cfg << "[scenario]\ncase = manufactured\n[mesh]\nnx = 3\nny = 3\n[time]\nt_end = 0.2\nlevels = 2\ndt = 0.1\n";
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string fixture(const char* name) const { return (fs::path(STFEM_TEST_DATA_DIR) / name).string(); }
  fs::path dir;
};

}  // namespace

TEST_F(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli("validate").code, 2);
  EXPECT_EQ(cli("run --case manufactured --mode ust --dt 0.1").code, 2);
  EXPECT_EQ(cli("run --case manufactured --mode slab --levels 3").code, 2);
  EXPECT_EQ(cli("run --case manufactured --mode sideways").code, 2);
  EXPECT_EQ(cli("--help").code, 0);
}

TEST_F(Cli, RuntimeErrorsExitWithOne) {
  EXPECT_EQ(cli("validate --mesh " + (dir / "missing.stmesh").string()).code, 1);
  EXPECT_EQ(cli("run --case lid-driven --out " + dir.string()).code, 1);
  std::ofstream(dir / "bad.cfg") << "[time]\nspeed = 3\n";
  EXPECT_EQ(cli("run --config " + (dir / "bad.cfg").string() + " --out " + dir.string()).code, 1);
}

TEST_F(Cli, ValidateFixture) {
  const auto o = cli("validate --mesh " + fixture("stirrer2d.stmesh"));
  EXPECT_EQ(o.code, 0);
  EXPECT_NE(o.out.find("elements=596"), std::string::npos);
  EXPECT_NE(o.out.find("\nvalid\n"), std::string::npos);
}

TEST_F(Cli, MeshGenProducesAValidSpaceTimeMesh) {
  const auto st = (dir / "st.stmesh").string();
  ASSERT_EQ(cli("mesh-gen --input " + fixture("stirrer2d_coarse.stmesh") + " --levels 3 --omega 0.5 --t-end 0.3 --out " + st).code, 0);
  const auto o = cli("validate --mesh " + st);
  EXPECT_EQ(o.code, 0);
  EXPECT_NE(o.out.find("elements=2898"), std::string::npos);  // 322 triangles x 3 levels x 3
}

TEST_F(Cli, RunIsDeterministicAndPostprocessable) {
  const std::string cfg = (dir / "small.cfg").string();
  for (const char* sub : {"a", "b"})
    ASSERT_EQ(cli("run --config " + cfg + " --mode ust --quiet --out " + (dir / sub).string()).code, 0);
  for (const char* f : {"result.dat", "newton_trace.csv", "slice_final.vtk"}) {
    ASSERT_TRUE(fs::exists(dir / "a" / f)) << f;
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }

  const auto result = (dir / "a" / "result.dat").string();
  const auto vtk = (dir / "s.vtk").string();
  ASSERT_EQ(cli("slice --result " + result + " --time 0.15 --out " + vtk).code, 0);
  EXPECT_EQ(slurp(vtk).rfind("# vtk DataFile Version 3.0", 0), 0u);
  EXPECT_EQ(cli("slice --result " + result + " --time 0.5 --out " + vtk).code, 1);

  const auto p = cli("probe --result " + result + " --points \"0.5,0.5,0.2;7,7,0.1\"");
  EXPECT_EQ(p.code, 0);
  EXPECT_EQ(p.out.rfind("x,y,t,u1,u2,p\n0.5,0.5,0.2,", 0), 0u);
  EXPECT_NE(p.out.find("7,7,0.1,nan,nan,nan"), std::string::npos);
  EXPECT_EQ(cli("probe --result " + result + " --points 0.5,0.5").code, 2);
}

TEST_F(Cli, SlabRunAndConvergenceTable) {
  const std::string cfg = (dir / "small.cfg").string();
  ASSERT_EQ(cli("run --config " + cfg + " --mode slab --quiet --out " + (dir / "slab").string()).code, 0);
  const std::string trace = slurp(dir / "slab" / "newton_trace.csv");
  EXPECT_NE(trace.find('\n'), std::string::npos);

  const auto c = cli("convergence --config " + cfg + " --mode ust --factors 1,2");
  EXPECT_EQ(c.code, 0);
  EXPECT_EQ(std::count(c.out.begin(), c.out.end(), '\n'), 3);
}
