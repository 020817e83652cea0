#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

struct Result {
  int status;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(NARROW_NODE_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, {}};
  std::string out;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  const int raw = pclose(pipe);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

std::string value_of(const std::string& out, const std::string& key) {
  std::istringstream lines(out);
  for (std::string line; std::getline(lines, line);)
    if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
  return {};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("narrow_node_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
    write("identity.json",
          R"({"dim": 1, "activation": "relu", "layers": [{"A": [[1]], "W": [[1]], "b": [0]}]})");
    write("tanh2.json", R"({"dim": 2, "activation": "tanh", "layers": [
        {"A": [[0.8, -0.3], [0.2, 0.5]], "W": [[0.9, 0.1], [-0.4, 0.7]], "b": [0.3, -0.2]},
        {"A": [[-0.5, 0.4], [0.6, 0.1]], "W": [[0.2, -0.8], [0.5, 0.3]], "b": [-0.1, 0.4]}]})");
    write("explosive.json",
          R"({"dim": 1, "activation": "relu", "layers": [{"A": [[100]], "W": [[1]], "b": [1]}]})");
    write("ragged.json",
          R"({"dim": 2, "activation": "relu", "layers": [{"A": [[1, 0], [0]], "W": [[1, 0], [0, 1]], "b": [0, 0]}]})");
  }
  void TearDown() override { fs::remove_all(dir_); }

  void write(const std::string& name, const std::string& text) { std::ofstream(dir_ / name) << text; }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, BoundOnIdentityInstance) {
  const auto r = run("bound --weights " + path("identity.json") + " --r 1 --T 1 --N 10");
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_EQ(value_of(r.out, "c"), "0");
  EXPECT_EQ(value_of(r.out, "K_tilde"), "1");
  EXPECT_EQ(value_of(r.out, "L"), "1");
  EXPECT_EQ(value_of(r.out, "X").substr(0, 8), "2.718281");
  EXPECT_EQ(value_of(r.out, "R").substr(0, 8), "2.718281");
  EXPECT_EQ(value_of(r.out, "bound").substr(0, 8), "1.847264");
}

TEST_F(Cli, MinSwitchesRoundTripsWithBound) {
  const auto b = run("bound --weights " + path("tanh2.json") + " --N 37");
  ASSERT_EQ(b.status, 0);
  const auto eps = value_of(b.out, "bound");
  const auto m = run("min-switches --weights " + path("tanh2.json") + " --eps " + eps);
  ASSERT_EQ(m.status, 0);
  EXPECT_EQ(value_of(m.out, "N"), "37");

  const auto m2 = run("min-switches --weights " + path("tanh2.json") + " --eps 0.5");
  const auto N = value_of(m2.out, "N");
  const auto b2 = run("bound --weights " + path("tanh2.json") + " --N " + N);
  EXPECT_LE(std::stod(value_of(b2.out, "bound")), 0.5);
}

TEST_F(Cli, SimulateSingleLayerWritesTrajectories) {
  const auto r = run("simulate --weights " + path("identity.json") + " --N 8 --x0 0.5 --out " +
                     path("sim"));
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_LE(std::stod(value_of(r.out, "terminal_error")), 1e-9);
  const auto wide = slurp(path("sim") + ".wide.csv");
  const auto switched = slurp(path("sim") + ".switched.csv");
  EXPECT_EQ(wide.rfind("t,x_1\n0,0.5\n", 0), 0u);
  EXPECT_EQ(switched.rfind("t,x_1\n0,0.5\n", 0), 0u);
  EXPECT_NE(switched.find("\n0.125,"), std::string::npos);
}

TEST_F(Cli, SweepIsByteIdenticalForEqualSeeds) {
  const std::string args = "sweep --weights " + path("tanh2.json") +
                           " --N-list 2,4,8 --samples 6 --seed 13 --out ";
  ASSERT_EQ(run(args + path("a.csv")).status, 0);
  ASSERT_EQ(run(args + path("b.csv")).status, 0);
  const auto a = slurp(path("a.csv"));
  EXPECT_EQ(a, slurp(path("b.csv")));
  EXPECT_EQ(a.rfind("N,max_empirical_error,theoretical_bound\n2,", 0), 0u);
  EXPECT_NE(a.find("# estimated_order="), std::string::npos);
  EXPECT_NE(a.find(" seed=13\n"), std::string::npos);
}

TEST_F(Cli, VerifyPassesOnWellPosedInstance) {
  const auto r = run("verify --weights " + path("tanh2.json") + " --N-list 1,4,16 --samples 5");
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_EQ(value_of(r.out, "result"), "pass");
  EXPECT_EQ(value_of(r.out, "bound_violations"), "0");
}

TEST_F(Cli, ExitStatuses) {
  EXPECT_EQ(run("").status, 2);
  EXPECT_EQ(run("bound --N 3").status, 2);
  EXPECT_EQ(run("bound --weights " + path("identity.json")).status, 2);
  EXPECT_EQ(run("bound --weights " + path("identity.json") + " --N 0").status, 2);
  EXPECT_EQ(run("bound --weights " + path("identity.json") + " --N 1 --T -1").status, 2);
  EXPECT_EQ(run("min-switches --weights " + path("identity.json") + " --eps 0").status, 2);
  EXPECT_EQ(run("sweep --weights " + path("identity.json") + " --N-list 4,2").status, 2);
  EXPECT_EQ(run("simulate --weights " + path("identity.json") + " --N 2 --step 0.1 --tol 1e-8").status, 2);
  EXPECT_EQ(run("bound --weights " + path("missing.json") + " --N 1").status, 3);
  EXPECT_EQ(run("bound --weights " + path("ragged.json") + " --N 1").status, 3);
  EXPECT_EQ(run("simulate --weights " + path("explosive.json") + " --N 2 --x0 1").status, 4);
}
