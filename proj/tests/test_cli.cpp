#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "birkhoff/cli.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(BIRKHOFF_SOURCE_DIR) / "configs";

struct Invocation {
  int code;
  std::string out, err;
};

Invocation invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = birkhoff::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "birkhoff_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

fs::path write_config(const std::string& name, const std::string& body) {
  const fs::path p = scratch("configs") / name;
  std::ofstream(p) << body;
  return p;
}

}  // namespace

class EveryConfig : public ::testing::TestWithParam<std::string> {};

TEST_P(EveryConfig, RunsCleanly) {
  const std::string cmd = GetParam();
  const fs::path dir = scratch(cmd);
  const Invocation r = invoke({cmd, "--config", (kConfigs / (cmd + ".json")).string(), "--out", dir.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(dir / (cmd + ".csv"));
  ASSERT_FALSE(csv.empty());
  EXPECT_EQ(csv.rfind("schema_version,", 0), 0u);
  EXPECT_NE(lines(csv)[0].find("status"), std::string::npos);
}

INSTANTIATE_TEST_SUITE_P(Configs, EveryConfig, ::testing::ValuesIn(birkhoff::cli::commands()),
                         [](const auto& info) {
                           std::string n = info.param;
                           std::replace(n.begin(), n.end(), '-', '_');
                           return n;
                         });

TEST(Cli, BowenValueInCsv) {
  const fs::path dir = scratch("bowen-value");
  ASSERT_EQ(invoke({"bowen", "--config", (kConfigs / "bowen.json").string(), "--out", dir.string()}).code, 0);
  const auto rows = lines(slurp(dir / "bowen.csv"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NE(rows[1].find("0.63092975357"), std::string::npos) << rows[1];
}

TEST(Cli, SpectrumHeaderAndRows) {
  const fs::path dir = scratch("spectrum-rows");
  ASSERT_EQ(invoke({"spectrum", "--config", (kConfigs / "spectrum.json").string(), "--out", dir.string()}).code, 0);
  const auto rows = lines(slurp(dir / "spectrum.csv"));
  ASSERT_EQ(rows.size(), 18u);
  EXPECT_EQ(rows[0].rfind("schema_version,alpha,dimension,status", 0), 0u) << rows[0];
}

TEST(Cli, MissingMapIsValidationError) {
  const fs::path cfg = write_config("nomap.json", R"({"analysis": {}})");
  const Invocation r = invoke({"bowen", "--config", cfg.string(), "--out", scratch("nomap").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("map"), std::string::npos) << r.err;
}

TEST(Cli, UnknownKeyIsValidationError) {
  const fs::path cfg = write_config("typo.json", R"({"map": {"builtin": "ternary-cantor", "slop": 3}})");
  const Invocation r = invoke({"bowen", "--config", cfg.string(), "--out", scratch("typo").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("slop"), std::string::npos) << r.err;
}

TEST(Cli, UnknownCommandAndMissingConfigAreUsageErrors) {
  EXPECT_EQ(invoke({"frobnicate", "--config", "x.json"}).code, 2);
  EXPECT_EQ(invoke({"bowen"}).code, 2);
  EXPECT_EQ(invoke({"bowen", "--config", "/nonexistent/birkhoff.json"}).code, 2);
}

TEST(Cli, NumericalFailureWritesStatusRow) {
  const fs::path cfg = write_config("tight.json", R"({
    "map": {"builtin": "full-linear", "slopes": [2, 2]},
    "potentials": [{"type": "indicator", "interval": [0.5, 1.0]}],
    "analysis": {"q": [-0.6931471805599453], "t": 1.0, "eps": 0.01, "k": 5}
  })");
  const fs::path dir = scratch("tight");
  const Invocation r = invoke({"horseshoe", "--config", cfg.string(), "--out", dir.string()});
  EXPECT_EQ(r.code, 3);
  const auto rows = lines(slurp(dir / "horseshoe.csv"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NE(rows[1].find("insufficient"), std::string::npos) << rows[1];
}

TEST(Cli, ThreadCountDoesNotChangeOutput) {
  for (const auto& cmd : birkhoff::cli::commands()) {
    const fs::path a = scratch(cmd + "-t1"), b = scratch(cmd + "-t8");
    const std::string cfg = (kConfigs / (cmd + ".json")).string();
    ASSERT_EQ(invoke({cmd, "--config", cfg, "--out", a.string(), "--threads", "1"}).code, 0) << cmd;
    ASSERT_EQ(invoke({cmd, "--config", cfg, "--out", b.string(), "--threads", "8"}).code, 0) << cmd;
    for (const auto& entry : fs::directory_iterator(a)) {
      if (entry.path().extension() != ".csv") continue;
      EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename())) << cmd << " " << entry.path().filename();
    }
  }
}
