#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <sys/wait.h>

#include "test_util.hpp"

using pizzamon::testing::slurp;
using pizzamon::testing::spit;
using pizzamon::testing::TempDir;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(PIZZAMON_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST(Cli, SimulateQuietDayThenVerifyAndCost) {
  TempDir dir;
  const auto out = dir.path().string();
  auto r = cli("simulate --scenario normal --duration 24h --seed 7 --out " + out);
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_TRUE(contains(r.out, "samples=2880 local_records=72 txs=12 alerts=0")) << r.out;

  r = cli("verify --ledger " + out + "/ledger.bin --report " + out + "/reports/fridge-1/2025-01-01.csv");
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_TRUE(contains(r.out, "Authentic"));

  r = cli("cost --ledger " + out + "/ledger.bin --day 2025-01-01");
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_TRUE(contains(r.out, "12 tx  $0.0107")) << r.out;

  r = cli("energy --events " + out + "/events.log --csv -");
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_TRUE(contains(r.out, "96.7%")) << r.out;
  EXPECT_TRUE(contains(r.out, "component,baseline_j,duty_j,saving_pct")) << r.out;
}

TEST(Cli, SimulateBreachDay) {
  TempDir dir;
  auto r = cli("simulate --scenario breach --duration 24h --seed 7 --out " + dir.path().string());
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_TRUE(contains(r.out, "txs=14 alerts=1 resolutions=1")) << r.out;
}

TEST(Cli, AnnualCostOverAYear) {
  TempDir dir;
  auto r = cli("simulate --scenario normal --duration 365d --seed 1 --out " + dir.path().string());
  ASSERT_EQ(r.status, 0) << r.out;
  r = cli("cost --ledger " + dir.path().string() + "/ledger.bin");
  EXPECT_EQ(r.status, 0);
  EXPECT_TRUE(contains(r.out, "annual  $3.91")) << r.out.substr(r.out.size() > 200 ? r.out.size() - 200 : 0);
}

TEST(Cli, VerifyFailuresExitThree) {
  TempDir dir;
  const auto out = dir.path().string();
  ASSERT_EQ(cli("simulate --duration 6h --out " + out).status, 0);
  auto ledger = slurp(dir.path() / "ledger.bin");
  ledger[ledger.size() / 2] ^= 0x04;
  spit(dir.path() / "bad.bin", ledger);
  auto r = cli("verify --ledger " + out + "/bad.bin");
  EXPECT_EQ(r.status, 3) << r.out;
  EXPECT_TRUE(contains(r.out, "FAILED at index")) << r.out;

  // A report for a day that was never anchored.
  const auto csv = slurp(dir.path() / "reports/fridge-1/2025-01-01.csv");
  std::filesystem::create_directories(dir.path() / "reports/fridge-1");
  spit(dir.path() / "reports/fridge-1/2025-01-02.csv", csv);
  r = cli("verify --ledger " + out + "/ledger.bin --report " + out + "/reports/fridge-1/2025-01-02.csv");
  EXPECT_EQ(r.status, 3) << r.out;
  EXPECT_TRUE(contains(r.out, "NoAnchor")) << r.out;
}

TEST(Cli, UsageAndIoErrorsExitTwo) {
  TempDir dir;
  EXPECT_EQ(cli("verify --ledger " + dir.file("missing.bin")).status, 2);
  EXPECT_EQ(cli("simulate --scenario sideways --out " + dir.file("x")).status, 2);
  EXPECT_EQ(cli("simulate --duration 5q --out " + dir.file("x")).status, 2);
  EXPECT_EQ(cli("").status, 2);
  spit(dir.path() / "bad.conf", "temp_min_decic = 20\ntemp_mx_decic = 60\n");
  const auto r = cli("simulate --config " + dir.file("bad.conf") + " --out " + dir.file("x"));
  EXPECT_EQ(r.status, 2);
  EXPECT_TRUE(contains(r.out, "line 2")) << r.out;
}

TEST(Cli, ZeroDurationAndFaults) {
  TempDir dir;
  auto r = cli("simulate --duration 0s --out " + dir.file("empty"));
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_TRUE(contains(r.out, "samples=0"));
  r = cli("simulate --scenario breach --duration 1d --fault process-crash:3h:195m --fault ledger-outage:2h:150m --out " +
          dir.file("faulty"));
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_EQ(cli("verify --ledger " + dir.file("faulty") + "/ledger.bin").status, 0);
  EXPECT_EQ(cli("simulate --fault meteor:1h:2h --out " + dir.file("x")).status, 2);
}

TEST(Cli, ReplayTrace) {
  TempDir dir;
  ASSERT_EQ(cli("simulate --scenario breach --duration 1d --seed 4 --out " + dir.file("a")).status, 0);
  ASSERT_EQ(cli("simulate --trace " + dir.file("a") + "/trace.csv --seed 4 --out " + dir.file("b")).status, 0);
  EXPECT_EQ(slurp(dir.path() / "a/ledger.bin"), slurp(dir.path() / "b/ledger.bin"));
  EXPECT_EQ(slurp(dir.path() / "a/events.log"), slurp(dir.path() / "b/events.log"));
}
