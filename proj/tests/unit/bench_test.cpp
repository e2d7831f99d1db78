#include <gtest/gtest.h>

#include <sstream>

#include "hedb/bench/config.hpp"
#include "hedb/bench/runner.hpp"
#include "test_util.hpp"

namespace hedb {
namespace {

TEST(BenchConfigTest, ParsesAndRejectsUnknownKeys) {
  BenchConfig c = parse_bench_config(R"({"workload": {"scale": 0.02, "concurrency": 8},
                                          "enclave": {"costs": {"rnd_decrypt": 7}},
                                          "software": {"ore_compare": 61}})");
  EXPECT_DOUBLE_EQ(c.workload.scale, 0.02);
  EXPECT_EQ(c.workload.concurrency, 8u);
  EXPECT_DOUBLE_EQ(c.software.ore_compare, 61);
  BenchConfig back = parse_bench_config(bench_config_to_json(c));
  EXPECT_EQ(bench_config_to_json(back), bench_config_to_json(c));
  testing_util::expect_code([] { parse_bench_config(R"({"workload": {"scael": 1}})"); }, ErrorCode::kFormat);
  testing_util::expect_code([] { parse_bench_config(R"({"bogus": {}})"); }, ErrorCode::kFormat);
}

TEST(WorkloadTest, SameSeedSameDataset) {
  WorkloadSpec s;
  s.scale = 0.002;
  s.seed = 9;
  const std::string a = generate_dataset(s).dump();
  EXPECT_EQ(a, generate_dataset(s).dump());
  s.seed = 10;
  EXPECT_NE(a, generate_dataset(s).dump());
}

TEST(RunnerTest, DeterministicAndChecked) {
  WorkloadSpec s;
  s.scale = 0.002;
  s.op_count = 40;
  s.read_write_ratio = 0.5;
  s.concurrency = 3;
  const Dataset data = generate_dataset(s);
  RunReport a = run_workload(Mode::kStaticTee, s, data, RunOptions{});
  RunReport b = run_workload(Mode::kStaticTee, s, data, RunOptions{});
  EXPECT_EQ(a.mismatches, 0u);
  EXPECT_GT(a.checked, 0u);
  EXPECT_EQ(a.virtual_micros, b.virtual_micros);
  EXPECT_EQ(a.ops, 40u);

  std::stringstream csv;
  write_report_csv(csv, {a, b});
  CsvTable t = read_report_csv(csv);
  EXPECT_EQ(t.rows.size(), 2u);
}

TEST(RunnerTest, StorageOrdering) {
  auto rows = report_storage({0.002}, {Mode::kPlaintext, Mode::kSoftware, Mode::kStaticTee});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_DOUBLE_EQ(rows[0].ratio, 1.0);
  EXPECT_GT(rows[1].ratio, rows[2].ratio);
  EXPECT_GT(rows[2].ratio, 1.0);
}

}  // namespace
}  // namespace hedb
