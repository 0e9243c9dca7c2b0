#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "shmc/batching.hpp"

using namespace shmc;

TEST(Batching, FullAlwaysFullBatch) {
  BatchSchedule s(BatchMode::kFull, 8, RngStream(1, 0));
  EXPECT_EQ(s.n_batches(), 1u);
  for (int i = 0; i < 10; ++i) {
    const BatchDraw d = s.next();
    EXPECT_TRUE(d.batch.is_full());
    EXPECT_EQ(d.scale, 1.0);
  }
}

TEST(Batching, PermutationBlocksArePermutations) {
  const std::size_t k = 5;
  BatchSchedule s(BatchMode::kPermutation, k, RngStream(2, 0));
  std::set<std::vector<std::size_t>> orders;
  for (int sweep = 0; sweep < 200; ++sweep) {
    std::vector<std::size_t> block;
    for (std::size_t i = 0; i < k; ++i) {
      const BatchDraw d = s.next();
      EXPECT_EQ(d.scale, 5.0);
      block.push_back(d.batch.index());
    }
    orders.insert(block);
    std::sort(block.begin(), block.end());
    for (std::size_t i = 0; i < k; ++i) EXPECT_EQ(block[i], i);
  }
  // 200 sweeps over 120 orders: many distinct orders show up.
  EXPECT_GT(orders.size(), 60u);
}

TEST(Batching, PermutationFirstPositionUniform) {
  const std::size_t k = 4;
  BatchSchedule s(BatchMode::kPermutation, k, RngStream(3, 0));
  std::map<std::size_t, int> first;
  const int sweeps = 40000;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    first[s.next().batch.index()]++;
    for (std::size_t i = 1; i < k; ++i) s.next();
  }
  for (std::size_t i = 0; i < k; ++i) {
    const double p = static_cast<double>(first[i]) / sweeps;
    EXPECT_NEAR(p, 0.25, 5 * std::sqrt(0.25 * 0.75 / sweeps));
  }
}

TEST(Batching, IidFrequencies) {
  const std::size_t k = 3;
  BatchSchedule s(BatchMode::kIid, k, RngStream(4, 0));
  std::map<std::size_t, int> count;
  const int n = 60000;
  for (int i = 0; i < n; ++i) count[s.next().batch.index()]++;
  for (std::size_t i = 0; i < k; ++i) {
    EXPECT_NEAR(count[i] / double(n), 1.0 / 3, 5 * std::sqrt(2.0 / 9 / n));
  }
}

TEST(Batching, SingleBatchHasUnitScale) {
  BatchSchedule s(BatchMode::kPermutation, 1, RngStream(5, 0));
  EXPECT_EQ(s.next().scale, 1.0);
  EXPECT_EQ(s.next().batch.index(), 0u);
}

TEST(Batching, Deterministic) {
  BatchSchedule a(BatchMode::kPermutation, 6, RngStream(9, 1));
  BatchSchedule b(BatchMode::kPermutation, 6, RngStream(9, 1));
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next().batch, b.next().batch);
}

TEST(Batching, Validation) {
  EXPECT_THROW(BatchSchedule(BatchMode::kIid, 0, RngStream(1, 0)), ConfigError);
  EXPECT_THROW(parse_batch_mode("cyclic"), ConfigError);
  EXPECT_EQ(parse_batch_mode("perm"), BatchMode::kPermutation);
  EXPECT_EQ(to_string(BatchMode::kIid), "iid");
}
