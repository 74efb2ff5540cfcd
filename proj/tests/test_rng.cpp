#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "loconav/rng.hpp"

using namespace loconav;

TEST(Seeds, SameTripleSameStream) {
  Rng a = seed_rng(123, "A", 4);
  Rng b = seed_rng(123, "A", 4);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a(), b());
}

TEST(Seeds, TrialsDifferInFirstDrawAcrossThousandSeeds) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng t0 = seed_rng(seed, "A", 0);
    Rng t1 = seed_rng(seed, "A", 1);
    ASSERT_NE(t0(), t1()) << "seed " << seed;
  }
}

TEST(Seeds, DerivedSeedsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t seed = 0; seed < 50; ++seed)
    for (const char* id : {"A", "B", "C", "D", "E"})
      for (std::uint64_t trial = 0; trial < 20; ++trial) seen.insert(derive_seed(seed, id, trial));
  EXPECT_EQ(seen.size(), 50u * 5u * 20u);
}

TEST(Seeds, EpisodeIdMatters) { EXPECT_NE(derive_seed(1, "A", 0), derive_seed(1, "B", 0)); }

TEST(Seeds, KnownValues) {
  // Pins the derivation so logs stay replayable across releases.
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
}

TEST(Substreams, ChannelsAreIndependent) {
  EpisodeStreams s = EpisodeStreams::from_seed(77);
  EXPECT_NE(s.actuation(), s.odometry());
  EpisodeStreams again = EpisodeStreams::from_seed(77);
  again.actuation();
  EXPECT_EQ(s.depth(), again.depth());
}

TEST(Gaussian, MomentsMatch) {
  Rng rng(2024);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = gaussian(rng, 0.5);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.0, 0.005);
  EXPECT_NEAR(std::sqrt(sq / n - mean * mean), 0.5, 0.005);
}

TEST(Uniform, InUnitInterval) {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = uniform01(rng);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}
