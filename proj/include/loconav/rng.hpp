#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace loconav {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a over the bytes of `text`; stable across platforms unlike std::hash.
std::uint64_t fnv1a64(std::string_view text);

/// Seed of the independent substream owned by one (episode, trial) pair.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view episode_id, std::uint64_t trial);

/// Deterministic generator for one episode trial. `run` and `serve` both derive
/// their streams here, so the same triple yields the same stream everywhere.
Rng seed_rng(std::uint64_t seed, std::string_view episode_id, std::uint64_t trial);

/// Child generator for a named channel (actuation, odometry, depth...).
Rng substream(std::uint64_t parent_seed, std::string_view label);

/// One standard-normal draw. A fresh distribution per call keeps the stream
/// position a pure function of the number of draws.
double gaussian(Rng& rng, double sigma);

double uniform01(Rng& rng);

/// Independent per-channel streams of one episode.
struct EpisodeStreams {
  Rng actuation;
  Rng odometry;
  Rng depth;

  static EpisodeStreams from_seed(std::uint64_t episode_seed);
};

}  // namespace loconav
