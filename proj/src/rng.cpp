#include "loconav/rng.hpp"

namespace loconav {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x00000100000001b3ULL;
  }
  return hash;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view episode_id, std::uint64_t trial) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ fnv1a64(episode_id));
  h = splitmix64(h ^ splitmix64(trial + 0x632be59bd9b4e019ULL));
  return h;
}

Rng seed_rng(std::uint64_t seed, std::string_view episode_id, std::uint64_t trial) {
  return Rng(derive_seed(seed, episode_id, trial));
}

Rng substream(std::uint64_t parent_seed, std::string_view label) {
  return Rng(splitmix64(parent_seed ^ fnv1a64(label)));
}

double gaussian(Rng& rng, double sigma) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return sigma * dist(rng);
}

double uniform01(Rng& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

EpisodeStreams EpisodeStreams::from_seed(std::uint64_t episode_seed) {
  return {substream(episode_seed, "actuation"), substream(episode_seed, "odometry"),
          substream(episode_seed, "depth")};
}

}  // namespace loconav
