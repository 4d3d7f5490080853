#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>

namespace fastwdm {

/// Seedable random stream: mt19937_64 for raw bits, 53-bit uniforms, Box-Muller normals
/// (both outputs of each pair are used). Reproducible for a given seed within one build.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal();
  void fill_normal(std::span<float> out);
  void fill_normal(std::span<double> out);

  // Independent child stream, e.g. one per concurrent task.
  SeededRng split() { return SeededRng(engine_() ^ 0x9E3779B97F4A7C15ULL); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace fastwdm
