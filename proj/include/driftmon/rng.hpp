#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace driftmon {

// mt19937_64 is bit-portable across standard libraries; the std distributions
// are not, so uniform/normal/bounded draws are generated here instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Decorrelated child stream, stable under any evaluation order of streams.
  static Rng split(std::uint64_t seed, std::uint64_t stream) {
    return Rng(mix64(seed ^ mix64(stream + 0x9e3779b97f4a7c15ull)));
  }

  std::uint64_t next_u64() { return gen_(); }

  double uniform() {  // [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * uniform();
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Unbiased draw from [0, n); rejection keeps the modulus artifact-free.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~0ull - ~0ull % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

  static std::uint64_t mix64(std::uint64_t z) {  // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace driftmon
