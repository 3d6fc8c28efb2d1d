#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace nlid {

// All randomness in the toolkit flows through this generator so that every
// seeded run is reproducible across platforms. std::mt19937_64 output is
// fully specified by the standard; the derived draws below avoid
// std::uniform_*_distribution, whose mapping is implementation-defined.
inline constexpr std::string_view kRngVersion = "nlid-rng-1";

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, n), unbiased via rejection.
  std::uint64_t bounded(std::uint64_t n);

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1], for draws fed into log().
  double uniform_open01() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double normal();                        // Box-Muller, two draws per call
  double gamma(double shape);             // Marsaglia-Tsang; shape > 0
  double beta(double a, double b);        // beta(0,0) degenerates to 1.0

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(bounded(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  // k distinct indices from [0, n), returned in increasing order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 gen_;
};

}  // namespace nlid
