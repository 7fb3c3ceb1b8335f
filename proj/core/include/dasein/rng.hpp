#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dasein {

// Named substream derivation. Every stochastic component (init, shuffling,
// channel noise, evaluation draws) pulls from its own stream derived from the
// experiment seed, a label, and up to three counters, so streams stay
// independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t root, std::string_view label, std::uint64_t a = 0,
                          std::uint64_t b = 0, std::uint64_t c = 0);

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}

  static RngStream derive(std::uint64_t root, std::string_view label, std::uint64_t a = 0,
                          std::uint64_t b = 0, std::uint64_t c = 0) {
    return RngStream(derive_seed(root, label, a, b, c));
  }

  /// Standard normal draw.
  double gaussian() { return normal_(eng_); }
  /// Uniform draw in [0,1).
  double uniform() { return unit_(eng_); }
  /// Uniform draw in [-limit, limit].
  double uniform_sym(double limit) { return (2.0 * unit_(eng_) - 1.0) * limit; }
  /// Uniform integer in [0, bound).
  std::uint64_t integer(std::uint64_t bound) {
    std::uniform_int_distribution<std::uint64_t> d(0, bound - 1);
    return d(eng_);
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace dasein
