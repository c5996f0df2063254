#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace roaforge {

// Deterministic random stream. All doubles are produced from raw engine
// output, not from std distributions, so sequences are identical across
// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [0, n). Modulo bias is below 2^-40 for every n used here.
  int next_int(int n) { return static_cast<int>(gen_() % static_cast<std::uint64_t>(n)); }

  std::string save_state() const {
    std::ostringstream os;
    os << gen_;
    return os.str();
  }

  void restore_state(const std::string& s) {
    std::istringstream is(s);
    is >> gen_;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace roaforge
