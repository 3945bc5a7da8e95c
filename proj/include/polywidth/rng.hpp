#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace polywidth {

// Deterministic random-number source for seeded experiments. The generator is
// the standardized mt19937_64; uniform and Gaussian variates are derived with
// explicit arithmetic (not std::uniform_real_distribution /
// std::normal_distribution, whose output is implementation-defined), so a
// fixed seed yields the same stream everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u = 1.0 - uniform01();  // in (0, 1], keeps log finite
    const double r = std::sqrt(-2.0 * std::log(u));
    const double theta = 2.0 * M_PI * uniform01();
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace polywidth
