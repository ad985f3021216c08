#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <thread>
#include <vector>

namespace twistdn {

// Deterministic uniform and Gaussian draws on top of the standardized
// mt19937_64 stream (std::normal_distribution is implementation-defined, so
// reproducible outputs roll their own Box-Muller).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() {  // in [0, 1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 6.28318530717958647692 * u2;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Number of worker threads: explicit request, else TWISTDN_THREADS, else
// hardware concurrency.
int resolve_threads(int requested);

// Runs fn(i) for i in [0, n) on `threads` workers. Tasks write to disjoint
// slots, so results are bitwise independent of the schedule. Exceptions are
// captured and rethrown on the caller thread.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace twistdn
