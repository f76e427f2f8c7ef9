#pragma once

#include <cstdint>
#include <random>

namespace intentrec {

std::uint64_t splitmix64(std::uint64_t x);

/// Stream seed for sub-task `index` under a master seed. Every per-user and
/// per-step random stream in the project is derived through this function so
/// that regeneration is independent of call order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Deterministic random source. All sampling is implemented here instead of
/// the <random> distributions, whose output is implementation-defined; this
/// keeps generated files portable across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal();                       // standard normal (Box-Muller)
  int poisson(double mean);              // Knuth product method, small means
  std::size_t index(std::size_t n);      // unbiased uniform in [0, n)

private:
  std::mt19937_64 gen_;
};

}  // namespace intentrec
