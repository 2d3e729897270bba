#pragma once

#include <cmath>
#include <cstdint>

namespace critbranch {

// SplitMix64; used only to seed substreams.
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

// xoshiro256++ with substreams derived from (seed, stream). A replica's draws
// are a pure function of its stream index, so results do not depend on how
// replicas are assigned to threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) { reseed(seed, stream); }

  void reseed(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 sm(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    for (auto& w : s_) w = sm.next();
    has_cached_normal_ = false;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform on (0, 1]; never returns 0, so log() is safe
  double uniform() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  bool bernoulli(double p) { return uniform() <= p; }

  // standard normal, Marsaglia polar with one cached value
  double normal() {
    if (has_cached_normal_) {
      has_cached_normal_ = false;
      return cached_normal_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    cached_normal_ = v * f;
    has_cached_normal_ = true;
    return u * f;
  }

  // uniform integer in [0, n), Lemire's method
  std::uint64_t uniform_below(std::uint64_t n) {
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    std::uint64_t lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      std::uint64_t threshold = (-n) % n;
      while (lo < threshold) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4];
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

// exact Binomial(n, p) sample; inversion walk for small mean, BTRS otherwise
// (Hormann 1993, "The generation of binomial random variates")
inline std::uint64_t sample_binomial(Rng& rng, std::uint64_t n, double p) {
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  const bool flipped = p > 0.5;
  const double q = flipped ? 1.0 - p : p;
  std::uint64_t k;
  if (static_cast<double>(n) * q < 12.0) {
    // CDF walk from 0
    const double log1mq = std::log1p(-q);
    double pk = std::exp(static_cast<double>(n) * log1mq);  // P(X = 0)
    double cdf = pk;
    double u = rng.uniform();
    k = 0;
    const double r = q / (1.0 - q);
    while (u > cdf && k < n) {
      ++k;
      pk *= r * static_cast<double>(n - k + 1) / static_cast<double>(k);
      cdf += pk;
    }
  } else {
    // BTRS rejection from a shifted triangular-ish proposal
    const double nd = static_cast<double>(n);
    const double spq = std::sqrt(nd * q * (1.0 - q));
    const double b = 1.15 + 2.53 * spq;
    const double a = -0.0873 + 0.0248 * b + 0.01 * q;
    const double c = nd * q + 0.5;
    const double v_r = 0.92 - 4.2 / b;
    const double alpha = (2.83 + 5.1 / b) * spq;
    const double lpq = std::log(q / (1.0 - q));
    const std::uint64_t m = static_cast<std::uint64_t>((nd + 1.0) * q);
    const double h = std::lgamma(static_cast<double>(m) + 1.0) +
                     std::lgamma(nd - static_cast<double>(m) + 1.0);
    for (;;) {
      double u = rng.uniform() - 0.5;
      double v = rng.uniform();
      double us = 0.5 - std::fabs(u);
      double kd = std::floor((2.0 * a / us + b) * u + c);
      if (kd < 0.0 || kd > nd) continue;
      if (us >= 0.07 && v <= v_r) {
        k = static_cast<std::uint64_t>(kd);
        break;
      }
      v = std::log(v * alpha / (a / (us * us) + b));
      if (v <= h - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) +
                   (kd - static_cast<double>(m)) * lpq) {
        k = static_cast<std::uint64_t>(kd);
        break;
      }
    }
  }
  return flipped ? n - k : k;
}

}  // namespace critbranch
