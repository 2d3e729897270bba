#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "critbranch/errors.hpp"
#include "critbranch/rng.hpp"

namespace critbranch::models {

// Walker alias table over a finite weight vector.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(const std::vector<double>& weights);
  std::size_t sample(Rng& rng) const {
    const std::size_t i = static_cast<std::size_t>(rng.uniform_below(prob_.size()));
    return rng.uniform() <= prob_[i] ? i : alias_[i];
  }
  bool empty() const { return prob_.empty(); }

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

// Rejection sampler for a pmf with a regularly varying tail: proposes
// k = floor(X), X Pareto on [k0+1, inf) with tail exponent `index`, and
// accepts against the exact pmf. Used for counts beyond the alias head.
struct ParetoTailSampler {
  double index = 1.0;       // envelope: P(X > x) = (x/base)^{-index}
  std::uint64_t base = 1;   // support is k >= base
  double total = 0.0;       // pmf mass of the tail
  double bound = 1.0;       // domination constant M
  double (*pmf)(const void*, std::uint64_t) = nullptr;
  const void* ctx = nullptr;

  double envelope(std::uint64_t k) const;
  std::uint64_t sample(Rng& rng) const;
};

// Offspring count law with generating function
//   h(s) = 1 - m (1 - s) + c (1 - s)^{1+alpha},
// the canonical representative of the heavy-tailed critical family. m = 1
// gives p0 = c, p1 = 1 - c(1+alpha), p_k = c (-1)^k binom(1+alpha, k); the
// tail is p_k ~ c k^{-(2+alpha)} / Gamma(-1-alpha), so the variance is
// infinite for alpha < 1. m > 1 is used where boundary killing must be
// balanced. Validity (all p_k >= 0) requires m - 1 <= c <= m/(1+alpha).
class SlackOffspring {
 public:
  SlackOffspring(double alpha, double c, double mean = 1.0);

  double alpha() const { return alpha_; }
  double coeff() const { return c_; }
  double mean() const { return mean_; }

  double pgf(double s) const;                  // h(s), exact
  double pmf(std::uint64_t k) const;           // exact via log-gamma
  double tail_mass(std::uint64_t k) const;     // P(N > k), closed form, k >= 1
  double tail_mean(std::uint64_t k) const;     // sum_{j>k} j p_j, closed form, k >= 1
  // E[N (N-1)^delta]; throws Diverges when delta >= alpha (and alpha < 1)
  double moment_n_nm1_delta(double delta) const;

  std::uint64_t sample(Rng& rng) const;
  // size-biased law k p_k / m (the spine's offspring count)
  std::uint64_t sample_size_biased(Rng& rng) const;

  std::uint64_t head_size() const { return head_size_; }

 private:
  void build_samplers();

  double alpha_, c_, mean_;
  double log_gamma_neg_;  // log Gamma(-1-alpha), Gamma(-1-alpha) > 0 on (0,1)
  std::uint64_t head_size_ = 0;
  AliasTable head_, head_sb_;
  ParetoTailSampler tail_, tail_sb_;
  bool has_tail_ = false;
};

// Explicit finite-support count law p_0..p_K.
class FiniteSupportLaw {
 public:
  explicit FiniteSupportLaw(std::vector<double> pmf);

  double mean() const { return mean_; }
  double pgf(double s) const;
  double pmf(std::uint64_t k) const { return k < pmf_.size() ? pmf_[k] : 0.0; }
  std::uint64_t max_count() const { return pmf_.size() - 1; }
  double moment_n_nm1_delta(double delta) const;
  std::uint64_t sample(Rng& rng) const { return head_.sample(rng); }
  std::uint64_t sample_size_biased(Rng& rng) const { return head_sb_.sample(rng); }

 private:
  std::vector<double> pmf_;
  double mean_;
  AliasTable head_, head_sb_;
};

using CountLaw = std::variant<SlackOffspring, FiniteSupportLaw>;

double count_mean(const CountLaw& law);
double count_pgf(const CountLaw& law, double s);
double count_pmf(const CountLaw& law, std::uint64_t k);
double count_moment_n_nm1_delta(const CountLaw& law, double delta);
std::uint64_t count_sample(const CountLaw& law, Rng& rng);
std::uint64_t count_sample_size_biased(const CountLaw& law, Rng& rng);

}  // namespace critbranch::models
