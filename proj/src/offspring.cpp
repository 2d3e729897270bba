#include "critbranch/offspring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace critbranch::models {

namespace {

constexpr std::uint64_t kHead = 4096;         // alias head for plain counts
constexpr std::uint64_t kHeadSizeBiased = 8192;
constexpr std::uint64_t kMomentTerms = 1 << 20;  // direct summation range for moments

}  // namespace

AliasTable::AliasTable(const std::vector<double>& weights) {
  const std::size_t n = weights.size();
  require(n > 0, Errc::DomainError, "alias table needs at least one weight");
  double total = 0.0;
  for (double w : weights) {
    require(w >= 0.0 && std::isfinite(w), Errc::DomainError, "alias weights must be >= 0");
    total += w;
  }
  require(total > 0.0, Errc::DomainError, "alias weights must not all vanish");
  prob_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  for (std::size_t i = 0; i < n; ++i) scaled[i] = weights[i] * static_cast<double>(n) / total;
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < n; ++i) (scaled[i] < 1.0 ? small : large).push_back(i);
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back(), l = large.back();
    small.pop_back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] -= 1.0 - scaled[s];
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (std::size_t i : large) prob_[i] = 1.0;
  for (std::size_t i : small) prob_[i] = 1.0;
}

double ParetoTailSampler::envelope(std::uint64_t k) const {
  const double b = static_cast<double>(base);
  return std::pow(static_cast<double>(k) / b, -index) -
         std::pow(static_cast<double>(k + 1) / b, -index);
}

std::uint64_t ParetoTailSampler::sample(Rng& rng) const {
  const double b = static_cast<double>(base);
  for (;;) {
    const double x = b * std::pow(rng.uniform(), -1.0 / index);
    if (x > 4.0e18) continue;  // beyond any population cap; resample
    const std::uint64_t k = static_cast<std::uint64_t>(x);
    if (k < base) continue;  // floor landed on the boundary
    const double accept = pmf(ctx, k) / (total * bound * envelope(k));
    if (accept > 1.0 + 1e-9)
      fail(Errc::DomainError, "tail envelope domination violated at k=" + std::to_string(k));
    if (rng.uniform() <= accept) return k;
  }
}

SlackOffspring::SlackOffspring(double alpha, double c, double mean)
    : alpha_(alpha), c_(c), mean_(mean) {
  require(alpha > 0.0 && alpha <= 1.0, Errc::DomainError, "slack offspring: alpha in (0,1]");
  require(c > 0.0, Errc::DomainError, "slack offspring: c > 0");
  // p0 = 1 - m + c >= 0 and p1 = m - c(1+alpha) >= 0
  require(mean <= 1.0 + c + 1e-15, Errc::DomainError,
          "slack offspring: mean must be <= 1 + c (p0 >= 0)");
  require(c * (1.0 + alpha) <= mean + 1e-15, Errc::DomainError,
          "slack offspring: need c <= mean/(1+alpha) (p1 >= 0)");
  log_gamma_neg_ = alpha < 1.0 ? std::lgamma(-1.0 - alpha) : 0.0;
  build_samplers();

  // constructor postconditions: table + analytic remainder sum to 1 and to
  // the mean, to 1e-12
  double sum = 0.0, first = 0.0;
  for (std::uint64_t k = 0; k <= kHead; ++k) {
    const double p = pmf(k);
    sum += p;
    first += static_cast<double>(k) * p;
  }
  sum += tail_mass(kHead);
  first += tail_mean(kHead);
  require(std::fabs(sum - 1.0) < 1e-12, Errc::DomainError, "slack pmf does not sum to 1");
  require(std::fabs(first - mean_) < 1e-10, Errc::DomainError,
          "slack pmf mean does not match the prescribed mean");
}

double SlackOffspring::pgf(double s) const {
  require(s >= 0.0 && s <= 1.0, Errc::DomainError, "pgf argument outside [0,1]");
  return 1.0 - mean_ * (1.0 - s) + c_ * std::pow(1.0 - s, 1.0 + alpha_);
}

double SlackOffspring::pmf(std::uint64_t k) const {
  if (k == 0) return 1.0 - mean_ + c_;
  if (k == 1) return std::max(0.0, mean_ - c_ * (1.0 + alpha_));
  if (alpha_ >= 1.0) return k == 2 ? c_ : 0.0;
  // p_k = c Gamma(k-1-alpha) / (Gamma(-1-alpha) Gamma(k+1)), k >= 2
  return c_ * std::exp(std::lgamma(static_cast<double>(k) - 1.0 - alpha_) -
                       std::lgamma(static_cast<double>(k) + 1.0) - log_gamma_neg_);
}

double SlackOffspring::tail_mass(std::uint64_t k) const {
  require(k >= 1, Errc::DomainError, "tail_mass needs k >= 1");
  if (alpha_ >= 1.0) return k >= 2 ? 0.0 : c_;
  // sum_{j>k} p_j = c alpha Gamma(k-alpha) / (Gamma(1-alpha) Gamma(k+1))
  return c_ * alpha_ *
         std::exp(std::lgamma(static_cast<double>(k) - alpha_) - std::lgamma(1.0 - alpha_) -
                  std::lgamma(static_cast<double>(k) + 1.0));
}

double SlackOffspring::tail_mean(std::uint64_t k) const {
  require(k >= 1, Errc::DomainError, "tail_mean needs k >= 1");
  if (alpha_ >= 1.0) return k >= 2 ? 0.0 : 2.0 * c_;
  // sum_{j>k} j p_j = c (1+alpha) Gamma(k-alpha) / (Gamma(1-alpha) Gamma(k))
  return c_ * (1.0 + alpha_) *
         std::exp(std::lgamma(static_cast<double>(k) - alpha_) - std::lgamma(1.0 - alpha_) -
                  std::lgamma(static_cast<double>(k)));
}

double SlackOffspring::moment_n_nm1_delta(double delta) const {
  require(delta > 0.0 && delta < 1.0, Errc::DomainError, "delta must lie in (0,1)");
  if (alpha_ < 1.0 && delta >= alpha_)
    fail(Errc::Diverges, "sum_k k (k-1)^delta p_k diverges: delta >= alpha");
  double sum = 0.0;
  double p = pmf(2);
  for (std::uint64_t k = 2; k <= kMomentTerms; ++k) {
    sum += static_cast<double>(k) * std::pow(static_cast<double>(k - 1), delta) * p;
    // ratio p_{k+1}/p_k = (k-1-alpha)/(k+1)
    p *= (static_cast<double>(k) - 1.0 - alpha_) / (static_cast<double>(k) + 1.0);
    if (alpha_ >= 1.0 && k >= 2) p = 0.0;
  }
  if (alpha_ < 1.0) {
    // tail: sum_{k>K} k^{1+delta} p_k ~ (c/Gamma(-1-alpha)) K^{delta-alpha}/(alpha-delta)
    const double K = static_cast<double>(kMomentTerms);
    sum += c_ / std::exp(log_gamma_neg_) * std::pow(K, delta - alpha_) / (alpha_ - delta);
  }
  return sum;
}

void SlackOffspring::build_samplers() {
  // plain counts: alias head over 0..kHead plus one tail outcome
  {
    std::vector<double> w(kHead + 2);
    for (std::uint64_t k = 0; k <= kHead; ++k) w[k] = pmf(k);
    const double tmass = alpha_ < 1.0 ? tail_mass(kHead) : 0.0;
    w[kHead + 1] = tmass;
    head_ = AliasTable(w);
    head_size_ = kHead;
    has_tail_ = tmass > 0.0;
    if (has_tail_) {
      tail_.index = 1.0 + alpha_;
      tail_.base = kHead + 1;
      tail_.total = tmass;
      tail_.ctx = this;
      tail_.pmf = [](const void* ctx, std::uint64_t k) {
        return static_cast<const SlackOffspring*>(ctx)->pmf(k);
      };
      // ratio pmf/(total*envelope) is decreasing in k; bound it at the base
      double m = 0.0;
      for (std::uint64_t k = tail_.base; k < tail_.base + 8; ++k)
        m = std::max(m, pmf(k) / (tmass * tail_.envelope(k)));
      tail_.bound = 1.05 * m;
    }
  }
  // size-biased counts k p_k / mean
  {
    std::vector<double> w(kHeadSizeBiased + 2);
    for (std::uint64_t k = 0; k <= kHeadSizeBiased; ++k)
      w[k] = static_cast<double>(k) * pmf(k) / mean_;
    const double tmass = alpha_ < 1.0 ? tail_mean(kHeadSizeBiased) / mean_ : 0.0;
    w[kHeadSizeBiased + 1] = tmass;
    head_sb_ = AliasTable(w);
    if (tmass > 0.0) {
      tail_sb_.index = alpha_;
      tail_sb_.base = kHeadSizeBiased + 1;
      tail_sb_.total = tmass;
      tail_sb_.ctx = this;
      tail_sb_.pmf = [](const void* ctx, std::uint64_t k) {
        const auto* self = static_cast<const SlackOffspring*>(ctx);
        return static_cast<double>(k) * self->pmf(k) / self->mean();
      };
      double m = 0.0;
      for (std::uint64_t k = tail_sb_.base; k < tail_sb_.base + 8; ++k)
        m = std::max(m, tail_sb_.pmf(this, k) / (tmass * tail_sb_.envelope(k)));
      tail_sb_.bound = 1.05 * m;
    }
  }
}

std::uint64_t SlackOffspring::sample(Rng& rng) const {
  const std::size_t k = head_.sample(rng);
  if (k <= kHead) return k;
  return tail_.sample(rng);
}

std::uint64_t SlackOffspring::sample_size_biased(Rng& rng) const {
  const std::size_t k = head_sb_.sample(rng);
  if (k <= kHeadSizeBiased) return k;
  return tail_sb_.sample(rng);
}

FiniteSupportLaw::FiniteSupportLaw(std::vector<double> pmf) : pmf_(std::move(pmf)) {
  require(!pmf_.empty(), Errc::DomainError, "finite-support law needs a pmf");
  double sum = 0.0;
  mean_ = 0.0;
  for (std::size_t k = 0; k < pmf_.size(); ++k) {
    require(pmf_[k] >= 0.0, Errc::DomainError, "finite-support pmf entries must be >= 0");
    sum += pmf_[k];
    mean_ += static_cast<double>(k) * pmf_[k];
  }
  require(std::fabs(sum - 1.0) < 1e-12, Errc::DomainError, "finite-support pmf must sum to 1");
  head_ = AliasTable(pmf_);
  require(mean_ > 0.0, Errc::DomainError, "finite-support law must be able to reproduce");
  std::vector<double> sb(pmf_.size());
  for (std::size_t k = 0; k < pmf_.size(); ++k) sb[k] = static_cast<double>(k) * pmf_[k] / mean_;
  head_sb_ = AliasTable(sb);
}

double FiniteSupportLaw::pgf(double s) const {
  require(s >= 0.0 && s <= 1.0, Errc::DomainError, "pgf argument outside [0,1]");
  double acc = 0.0;
  for (std::size_t k = pmf_.size(); k-- > 0;) acc = acc * s + pmf_[k];
  return acc;
}

double FiniteSupportLaw::moment_n_nm1_delta(double delta) const {
  require(delta > 0.0 && delta < 1.0, Errc::DomainError, "delta must lie in (0,1)");
  double sum = 0.0;
  for (std::size_t k = 2; k < pmf_.size(); ++k)
    sum += static_cast<double>(k) * std::pow(static_cast<double>(k - 1), delta) * pmf_[k];
  return sum;
}

double count_mean(const CountLaw& law) {
  return std::visit([](const auto& l) { return l.mean(); }, law);
}

double count_pgf(const CountLaw& law, double s) {
  return std::visit([s](const auto& l) { return l.pgf(s); }, law);
}

double count_pmf(const CountLaw& law, std::uint64_t k) {
  return std::visit([k](const auto& l) { return l.pmf(k); }, law);
}

double count_moment_n_nm1_delta(const CountLaw& law, double delta) {
  return std::visit([delta](const auto& l) { return l.moment_n_nm1_delta(delta); }, law);
}

std::uint64_t count_sample(const CountLaw& law, Rng& rng) {
  return std::visit([&rng](const auto& l) { return l.sample(rng); }, law);
}

std::uint64_t count_sample_size_biased(const CountLaw& law, Rng& rng) {
  return std::visit([&rng](const auto& l) { return l.sample_size_biased(rng); }, law);
}

}  // namespace critbranch::models
