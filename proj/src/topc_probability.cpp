#include "recaudit/topc_probability.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/core.h>

namespace recaudit {

namespace {

void check_domain(std::uint64_t n, std::uint64_t r, std::uint64_t s, std::uint64_t c) {
  if (r < 1 || r > n) throw std::invalid_argument(fmt::format("rank {} outside [1, {}]", r, n));
  if (s < 1 || s + 1 > n) throw std::invalid_argument(fmt::format("samples {} outside [1, {}]", s, n - 1));
  if (c < 1) throw std::invalid_argument("cutoff must be >= 1");
}

// Admissible i: at least s - (n - r) negatives must come from above the target.
struct TermRange {
  std::uint64_t lo;
  std::uint64_t hi;  // inclusive
  bool empty;
};

TermRange term_range(std::uint64_t n, std::uint64_t r, std::uint64_t s, std::uint64_t c) {
  const std::uint64_t below = n - r;
  const std::uint64_t lo = s > below ? s - below : 0;
  const std::uint64_t hi = std::min({c - 1, r - 1, s});
  return {lo, hi, lo > hi};
}

mpz_class binomial(std::uint64_t n, std::uint64_t k) {
  mpz_class out;
  mpz_bin_uiui(out.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
  return out;
}

mpq_class exact_probability(std::uint64_t n, std::uint64_t r, std::uint64_t s, std::uint64_t c) {
  check_domain(n, r, s, c);
  const TermRange range = term_range(n, r, s, c);
  if (range.empty) return mpq_class(0);
  mpz_class numerator = 0;
  for (std::uint64_t i = range.lo; i <= range.hi; ++i) numerator += binomial(r - 1, i) * binomial(n - r, s - i);
  mpq_class p(numerator, binomial(n - 1, s));
  p.canonicalize();
  return p;
}

long double log_binomial(std::uint64_t n, std::uint64_t k) {
  return std::lgamma(static_cast<long double>(n) + 1.0L) - std::lgamma(static_cast<long double>(k) + 1.0L) -
         std::lgamma(static_cast<long double>(n - k) + 1.0L);
}

}  // namespace

double sampled_topc_probability(std::uint64_t catalog, std::uint64_t rank, std::uint64_t samples,
                                std::uint64_t cutoff) {
  return exact_probability(catalog, rank, samples, cutoff).get_d();
}

std::string sampled_topc_probability_fraction(std::uint64_t catalog, std::uint64_t rank, std::uint64_t samples,
                                              std::uint64_t cutoff) {
  return exact_probability(catalog, rank, samples, cutoff).get_str();
}

double sampled_topc_probability_log(std::uint64_t catalog, std::uint64_t rank, std::uint64_t samples,
                                    std::uint64_t cutoff) {
  check_domain(catalog, rank, samples, cutoff);
  const TermRange range = term_range(catalog, rank, samples, cutoff);
  if (range.empty) return 0.0;
  const long double denom = log_binomial(catalog - 1, samples);
  std::vector<long double> terms;
  terms.reserve(range.hi - range.lo + 1);
  long double peak = -std::numeric_limits<long double>::infinity();
  for (std::uint64_t i = range.lo; i <= range.hi; ++i) {
    const long double t = log_binomial(rank - 1, i) + log_binomial(catalog - rank, samples - i) - denom;
    terms.push_back(t);
    peak = std::max(peak, t);
  }
  long double sum = 0.0L;
  for (long double t : terms) sum += std::exp(t - peak);
  const long double p = std::exp(peak + std::log(sum));
  return static_cast<double>(std::min(p, 1.0L));
}

std::uint64_t max_rank_with_probability(std::uint64_t catalog, std::uint64_t samples, std::uint64_t cutoff,
                                        double p) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("probability must be in (0, 1]");
  check_domain(catalog, 1, samples, cutoff);
  const mpq_class threshold(p);
  auto meets = [&](std::uint64_t r) { return exact_probability(catalog, r, samples, cutoff) >= threshold; };
  // P(1) = 1 always; the probability is non-increasing in rank.
  std::uint64_t lo = 1;
  std::uint64_t hi = catalog;
  if (meets(hi)) return hi;
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (meets(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (lo > 1 && exact_probability(catalog, lo - 1, samples, cutoff) < exact_probability(catalog, lo, samples, cutoff)) {
    throw std::logic_error("sampled top-c probability is not monotone in rank");
  }
  return lo;
}

}  // namespace recaudit
