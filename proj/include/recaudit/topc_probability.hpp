#pragma once

#include <cstdint>
#include <string>

namespace recaudit {

// Probability that a target ranked `rank` in the full ranking of `catalog`
// items lands in the top `cutoff` when ranked against `samples` negatives drawn
// uniformly without replacement from the other catalog - 1 items:
//
//   sum_{i=0}^{cutoff-1} C(rank-1, i) C(catalog-rank, samples-i) / C(catalog-1, samples)
//
// Exact: big-integer binomials, one division at the end.
double sampled_topc_probability(std::uint64_t catalog, std::uint64_t rank, std::uint64_t samples,
                                std::uint64_t cutoff);

// The exact value as a reduced fraction "p/q" ("0" and "1" for the extremes).
std::string sampled_topc_probability_fraction(std::uint64_t catalog, std::uint64_t rank, std::uint64_t samples,
                                              std::uint64_t cutoff);

// Same quantity through log-gamma terms and log-sum-exp in long double.
double sampled_topc_probability_log(std::uint64_t catalog, std::uint64_t rank, std::uint64_t samples,
                                    std::uint64_t cutoff);

// Largest rank whose probability is >= p (compared exactly), p in (0, 1].
// Ranks above catalog - samples + cutoff - 1 have probability exactly zero.
std::uint64_t max_rank_with_probability(std::uint64_t catalog, std::uint64_t samples, std::uint64_t cutoff,
                                        double p);

}  // namespace recaudit
