#pragma once

#include <cstdint>
#include <utility>

namespace screenlab::stats {

/// Regularized incomplete beta I_x(a, b), evaluated with Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);

/// x with I_x(a, b) = y. Newton steps on the continued fraction, falling back
/// to bisection whenever a step leaves the current bracket. Absolute tolerance 1e-12.
double inverse_incomplete_beta(double a, double b, double y);

double log_binomial_pmf(std::uint64_t k, std::uint64_t n, double p);

/// P[X >= k] for X ~ Binomial(n, p), summed term by term.
double binomial_upper_tail(std::uint64_t k, std::uint64_t n, double p);

/// Exact (Clopper-Pearson) two-sided interval for a binomial proportion.
std::pair<double, double> clopper_pearson(std::uint64_t successes, std::uint64_t n,
                                          double level = 0.95);

/// One-sided exact test that accuracy exceeds the no-information rate:
/// P[X >= successes | n, p = nir].
double nir_test(std::uint64_t successes, std::uint64_t n, double nir);

/// Upper confidence limit on the error rate of a leaf with `errors` misclassified
/// out of `n`, at confidence `cf` (C4.5's pessimistic estimate, U_CF(E, N)).
double pessimistic_error_rate(double errors, double n, double cf);

}  // namespace screenlab::stats
