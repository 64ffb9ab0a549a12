#pragma once

// Log-space Poisson helpers. Everything at rho = 150 is done in logs:
// rho^i / i! overflows a double well before i reaches the support.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace stickysim::poisson {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log f_rate(k) = k log(rate) - rate - log k!
double log_pmf(std::size_t k, double rate);

/// log of sum_{k=lo}^{hi} f_rate(k), summed smallest term first.
double log_range_mass(double rate, std::size_t lo, std::size_t hi);

/// log F_rate(k); -inf for k < 0.
double log_cdf(long k, double rate);

/// log(1 - F_rate(k)), summed directly from the upper tail.
double log_upper_tail(long k, double rate);

/// Numerically stable log(sum exp(x_i)). Terms are added smallest first.
double log_sum_exp(std::vector<double> terms);

/// Erlang-B blocking probability f_rate(c) / F_rate(c) via the standard
/// forward recursion.
double erlang_b(double rate, std::size_t capacity);

/// Smallest k >= lo such that the Poisson(rate) mass beyond k, relative to
/// the mass at the mode of [lo, inf), is below `rel_tol`.
std::size_t tail_cutoff(double rate, std::size_t lo, double rel_tol = 1e-17);

/// p_i proportional to rate^i / i! on [lo, hi], zero below lo; the vector
/// has hi + 1 entries. Use tail_cutoff to pick hi for an unbounded support.
/// rate == 0 yields a point mass at lo.
std::vector<double> truncated_pmf(double rate, std::size_t lo, std::size_t hi);

}  // namespace stickysim::poisson
