#include "stickysim/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stickysim::poisson {

double log_pmf(std::size_t k, double rate) {
  if (rate == 0.0) return k == 0 ? 0.0 : kNegInf;
  const auto kd = static_cast<double>(k);
  return kd * std::log(rate) - rate - std::lgamma(kd + 1.0);
}

double log_sum_exp(std::vector<double> terms) {
  std::erase_if(terms, [](double x) { return x == kNegInf; });
  if (terms.empty()) return kNegInf;
  std::sort(terms.begin(), terms.end());
  const double top = terms.back();
  double sum = 0.0;
  for (double x : terms) sum += std::exp(x - top);
  return top + std::log(sum);
}

double log_range_mass(double rate, std::size_t lo, std::size_t hi) {
  if (hi < lo) return kNegInf;
  std::vector<double> terms;
  terms.reserve(hi - lo + 1);
  for (std::size_t k = lo; k <= hi; ++k) terms.push_back(log_pmf(k, rate));
  return log_sum_exp(std::move(terms));
}

double log_cdf(long k, double rate) {
  if (k < 0) return kNegInf;
  return log_range_mass(rate, 0, static_cast<std::size_t>(k));
}

std::size_t tail_cutoff(double rate, std::size_t lo, double rel_tol) {
  if (rate <= 0.0) return lo;
  const auto mode = std::max<std::size_t>(lo, static_cast<std::size_t>(std::floor(rate)));
  const double log_peak = log_pmf(mode, rate);
  const double log_tol = std::log(rel_tol);
  std::size_t k = mode;
  for (;;) {
    const double ratio = rate / static_cast<double>(k + 1);
    // Beyond k the terms shrink at least geometrically with this ratio.
    if (ratio < 1.0 && log_pmf(k, rate) - log_peak < log_tol + std::log1p(-ratio)) return k;
    ++k;
  }
}

double log_upper_tail(long k, double rate) {
  const std::size_t start = k < 0 ? 0 : static_cast<std::size_t>(k) + 1;
  if (k < 0) return 0.0;
  return log_range_mass(rate, start, tail_cutoff(rate, start, 1e-18));
}

double erlang_b(double rate, std::size_t capacity) {
  if (rate < 0.0) throw std::invalid_argument("erlang_b: negative offered load");
  double b = 1.0;
  for (std::size_t c = 1; c <= capacity; ++c) {
    b = rate * b / (static_cast<double>(c) + rate * b);
  }
  return b;
}

std::vector<double> truncated_pmf(double rate, std::size_t lo, std::size_t hi) {
  if (hi < lo) throw std::invalid_argument("truncated_pmf: empty support");
  std::vector<double> pmf(hi + 1, 0.0);
  if (rate == 0.0) {
    pmf[lo] = 1.0;
    return pmf;
  }
  std::vector<double> logw;
  logw.reserve(hi - lo + 1);
  const double log_rate = std::log(rate);
  for (std::size_t k = lo; k <= hi; ++k) {
    const auto kd = static_cast<double>(k);
    logw.push_back(kd * log_rate - std::lgamma(kd + 1.0));
  }
  const double log_norm = log_sum_exp(logw);
  for (std::size_t k = lo; k <= hi; ++k) pmf[k] = std::exp(logw[k - lo] - log_norm);
  return pmf;
}

}  // namespace stickysim::poisson
