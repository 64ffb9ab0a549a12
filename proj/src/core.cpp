#include "stickysim/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "stickysim/poisson.hpp"

namespace stickysim {

ParamReport validate_params(const SystemParams& params) {
  if (params.n < 1) throw ValidationError("n must be at least 1");
  auto require_positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ValidationError(std::string(name) + " must be positive and finite");
    }
  };
  require_positive(params.lambda, "lambda");
  require_positive(params.beta, "beta");
  require_positive(params.nu, "nu");
  require_positive(params.mu, "mu");

  ParamReport report;
  report.utilization = params.utilization();
  const double peak = std::ceil(params.rho()) * params.nu;
  report.stable = peak < params.mu;
  if (!report.stable) {
    std::ostringstream msg;
    msg << "ceil(rho)*nu = " << peak << " is not below mu = " << params.mu
        << "; packet queues at typical servers are overloaded";
    report.warnings.push_back(msg.str());
  }
  return report;
}

Threshold Threshold::finite(int value) {
  if (value < 0) throw ValidationError("threshold must be non-negative");
  Threshold t;
  t.value_ = value;
  return t;
}

int Threshold::value() const {
  if (!value_) throw std::logic_error("Threshold::value() on an unbounded threshold");
  return *value_;
}

std::string Threshold::to_string() const { return value_ ? std::to_string(*value_) : "inf"; }

namespace {

void check_pair(int l, const Threshold& h) {
  if (l < 0) throw ValidationError("low threshold l must be non-negative");
  if (h.is_finite() && h.value() <= l) throw ValidationError("high threshold h must exceed l");
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

void validate_scheme(const SchemeConfig& config) {
  std::visit(overloaded{
                 [](const scheme::PowerOfD& s) {
                   if (s.d < 1) throw ValidationError("d must be at least 1");
                 },
                 [](const scheme::PullBased& s) { check_pair(s.l, s.h); },
                 [](const scheme::Shedding& s) {
                   if (s.h.is_finite() && s.h.value() < 1) {
                     throw ValidationError("shedding threshold must be at least 1");
                   }
                 },
                 [](const scheme::TransferToInvite& s) {
                   check_pair(s.l, Threshold::finite(s.h));
                 },
                 [](const scheme::TransferToLeastLoaded& s) {
                   if (s.h < 1) throw ValidationError("h must be at least 1");
                 },
                 [](const scheme::BinBased& s) {
                   if (s.m < 1) throw ValidationError("bin count m must be at least 1");
                   check_pair(s.l, s.h);
                 },
             },
             config);
}

std::string scheme_name(const SchemeConfig& config) {
  return std::visit(
      overloaded{
          [](const scheme::PowerOfD& s) {
            return s.is_jsq() ? std::string("jsq") : "power-of-" + std::to_string(s.d);
          },
          [](const scheme::PullBased& s) {
            return "pull(l=" + std::to_string(s.l) + ",h=" + s.h.to_string() + ")";
          },
          [](const scheme::Shedding& s) { return "shedding(h=" + s.h.to_string() + ")"; },
          [](const scheme::TransferToInvite& s) {
            return "transfer-invite(l=" + std::to_string(s.l) + ",h=" + std::to_string(s.h) + ")";
          },
          [](const scheme::TransferToLeastLoaded& s) {
            return "transfer-least(h=" + std::to_string(s.h) + ")";
          },
          [](const scheme::BinBased& s) {
            return "bins(m=" + std::to_string(s.m) + ",l=" + std::to_string(s.l) +
                   ",h=" + s.h.to_string() + ")";
          },
      },
      config);
}

FlowDistribution::FlowDistribution(std::vector<double> pmf) : pmf_(std::move(pmf)) {
  if (pmf_.empty()) throw ValidationError("FlowDistribution: empty pmf");
  double total = 0.0;
  for (double p : pmf_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw ValidationError("FlowDistribution: probabilities must be finite and non-negative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw ValidationError("FlowDistribution: mass " + std::to_string(total) + " is not 1");
  }
}

FlowDistribution FlowDistribution::point_mass(std::size_t k) {
  std::vector<double> pmf(k + 1, 0.0);
  pmf[k] = 1.0;
  return FlowDistribution(std::move(pmf));
}

FlowDistribution FlowDistribution::from_tail(std::span<const double> tail) {
  return FlowDistribution(to_pmf(tail));
}

std::vector<double> to_tail(const FlowDistribution& dist) {
  const auto pmf = dist.pmf();
  std::vector<double> tail(pmf.size());
  double acc = 0.0;
  for (std::size_t i = pmf.size(); i-- > 0;) {
    acc += pmf[i];
    tail[i] = acc;
  }
  // s_0 is 1 by definition; the accumulated values differ only by rounding.
  tail[0] = 1.0;
  for (std::size_t i = 1; i < tail.size(); ++i) tail[i] = std::min(tail[i], tail[i - 1]);
  return tail;
}

std::vector<double> to_pmf(std::span<const double> tail) {
  std::vector<double> pmf(tail.size());
  for (std::size_t i = 0; i < tail.size(); ++i) {
    const double next = i + 1 < tail.size() ? tail[i + 1] : 0.0;
    pmf[i] = std::max(0.0, tail[i] - next);
  }
  return pmf;
}

double mean_occupancy(const FlowDistribution& dist) {
  double mean = 0.0;
  const auto pmf = dist.pmf();
  for (std::size_t i = 1; i < pmf.size(); ++i) mean += static_cast<double>(i) * pmf[i];
  return mean;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  const std::size_t len = std::max(p.size(), q.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double a = i < p.size() ? p[i] : 0.0;
    const double b = i < q.size() ? q[i] : 0.0;
    sum += std::abs(a - b);
  }
  return 0.5 * sum;
}

double total_variation(const FlowDistribution& p, const FlowDistribution& q) {
  return total_variation(p.pmf(), q.pmf());
}

std::size_t default_truncation(double rho, Threshold h) {
  auto base = static_cast<std::size_t>(std::ceil(rho + 12.0 * std::sqrt(rho)));
  if (h.is_finite()) base = std::max(base, static_cast<std::size_t>(h.value()));
  return std::max(base, poisson::tail_cutoff(rho, 0, 1e-16));
}

ChiDelayParams ChiDelayParams::make(double chi, const SystemParams& params) {
  if (!(chi >= 0.0)) throw ValidationError("chi must be non-negative");
  const double rho = params.rho();
  const double ratio = params.nu / params.mu;
  ChiDelayParams out;
  out.chi = chi;
  out.a_chi = rho * std::exp(chi * ratio);
  out.log_b_chi = -chi * (1.0 - ratio) + out.a_chi - rho;
  return out;
}

double ChiDelayParams::b_chi() const { return std::exp(log_b_chi); }

}  // namespace stickysim
