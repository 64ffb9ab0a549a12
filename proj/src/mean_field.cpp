#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "stickysim/mean_field.hpp"

namespace stickysim::mean_field {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

// Read-only view of a tail with s_i = 1 for i < 0 and 0 beyond the end.
class TailView {
 public:
  explicit TailView(std::span<const double> s) : s_(s) {}

  [[nodiscard]] long size() const { return static_cast<long>(s_.size()); }
  [[nodiscard]] double at(long i) const {
    if (i <= 0) return 1.0;
    return i < size() ? s_[static_cast<std::size_t>(i)] : 0.0;
  }
  [[nodiscard]] double p(long i) const { return std::max(0.0, at(i) - at(i + 1)); }
  [[nodiscard]] bool one(long i) const { return at(i) >= 1.0 - kUnitTolerance; }

  // m = min{i : s_{i+1} < 1}
  [[nodiscard]] long min_level() const {
    long m = 0;
    while (m + 1 < size() && one(m + 1)) ++m;
    return m;
  }

 private:
  std::span<const double> s_;
};

class QWriter {
 public:
  explicit QWriter(std::span<double> q) : q_(q) { std::fill(q_.begin(), q_.end(), 0.0); }
  void set(long k, double v) {
    if (k >= 0 && k < static_cast<long>(q_.size())) q_[static_cast<std::size_t>(k)] = v;
  }
  [[nodiscard]] long size() const { return static_cast<long>(q_.size()); }

 private:
  std::span<double> q_;
};

// Every server has at least h flows: servers dropping to h-1 are refilled
// first, the remainder joins uniformly at random.
void fill_saturated(const TailView& s, long h, double rho, QWriter& q) {
  const double refill = static_cast<double>(h) * (1.0 - s.at(h + 1));
  if (rho <= refill) {
    q.set(h - 1, 1.0);
    return;
  }
  q.set(h - 1, refill / rho);
  const double rest = 1.0 - refill / rho;
  for (long i = h + 1; i <= q.size(); ++i) q.set(i - 1, rest * s.p(i - 1));
}

void q_power_of_d_impl(const TailView& s, int d, QWriter& q) {
  for (long k = 0; k < q.size(); ++k) {
    q.set(k, std::pow(s.at(k), d) - std::pow(s.at(k + 1), d));
  }
}

void q_join_shortest_impl(const TailView& s, double rho, QWriter& q) {
  const long m = s.min_level();
  const double refill = static_cast<double>(m) * (1.0 - s.at(m + 1));
  if (m >= 1 && rho <= refill) {
    q.set(m - 1, 1.0);
    return;
  }
  q.set(m - 1, refill / rho);
  q.set(m, 1.0 - refill / rho);
}

void q_pull_impl(const TailView& s, int l, Threshold h, double rho, QWriter& q) {
  if (l >= 1 && !s.one(l)) {
    const double denom = 1.0 - s.at(l);
    for (long i = 1; i <= l; ++i) q.set(i - 1, s.p(i - 1) / denom);
    return;
  }
  const long top = h.is_finite() ? h.value() : q.size();
  if (h.is_finite() && s.one(top)) {
    fill_saturated(s, top, rho, q);
    return;
  }
  const double invites = static_cast<double>(l) * (1.0 - s.at(l + 1));
  if (l >= 1 && rho <= invites) {
    q.set(l - 1, 1.0);
    return;
  }
  double rest = 1.0;
  if (l >= 1) {
    q.set(l - 1, invites / rho);
    rest -= invites / rho;
  }
  const double denom = 1.0 - (h.is_finite() ? s.at(top) : 0.0);
  for (long i = l + 1; i <= top; ++i) q.set(i - 1, rest * s.p(i - 1) / denom);
}

void q_shedding_impl(const TailView& s, Threshold h, QWriter& q) {
  const long top = h.is_finite() ? std::min<long>(h.value(), q.size()) : q.size();
  for (long i = 1; i <= top; ++i) q.set(i - 1, s.p(i - 1));
}

void q_transfer_invite_impl(const TailView& s, int l, int h, double rho, QWriter& q) {
  const double sh = s.at(h);
  if (l >= 1 && !s.one(l)) {
    const double sl = s.at(l);
    const double boost = (1.0 - sl + sh) / (1.0 - sl);
    for (long i = 1; i <= l; ++i) q.set(i - 1, s.p(i - 1) * boost);
    for (long i = l + 1; i <= h; ++i) q.set(i - 1, s.p(i - 1));
    return;
  }
  if (s.one(h)) {
    fill_saturated(s, h, rho, q);
    return;
  }
  const double invites = static_cast<double>(l) * (1.0 - s.at(l + 1));
  if (rho * sh <= invites) {
    if (l >= 1) q.set(l - 1, sh);
    for (long i = l + 1; i <= h; ++i) q.set(i - 1, s.p(i - 1));
    return;
  }
  if (l >= 1) q.set(l - 1, invites / rho);
  const double boost = 1.0 + (sh - invites / rho) / (1.0 - sh);
  for (long i = l + 1; i <= h; ++i) q.set(i - 1, s.p(i - 1) * boost);
}

void q_least_loaded_impl(const TailView& s, int h, double rho, QWriter& q) {
  const long m = s.min_level();
  const double refill = static_cast<double>(m) * (1.0 - s.at(m + 1));
  if (m >= h) {
    if (rho <= refill) {
      q.set(m - 1, 1.0);
    } else {
      q.set(m - 1, refill / rho);
      q.set(m, 1.0 - refill / rho);
    }
    return;
  }
  const double sh = s.at(h);
  if (rho * sh <= refill) {
    if (m >= 1) q.set(m - 1, sh);
    for (long i = m + 1; i <= h; ++i) q.set(i - 1, s.p(i - 1));
    return;
  }
  if (m >= 1) q.set(m - 1, refill / rho);
  q.set(m, sh + (1.0 - static_cast<double>(m) / rho) * (1.0 - s.at(m + 1)));
  for (long i = m + 2; i <= h; ++i) q.set(i - 1, s.p(i - 1));
}

AssignmentProbs run(const MeanFieldState& s, auto&& fill) {
  AssignmentProbs out;
  out.q.resize(s.size());
  QWriter writer(out.q);
  fill(TailView(s.tail()), writer);
  return out;
}

}  // namespace

MeanFieldState::MeanFieldState(std::vector<double> tail) : s_(std::move(tail)) {
  constexpr double tol = 1e-12;
  if (s_.empty() || std::abs(s_[0] - 1.0) > tol) throw ValidationError("tail must start at s_0 = 1");
  s_[0] = 1.0;
  for (std::size_t i = 1; i < s_.size(); ++i) {
    if (s_[i] < -tol || s_[i] > s_[i - 1] + tol) {
      throw ValidationError("tail must be non-increasing and non-negative");
    }
  }
}

MeanFieldState MeanFieldState::from_distribution(const FlowDistribution& dist, std::size_t i_max) {
  auto tail = to_tail(dist);
  tail.resize(std::max(i_max + 1, tail.size()), 0.0);
  return MeanFieldState(std::move(tail));
}

FlowDistribution MeanFieldState::to_distribution() const {
  auto pmf = to_pmf(s_);
  const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
  for (double& p : pmf) p /= total;
  return FlowDistribution(std::move(pmf));
}

double AssignmentProbs::total() const { return std::accumulate(q.begin(), q.end(), 0.0); }

AssignmentProbs q_power_of_d(const MeanFieldState& s, int d) {
  if (d < 1) throw ValidationError("d must be at least 1");
  return run(s, [d](const TailView& v, QWriter& w) { q_power_of_d_impl(v, d, w); });
}

AssignmentProbs q_join_shortest(const MeanFieldState& s, double rho) {
  return run(s, [rho](const TailView& v, QWriter& w) { q_join_shortest_impl(v, rho, w); });
}

AssignmentProbs q_pull_based(const MeanFieldState& s, int l, Threshold h, double rho) {
  validate_scheme(scheme::PullBased{l, h});
  return run(s, [&](const TailView& v, QWriter& w) { q_pull_impl(v, l, h, rho, w); });
}

AssignmentProbs q_shedding(const MeanFieldState& s, Threshold h) {
  return run(s, [&](const TailView& v, QWriter& w) { q_shedding_impl(v, h, w); });
}

AssignmentProbs q_transfer_to_invite(const MeanFieldState& s, int l, int h, double rho) {
  validate_scheme(scheme::TransferToInvite{l, h});
  return run(s, [&](const TailView& v, QWriter& w) { q_transfer_invite_impl(v, l, h, rho, w); });
}

AssignmentProbs q_transfer_to_least_loaded(const MeanFieldState& s, int h, double rho) {
  if (h < 1) throw ValidationError("h must be at least 1");
  return run(s, [&](const TailView& v, QWriter& w) { q_least_loaded_impl(v, h, rho, w); });
}

void assignment_probs_into(const SchemeConfig& scheme, std::span<const double> tail, double rho,
                           std::span<double> out) {
  const TailView s(tail);
  QWriter q(out);
  std::visit(overloaded{
                 [&](const scheme::PowerOfD& c) {
                   if (c.is_jsq()) {
                     q_join_shortest_impl(s, rho, q);
                   } else {
                     q_power_of_d_impl(s, c.d, q);
                   }
                 },
                 [&](const scheme::PullBased& c) { q_pull_impl(s, c.l, c.h, rho, q); },
                 [&](const scheme::Shedding& c) { q_shedding_impl(s, c.h, q); },
                 [&](const scheme::TransferToInvite& c) {
                   q_transfer_invite_impl(s, c.l, c.h, rho, q);
                 },
                 [&](const scheme::TransferToLeastLoaded& c) {
                   q_least_loaded_impl(s, c.h, rho, q);
                 },
                 [](const scheme::BinBased&) {
                   throw ValidationError("the bin-based scheme has no mean-field description");
                 },
             },
             scheme);
}

AssignmentProbs assignment_probs(const SchemeConfig& scheme, const MeanFieldState& s, double rho) {
  validate_scheme(scheme);
  AssignmentProbs out;
  out.q.resize(s.size());
  assignment_probs_into(scheme, s.tail(), rho, out.q);
  return out;
}

namespace {

class Integrator {
 public:
  Integrator(const SchemeConfig& scheme, const SystemParams& params, std::size_t len)
      : scheme_(scheme), params_(params), q_(len), work_(len) {}

  // Projects onto the valid tails in place: s_0 = 1, 0 <= s_{i+1} <= s_i.
  static void project(std::span<double> s) {
    s[0] = 1.0;
    for (std::size_t i = 1; i < s.size(); ++i) s[i] = std::clamp(s[i], 0.0, s[i - 1]);
  }

  // Largest violation of the tail constraints in an unprojected candidate.
  static double violation(std::span<const double> s) {
    double v = std::abs(s[0] - 1.0);
    for (std::size_t i = 1; i < s.size(); ++i) {
      v = std::max({v, s[i] - s[i - 1], -s[i]});
    }
    return v;
  }

  void rhs(std::span<const double> s_in, std::span<double> out) {
    std::copy(s_in.begin(), s_in.end(), work_.begin());
    project(work_);
    assignment_probs_into(scheme_, work_, params_.rho(), q_);
    const std::size_t len = work_.size();
    out[0] = 0.0;
    for (std::size_t i = 1; i < len; ++i) {
      const double next = i + 1 < len ? work_[i + 1] : 0.0;
      out[i] = params_.lambda * q_[i - 1] -
               static_cast<double>(i) * (work_[i] - next) / params_.beta;
    }
  }

  void rk4(std::span<const double> s, double dt, std::span<double> out) {
    const std::size_t len = s.size();
    k1_.resize(len);
    k2_.resize(len);
    k3_.resize(len);
    k4_.resize(len);
    stage_.resize(len);
    rhs(s, k1_);
    for (std::size_t i = 0; i < len; ++i) stage_[i] = s[i] + 0.5 * dt * k1_[i];
    rhs(stage_, k2_);
    for (std::size_t i = 0; i < len; ++i) stage_[i] = s[i] + 0.5 * dt * k2_[i];
    rhs(stage_, k3_);
    for (std::size_t i = 0; i < len; ++i) stage_[i] = s[i] + dt * k3_[i];
    rhs(stage_, k4_);
    for (std::size_t i = 0; i < len; ++i) {
      out[i] = s[i] + dt / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    }
  }

  double residual(std::span<const double> s) {
    k1_.resize(s.size());
    rhs(s, k1_);
    double r = 0.0;
    for (double x : k1_) r = std::max(r, std::abs(x));
    return r;
  }

 private:
  const SchemeConfig& scheme_;
  const SystemParams& params_;
  std::vector<double> q_, work_, k1_, k2_, k3_, k4_, stage_;
};

}  // namespace

std::vector<double> drift(const SchemeConfig& scheme, const SystemParams& params,
                          const MeanFieldState& s) {
  validate_scheme(scheme);
  Integrator integ(scheme, params, s.size());
  std::vector<double> out(s.size());
  integ.rhs(s.tail(), out);
  return out;
}

OdeResult integrate_ode(const SchemeConfig& scheme, const SystemParams& params,
                        const MeanFieldState& s0, double t_end, const OdeOptions& options) {
  validate_scheme(scheme);
  validate_params(params);
  const double dt = options.dt.value_or(1e-3 * params.beta);
  if (!(dt > 0.0)) throw ValidationError("integrate_ode: dt must be positive");

  Integrator integ(scheme, params, s0.size());
  std::vector<double> s(s0.tail().begin(), s0.tail().end());
  std::vector<double> cand(s.size());
  OdeResult result{s0, 0.0, 0, 0, 0.0, {}};

  double t = 0.0;
  double next_sample = 0.0;
  auto maybe_sample = [&] {
    if (options.sample_interval > 0.0 && t >= next_sample - 1e-12) {
      result.trajectory.emplace_back(t, MeanFieldState(s));
      next_sample += options.sample_interval;
    }
  };
  maybe_sample();

  constexpr std::size_t kResidualCheckEvery = 64;
  while (t < t_end - 1e-12 * t_end) {
    double step = std::min(dt, t_end - t);
    double v = 0.0;
    int halvings = 0;
    for (;; ++halvings) {
      integ.rk4(s, step, cand);
      v = Integrator::violation(cand);
      if (v <= options.projection_tolerance) break;
      if (halvings == options.max_halvings) {
        std::ostringstream msg;
        msg << "integrate_ode: step-size underflow at t=" << t << " (step " << step
            << "), tail monotonicity violated by " << v;
        throw NumericalError(msg.str());
      }
      step *= 0.5;
      ++result.rejected_steps;
    }
    Integrator::project(cand);
    s.swap(cand);
    t += step;
    ++result.steps;
    maybe_sample();
    if (options.stop_residual > 0.0 && result.steps % kResidualCheckEvery == 0 &&
        integ.residual(s) < options.stop_residual) {
      break;
    }
  }
  result.t = t;
  result.residual = integ.residual(s);
  result.terminal = MeanFieldState(std::move(s));
  return result;
}

double pod_upper_bound(double rho, int d, std::size_t i) {
  if (d < 1) throw ValidationError("d must be at least 1");
  if (!(rho > 0.0)) throw ValidationError("rho must be positive");
  const double k = std::floor(rho);
  if (static_cast<double>(i) <= k) return 1.0;
  const double j = static_cast<double>(i) - k;
  const double exponent = d == 1 ? j : (std::pow(static_cast<double>(d), j) - 1.0) / (d - 1.0);
  const double value = std::exp(exponent * std::log(rho / (k + 1.0)));
  return std::isfinite(value) ? value : 0.0;
}

}  // namespace stickysim::mean_field
