#include "nvqrng/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "nvqrng/errors.hpp"
#include "nvqrng/presets.hpp"
#include "numeric.hpp"

namespace nvqrng {

EmitterParams::EmitterParams(int n_emitters, double gamma1, double gamma2, double beta, double rho)
    : n_emitters_(n_emitters), gamma1_(gamma1), gamma2_(gamma2), beta_(beta), rho_(rho) {
  if (n_emitters < 1) {
    throw std::invalid_argument("EmitterParams: n_emitters must be >= 1");
  }
  if (!(gamma2 > 0.0) || !(gamma1 > gamma2) || !std::isfinite(gamma1)) {
    throw std::invalid_argument("EmitterParams: need gamma1 > gamma2 > 0");
  }
  if (!(beta >= 1.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("EmitterParams: beta must be >= 1");
  }
  if (!(rho > 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("EmitterParams: rho must lie in (0, 1]");
  }
}

EmitterParams EmitterParams::with_fixed_shelving_ratio(int n_emitters, double gamma, double beta,
                                                       double rho) {
  return EmitterParams(n_emitters, gamma, gamma / kShelvingRatio, beta, rho);
}

EmitterParams EmitterParams::with_n_emitters(int n) const {
  return EmitterParams(n, gamma1_, gamma2_, beta_, rho_);
}

EmitterParams EmitterParams::with_rho(double rho) const {
  return EmitterParams(n_emitters_, gamma1_, gamma2_, beta_, rho);
}

FluxSpec::FluxSpec(double lambda_per_ns) : lambda_per_emitter(lambda_per_ns) {
  if (!(lambda_per_ns > 0.0) || !std::isfinite(lambda_per_ns)) {
    throw std::invalid_argument("FluxSpec: lambda must be positive");
  }
}

void FluxSpec::check_against(const EmitterParams& params) const {
  if (!(lambda_per_emitter < params.gamma1())) {
    throw std::invalid_argument("FluxSpec: lambda must stay below gamma1");
  }
}

const RegionPreset& region_preset(int region) {
  if (region < 1 || region > static_cast<int>(kRegionPresets.size())) {
    throw std::out_of_range("region preset must be 1..5, got " + std::to_string(region));
  }
  return kRegionPresets[static_cast<std::size_t>(region - 1)];
}

double g2_model(double tau_ns, const EmitterParams& p) {
  const double t = std::abs(tau_ns);
  const double shape = p.beta() * std::exp(-p.gamma1() * t) -
                       (p.beta() - 1.0) * std::exp(-p.gamma2() * t);
  return 1.0 - p.rho() * p.rho() / p.n_emitters() * shape;
}

namespace {

// 2 (e^{-x} + x - 1) / x^2, which tends to 1 as x -> 0.
double interval_average_kernel(double x) {
  if (x < 1e-3) {
    return 1.0 - x / 3.0 + x * x / 12.0 - x * x * x / 60.0 + x * x * x * x / 360.0;
  }
  return 2.0 * (std::expm1(-x) + x) / (x * x);
}

}  // namespace

double g2_detected_zero(double t_ns, double gamma1, double gamma2, double beta, double rho) {
  if (!(t_ns > 0.0)) {
    throw std::domain_error("g2_detected_zero: interval must be positive");
  }
  if (!(gamma1 > 0.0) || !(gamma2 > 0.0) || !(beta >= 1.0) || !(rho >= 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("g2_detected_zero: invalid emitter parameters");
  }
  const double shape = beta * interval_average_kernel(gamma1 * t_ns) -
                       (beta - 1.0) * interval_average_kernel(gamma2 * t_ns);
  return 1.0 - rho * rho * shape;
}

double g2_detected_zero(double t_ns, const EmitterParams& p) {
  return g2_detected_zero(t_ns, p.gamma1(), p.gamma2(), p.beta(), p.rho());
}

PhotonNumberDist photon_number_single(double t_ns, const FluxSpec& flux,
                                      const EmitterParams& params) {
  if (!(t_ns > 0.0)) {
    throw std::domain_error("photon_number_single: interval must be positive");
  }
  flux.check_against(params);
  if (!(params.gamma1() * t_ns < kShortIntervalLimit)) {
    std::ostringstream msg;
    msg << "photon_number_single: gamma1*t = " << params.gamma1() * t_ns
        << " violates the short-interval limit " << kShortIntervalLimit;
    throw ModelValidityError(msg.str());
  }
  const double mu = flux.lambda_per_emitter * t_ns;
  if (!(mu < 1.0)) {
    throw ModelValidityError("photon_number_single: mean photon number must be < 1");
  }
  const double g = g2_detected_zero(t_ns, params);
  PhotonNumberDist d;
  d.interval_ns = t_ns;
  d.p2 = 0.5 * mu * mu * g;
  d.p1 = mu - mu * mu * g;
  d.p_any = d.p1 + d.p2;
  d.p0 = 1.0 - d.p_any;
  for (double p : {d.p0, d.p1, d.p2}) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ModelValidityError("photon_number_single: probability outside [0, 1]");
    }
  }
  return d;
}

namespace {

constexpr int kDirectLimit = 30;

// Number of ways to choose which emitters emit 0, 1, 2 photons. Exact in
// double for N <= 30.
double trinomial_coefficient(int n_emitters, int ones, int twos) {
  double c = 1.0;
  for (int i = 1; i <= twos; ++i) {
    c = c * (n_emitters - twos + i) / i;
  }
  const int rest = n_emitters - twos;
  for (int i = 1; i <= ones; ++i) {
    c = c * (rest - ones + i) / i;
  }
  return c;
}

long double safe_log(double p) {
  return p > 0.0 ? std::log(static_cast<long double>(p))
                 : -std::numeric_limits<long double>::infinity();
}

class TrinomialEvaluator {
 public:
  TrinomialEvaluator(int n_emitters, const PhotonNumberDist& d)
      : n_(n_emitters), d_(d) {
    if (n_emitters < 1) {
      throw std::invalid_argument("photon_number_multi: need at least one emitter");
    }
    if (n_ > kDirectLimit) {
      // Extended precision: lgamma(N+1) reaches ~1e5 at N = 1e4 and the
      // terms cancel down to O(1).
      log_fact_.resize(static_cast<std::size_t>(n_) + 1);
      for (int i = 0; i <= n_; ++i) {
        log_fact_[static_cast<std::size_t>(i)] = std::lgamma(static_cast<long double>(i) + 1.0L);
      }
      log_p0_ = std::log1p(-static_cast<long double>(d.p_any));
      log_p1_ = safe_log(d.p1);
      log_p2_ = safe_log(d.p2);
    }
  }

  double operator()(int n) const {
    if (n < 0 || n > 2 * n_) {
      return 0.0;
    }
    const int k_lo = std::max(0, n - n_);
    const int k_hi = n / 2;
    return n_ <= kDirectLimit ? direct(n, k_lo, k_hi) : log_domain(n, k_lo, k_hi);
  }

 private:
  double direct(int n, int k_lo, int k_hi) const {
    detail::CompensatedSum sum;
    for (int k = k_lo; k <= k_hi; ++k) {
      const int zeros = n_ - n + k;
      const int ones = n - 2 * k;
      sum.add(trinomial_coefficient(n_, ones, k) * std::pow(d_.p0, zeros) *
              std::pow(d_.p1, ones) * std::pow(d_.p2, k));
    }
    return sum.value();
  }

  long double term_log(int n, int k) const {
    const int zeros = n_ - n + k;
    const int ones = n - 2 * k;
    const auto lf = [this](int i) { return log_fact_[static_cast<std::size_t>(i)]; };
    long double l = lf(n_) - lf(zeros) - lf(ones) - lf(k);
    if (zeros > 0) l += zeros * log_p0_;
    if (ones > 0) l += ones * log_p1_;
    if (k > 0) l += k * log_p2_;
    return l;
  }

  double log_domain(int n, int k_lo, int k_hi) const {
    long double peak = -std::numeric_limits<long double>::infinity();
    for (int k = k_lo; k <= k_hi; ++k) {
      peak = std::max(peak, term_log(n, k));
    }
    if (!std::isfinite(peak)) {
      return 0.0;
    }
    detail::CompensatedSum sum;
    for (int k = k_lo; k <= k_hi; ++k) {
      sum.add(static_cast<double>(std::exp(term_log(n, k) - peak)));
    }
    return static_cast<double>(static_cast<long double>(sum.value()) * std::exp(peak));
  }

  int n_;
  PhotonNumberDist d_;
  std::vector<long double> log_fact_;
  long double log_p0_ = 0.0L;
  long double log_p1_ = 0.0L;
  long double log_p2_ = 0.0L;
};

}  // namespace

double photon_number_multi(int n, int n_emitters, const PhotonNumberDist& single) {
  if (n < 0) {
    throw std::invalid_argument("photon_number_multi: n must be >= 0");
  }
  return TrinomialEvaluator(n_emitters, single)(n);
}

double photon_number_multi(int n, double t_ns, const FluxSpec& flux,
                           const EmitterParams& params) {
  return photon_number_multi(n, params.n_emitters(), photon_number_single(t_ns, flux, params));
}

std::vector<double> photon_number_multi_distribution(int n_emitters,
                                                     const PhotonNumberDist& single) {
  const TrinomialEvaluator eval(n_emitters, single);
  std::vector<double> out(static_cast<std::size_t>(2 * n_emitters) + 1);
  for (int n = 0; n <= 2 * n_emitters; ++n) {
    out[static_cast<std::size_t>(n)] = eval(n);
  }
  return out;
}

double photon_number_multi_nonzero(int n_emitters, const PhotonNumberDist& single) {
  const TrinomialEvaluator eval(n_emitters, single);
  detail::CompensatedSum sum;
  for (int n = 1; n <= 2 * n_emitters; ++n) {
    sum.add(eval(n));
  }
  return sum.value();
}

}  // namespace nvqrng
