#pragma once

#include <vector>

namespace nvqrng {

/// Lumped three-level emitter parameters shared by every photon-statistics
/// formula. Rates are in ns^-1.
class EmitterParams {
 public:
  /// Throws std::invalid_argument unless n_emitters >= 1, gamma1 > gamma2 > 0,
  /// beta >= 1 and 0 < rho <= 1.
  EmitterParams(int n_emitters, double gamma1, double gamma2, double beta, double rho);

  /// Sets gamma2 = gamma / 20, the shelving-decay approximation used for the
  /// fitted nanodiamond regions.
  static EmitterParams with_fixed_shelving_ratio(int n_emitters, double gamma, double beta,
                                                 double rho);

  static constexpr double kShelvingRatio = 20.0;

  int n_emitters() const noexcept { return n_emitters_; }
  double gamma1() const noexcept { return gamma1_; }
  double gamma2() const noexcept { return gamma2_; }
  double beta() const noexcept { return beta_; }
  double rho() const noexcept { return rho_; }

  EmitterParams with_n_emitters(int n) const;
  EmitterParams with_rho(double rho) const;

 private:
  int n_emitters_;
  double gamma1_;
  double gamma2_;
  double beta_;
  double rho_;
};

/// Mean detected photon flux per emitter, ns^-1.
struct FluxSpec {
  explicit FluxSpec(double lambda_per_ns);

  double lambda_per_emitter;

  /// Throws std::invalid_argument unless lambda < gamma1.
  void check_against(const EmitterParams& params) const;
};

/// Truncated photon-number distribution of one emitter over a short interval.
struct PhotonNumberDist {
  double p0 = 1.0;
  double p1 = 0.0;
  double p2 = 0.0;
  /// p1 + p2, kept separately because p0 sits within 1e-6 of one at
  /// typical fluxes and 1 - p0 would lose most of its digits.
  double p_any = 0.0;
  double interval_ns = 0.0;
};

/// Upper limit on gamma1 * t for the short-interval photon-number expansion.
inline constexpr double kShortIntervalLimit = 0.1;

/// g2(tau) = 1 - (rho^2/N) (beta e^{-gamma1|tau|} - (beta-1) e^{-gamma2|tau|}).
double g2_model(double tau_ns, const EmitterParams& params);

/// Detected g2 over a finite interval t around zero for a single emitter with
/// background. Accepts rho in [0, 1]; rho = 0 describes background-only light.
double g2_detected_zero(double t_ns, double gamma1, double gamma2, double beta, double rho);
double g2_detected_zero(double t_ns, const EmitterParams& params);

/// Single-emitter P(0), P(1), P(2) over an interval t with P(n >= 3) = 0 and
/// P(2) at its g2 upper bound. Throws ModelValidityError if gamma1*t >= 0.1,
/// if mu = lambda*t >= 1, or if any probability leaves [0, 1].
PhotonNumberDist photon_number_single(double t_ns, const FluxSpec& flux,
                                      const EmitterParams& params);

/// P^(N)(n) for N independent identical emitters, N taken from params.
double photon_number_multi(int n, double t_ns, const FluxSpec& flux,
                           const EmitterParams& params);

/// Trinomial combination of a single-emitter distribution, for any N >= 1.
double photon_number_multi(int n, int n_emitters, const PhotonNumberDist& single);

/// P^(N)(n) for n = 0 .. 2N.
std::vector<double> photon_number_multi_distribution(int n_emitters,
                                                     const PhotonNumberDist& single);

/// Sum over n >= 1 of P^(N)(n), accumulated term by term.
double photon_number_multi_nonzero(int n_emitters, const PhotonNumberDist& single);

}  // namespace nvqrng
