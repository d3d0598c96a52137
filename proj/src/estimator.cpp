#include "nvqrng/estimator.hpp"

#include <omp.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "nvqrng/errors.hpp"
#include "nvqrng/rng.hpp"

namespace nvqrng {

std::pair<TimestampStream, TimestampStream> hbt_split(const TimestampStream& stream,
                                                      std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0, seed_purpose::split));
  std::bernoulli_distribution coin(0.5);
  TimestampStream arm0{{}, stream.duration_ps, stream.origin};
  TimestampStream arm1{{}, stream.duration_ps, stream.origin};
  arm0.timestamps.reserve(stream.size() / 2 + 64);
  arm1.timestamps.reserve(stream.size() / 2 + 64);
  for (std::uint64_t t : stream.timestamps) {
    (coin(rng) ? arm1 : arm0).timestamps.push_back(t);
  }
  return {std::move(arm0), std::move(arm1)};
}

double G2Histogram::expected_uncorrelated() const noexcept {
  if (total_time_s <= 0.0) return 0.0;
  return static_cast<double>(counts_det0) * static_cast<double>(counts_det1) * window_ns * 1e-9 /
         total_time_s;
}

namespace {

// Window index of a signed delay, or -1 when outside the histogram.
inline std::int64_t window_index(std::int64_t delay, std::int64_t w, std::int64_t half_bins) {
  const std::int64_t num = 2 * delay + w;
  const std::int64_t den = 2 * w;
  std::int64_t k = num / den;
  if (num % den != 0 && num < 0) --k;
  return (k < -half_bins || k > half_bins) ? -1 : k + half_bins;
}

void accumulate(std::span<const std::uint64_t> a, std::size_t a_begin, std::size_t a_end,
                std::span<const std::uint64_t> b, std::int64_t w, std::int64_t half_bins,
                std::vector<std::uint64_t>& hist) {
  if (a_begin >= a_end || b.empty()) return;
  const std::int64_t reach = half_bins * w + w;
  const auto lower_edge = [&](std::uint64_t t) {
    return static_cast<std::int64_t>(t) - reach;
  };
  auto lo = std::lower_bound(b.begin(), b.end(), lower_edge(a[a_begin]),
                             [](std::uint64_t v, std::int64_t key) {
                               return static_cast<std::int64_t>(v) < key;
                             });
  for (std::size_t i = a_begin; i < a_end; ++i) {
    const auto ta = static_cast<std::int64_t>(a[i]);
    while (lo != b.end() && static_cast<std::int64_t>(*lo) < ta - reach) ++lo;
    for (auto it = lo; it != b.end(); ++it) {
      const std::int64_t d = static_cast<std::int64_t>(*it) - ta;
      if (d >= reach) break;
      const std::int64_t k = window_index(d, w, half_bins);
      if (k >= 0) ++hist[static_cast<std::size_t>(k)];
    }
  }
}

}  // namespace

namespace reference {

std::vector<std::uint64_t> coincidence_counts(std::span<const std::uint64_t> a,
                                              std::span<const std::uint64_t> b,
                                              std::uint64_t window_ps, int half_bins) {
  std::vector<std::uint64_t> hist(static_cast<std::size_t>(2 * half_bins + 1), 0);
  accumulate(a, 0, a.size(), b, static_cast<std::int64_t>(window_ps), half_bins, hist);
  return hist;
}

}  // namespace reference

std::vector<std::uint64_t> coincidence_counts(std::span<const std::uint64_t> a,
                                              std::span<const std::uint64_t> b,
                                              std::uint64_t window_ps, int half_bins) {
  const std::size_t n_bins = static_cast<std::size_t>(2 * half_bins + 1);
  const std::size_t chunks = std::max<std::size_t>(
      1, std::min<std::size_t>(static_cast<std::size_t>(omp_get_max_threads()) * 4,
                               a.size() / 4096));
  std::vector<std::uint64_t> hist(n_bins, 0);
#pragma omp parallel
  {
    std::vector<std::uint64_t> local(n_bins, 0);
#pragma omp for schedule(static)
    for (std::size_t c = 0; c < chunks; ++c) {
      accumulate(a, a.size() * c / chunks, a.size() * (c + 1) / chunks, b,
                 static_cast<std::int64_t>(window_ps), half_bins, local);
    }
#pragma omp critical
    for (std::size_t k = 0; k < n_bins; ++k) hist[k] += local[k];
  }
  return hist;
}

G2Histogram g2_histogram(const TimestampStream& a, const TimestampStream& b, double window_ns,
                         double max_tau_ns, double total_time_s) {
  if (a.empty() || b.empty()) {
    throw InputError("g2_histogram: both detector streams must be non-empty");
  }
  if (!is_non_decreasing(a.timestamps) || !is_non_decreasing(b.timestamps)) {
    throw InputError("g2_histogram: streams must be sorted");
  }
  const auto window_ps = static_cast<std::uint64_t>(std::llround(window_ns * 1000.0));
  if (window_ps < 25) {
    throw ConfigError("g2_histogram: window below the 25 ps timestamp resolution");
  }
  if (!(max_tau_ns >= 0.0) || !(total_time_s > 0.0)) {
    throw ConfigError("g2_histogram: need max_tau >= 0 and total time > 0");
  }
  const int half_bins = static_cast<int>(std::floor(max_tau_ns * 1000.0 / window_ps + 1e-9));

  G2Histogram h;
  h.window_ns = static_cast<double>(window_ps) * 1e-3;
  h.total_time_s = total_time_s;
  h.counts_det0 = a.size();
  h.counts_det1 = b.size();
  h.counts = coincidence_counts(a.timestamps, b.timestamps, window_ps, half_bins);
  const double expected = h.expected_uncorrelated();
  h.tau_ns.resize(h.counts.size());
  h.g2.resize(h.counts.size());
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    h.tau_ns[k] = (static_cast<double>(k) - half_bins) * h.window_ns;
    h.g2[k] = static_cast<double>(h.counts[k]) / expected;
  }
  return h;
}

G2Histogram average_histograms(std::span<const G2Histogram> runs, AverageMode mode) {
  if (runs.empty()) {
    throw InputError("average_histograms: no runs");
  }
  G2Histogram out = runs.front();
  for (std::size_t r = 1; r < runs.size(); ++r) {
    const G2Histogram& h = runs[r];
    if (h.tau_ns.size() != out.tau_ns.size() || h.window_ns != out.window_ns) {
      throw InputError("average_histograms: runs use different delay grids");
    }
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
      out.counts[k] += h.counts[k];
      out.g2[k] += h.g2[k];
    }
    out.counts_det0 += h.counts_det0;
    out.counts_det1 += h.counts_det1;
    out.total_time_s += h.total_time_s;
  }
  if (mode == AverageMode::normalized) {
    for (double& g : out.g2) g /= static_cast<double>(runs.size());
  } else {
    const double expected = out.expected_uncorrelated();
    for (std::size_t k = 0; k < out.counts.size(); ++k) {
      out.g2[k] = static_cast<double>(out.counts[k]) / expected;
    }
  }
  return out;
}

double estimate_rho(double signal_plus_background_rate, double background_rate) {
  if (!(signal_plus_background_rate > 0.0) || !(background_rate >= 0.0)) {
    throw std::domain_error("estimate_rho: need total > 0 and background >= 0");
  }
  if (background_rate > signal_plus_background_rate) {
    throw std::domain_error("estimate_rho: background exceeds total rate");
  }
  return (signal_plus_background_rate - background_rate) / signal_plus_background_rate;
}

double g2_fit_model(double tau_ns, int n_emitters, double gamma, double beta, double rho) {
  const double t = std::abs(tau_ns);
  return 1.0 - rho * rho / n_emitters *
                   (beta * std::exp(-gamma * t) - (beta - 1.0) * std::exp(-gamma * t / 20.0));
}

namespace {

struct FitData {
  Eigen::ArrayXd tau;  // |tau|
  Eigen::ArrayXd y;
};

struct SingleFit {
  bool converged = false;
  double gamma = 0.0;
  double beta = 1.0;
  double rss = std::numeric_limits<double>::infinity();
  double gamma_stderr = 0.0;
  double beta_stderr = 0.0;
  std::string note;
};

double rss_at(const FitData& d, double amp, double gamma, double beta) {
  const Eigen::ArrayXd fast = (-gamma * d.tau).exp();
  const Eigen::ArrayXd slow = (-gamma / 20.0 * d.tau).exp();
  const Eigen::ArrayXd r = d.y - (1.0 - amp * (beta * fast - (beta - 1.0) * slow));
  return r.square().sum();
}

SingleFit levenberg_marquardt(const FitData& d, double amp, double gamma0, double beta0,
                              int max_iter) {
  SingleFit fit;
  double gamma = gamma0;
  double beta = std::max(1.0, beta0);
  double rss = rss_at(d, amp, gamma, beta);
  double damping = 1e-3;
  const Eigen::Index m = d.tau.size();
  Eigen::MatrixXd jac(m, 2);
  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::ArrayXd fast = (-gamma * d.tau).exp();
    const Eigen::ArrayXd slow = (-gamma / 20.0 * d.tau).exp();
    const Eigen::ArrayXd model = 1.0 - amp * (beta * fast - (beta - 1.0) * slow);
    const Eigen::VectorXd r = (d.y - model).matrix();
    jac.col(0) = (amp * d.tau * (beta * fast - (beta - 1.0) / 20.0 * slow)).matrix();
    jac.col(1) = (-amp * (fast - slow)).matrix();
    const Eigen::Matrix2d jtj = jac.transpose() * jac;
    const Eigen::Vector2d jtr = jac.transpose() * r;

    bool accepted = false;
    for (int tries = 0; tries < 40; ++tries) {
      Eigen::Matrix2d lhs = jtj;
      lhs(0, 0) *= 1.0 + damping;
      lhs(1, 1) *= 1.0 + damping;
      Eigen::Vector2d step = lhs.ldlt().solve(jtr);
      // beta pinned at its bound: move gamma alone.
      if (beta <= 1.0 && step(1) < 0.0) {
        step(0) = jtr(0) / lhs(0, 0);
        step(1) = 0.0;
      }
      double g_new = gamma + step(0);
      if (!(g_new > 0.0)) g_new = 0.5 * gamma;
      const double b_new = std::max(1.0, beta + step(1));
      const double rss_new = rss_at(d, amp, g_new, b_new);
      if (rss_new <= rss) {
        const double rel_change = (rss - rss_new) / std::max(rss, 1e-300);
        const double rel_step = std::abs(g_new - gamma) / gamma + std::abs(b_new - beta) / beta;
        gamma = g_new;
        beta = b_new;
        rss = rss_new;
        damping = std::max(damping / 3.0, 1e-12);
        accepted = true;
        if (rel_step < 1e-13 || (rel_change < 1e-15 && rel_step < 1e-9)) {
          fit.converged = true;
        }
        break;
      }
      damping *= 4.0;
    }
    if (!accepted) {
      // No descent direction left: a stationary point within round-off.
      fit.converged = true;
    }
    if (fit.converged) break;
  }
  fit.gamma = gamma;
  fit.beta = beta;
  fit.rss = rss;
  if (!fit.converged) {
    fit.note = "iteration limit reached";
  }
  // Covariance s^2 (J^T J)^-1 at the optimum.
  const Eigen::ArrayXd fast = (-gamma * d.tau).exp();
  const Eigen::ArrayXd slow = (-gamma / 20.0 * d.tau).exp();
  jac.col(0) = (amp * d.tau * (beta * fast - (beta - 1.0) / 20.0 * slow)).matrix();
  jac.col(1) = (-amp * (fast - slow)).matrix();
  const Eigen::Matrix2d jtj = jac.transpose() * jac;
  if (m > 2 && std::abs(jtj.determinant()) > 0.0) {
    const Eigen::Matrix2d cov = jtj.inverse() * (rss / static_cast<double>(m - 2));
    fit.gamma_stderr = std::sqrt(std::max(0.0, cov(0, 0)));
    fit.beta_stderr = std::sqrt(std::max(0.0, cov(1, 1)));
  }
  return fit;
}

// Decay rate from the delay at which the dip has recovered halfway.
double initial_gamma(const G2Histogram& h, double fit_range_ns) {
  const std::size_t center = h.tau_ns.size() / 2;
  const double depth_level = h.g2[center];
  const double half_level = 0.5 * (depth_level + 1.0);
  for (std::size_t k = 1; k <= center; ++k) {
    const double tau = h.tau_ns[center + k];
    if (tau > fit_range_ns) break;
    const double g = 0.5 * (h.g2[center + k] + h.g2[center - k]);
    if (g >= half_level) {
      return std::log(2.0) / tau;
    }
  }
  return 5.0 / fit_range_ns;
}

}  // namespace

FitResult fit_g2(const G2Histogram& hist, double rho, const FitOptions& options) {
  if (!(rho > 0.0 && rho <= 1.0)) {
    throw std::domain_error("fit_g2: rho must lie in (0, 1]");
  }
  if (options.n_max < 1) {
    throw std::invalid_argument("fit_g2: n_max must be >= 1");
  }
  if (hist.tau_ns.size() < 5 || hist.tau_ns.size() % 2 == 0) {
    throw InputError("fit_g2: histogram must be symmetric with at least five windows");
  }

  FitData data;
  std::vector<double> taus, ys;
  for (std::size_t k = 0; k < hist.tau_ns.size(); ++k) {
    if (std::abs(hist.tau_ns[k]) <= options.fit_range_ns + 1e-9) {
      taus.push_back(std::abs(hist.tau_ns[k]));
      ys.push_back(hist.g2[k]);
    }
  }
  data.tau = Eigen::Map<Eigen::ArrayXd>(taus.data(), static_cast<Eigen::Index>(taus.size()));
  data.y = Eigen::Map<Eigen::ArrayXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));

  const double gamma0 = initial_gamma(hist, options.fit_range_ns);
  const std::vector<std::pair<double, double>> starts{
      {gamma0, 1.0}, {gamma0, 1.5}, {0.5 * gamma0, 2.0}, {2.0 * gamma0, 1.2}};

  const int n_max = options.n_max;
  std::vector<SingleFit> per_n(static_cast<std::size_t>(n_max));
#pragma omp parallel for schedule(dynamic, 1)
  for (int n = 1; n <= n_max; ++n) {
    const double amp = rho * rho / n;
    SingleFit best;
    for (const auto& [g0, b0] : starts) {
      SingleFit f = levenberg_marquardt(data, amp, g0, b0, options.max_iterations);
      if (f.converged && f.rss < best.rss) best = f;
      if (!best.converged && !f.converged && best.note.empty()) best.note = f.note;
    }
    per_n[static_cast<std::size_t>(n - 1)] = best;
  }

  FitResult result;
  result.rho_used = rho;
  result.residual_by_n.resize(static_cast<std::size_t>(n_max));
  int chosen = 0;
  double best_rss = std::numeric_limits<double>::infinity();
  std::vector<std::string> diagnostics;
  for (int n = 1; n <= n_max; ++n) {
    const SingleFit& f = per_n[static_cast<std::size_t>(n - 1)];
    result.residual_by_n[static_cast<std::size_t>(n - 1)] =
        f.converged ? f.rss : std::numeric_limits<double>::infinity();
    if (!f.converged) {
      diagnostics.push_back("N=" + std::to_string(n) + ": " +
                            (f.note.empty() ? std::string("no convergence") : f.note));
      continue;
    }
    if (f.rss < best_rss * (1.0 - 1e-12)) {
      best_rss = f.rss;
      chosen = n;
    }
  }
  if (chosen == 0) {
    throw FitError("fit_g2: no emitter count converged", std::move(diagnostics));
  }
  const SingleFit& f = per_n[static_cast<std::size_t>(chosen - 1)];
  result.n_emitters = chosen;
  result.gamma = f.gamma;
  result.beta = f.beta;
  result.residual_sum_squares = f.rss;
  result.gamma_stderr = f.gamma_stderr;
  result.beta_stderr = f.beta_stderr;
  return result;
}

FitResult fit_g2(const G2Histogram& hist, double rho, int n_max) {
  FitOptions options;
  options.n_max = n_max;
  return fit_g2(hist, rho, options);
}

void write_histogram(std::ostream& out, const G2Histogram& h) {
  out << "# window_ns=" << std::setprecision(17) << h.window_ns << '\n'
      << "# total_time_s=" << h.total_time_s << '\n'
      << "# counts_det0=" << h.counts_det0 << '\n'
      << "# counts_det1=" << h.counts_det1 << '\n'
      << "# tau_ns\tg2\traw_count\n";
  for (std::size_t k = 0; k < h.tau_ns.size(); ++k) {
    out << h.tau_ns[k] << '\t' << h.g2[k] << '\t' << h.counts[k] << '\n';
  }
}

G2Histogram read_histogram(std::istream& in) {
  G2Histogram h;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "window_ns") h.window_ns = std::stod(value);
      else if (key == "total_time_s") h.total_time_s = std::stod(value);
      else if (key == "counts_det0") h.counts_det0 = std::stoull(value);
      else if (key == "counts_det1") h.counts_det1 = std::stoull(value);
      continue;
    }
    std::istringstream row(line);
    double tau = 0.0, g = 0.0;
    std::uint64_t c = 0;
    if (!(row >> tau >> g >> c)) {
      throw InputError("histogram line " + std::to_string(line_no) +
                       ": expected tau_ns, g2, raw_count");
    }
    h.tau_ns.push_back(tau);
    h.g2.push_back(g);
    h.counts.push_back(c);
  }
  return h;
}

std::string format_fit_report(const FitResult& fit) {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "n_emitters=" << fit.n_emitters << '\n'
      << "gamma_per_ns=" << fit.gamma << '\n'
      << "gamma_stderr=" << fit.gamma_stderr << '\n'
      << "beta=" << fit.beta << '\n'
      << "beta_stderr=" << fit.beta_stderr << '\n'
      << "rho=" << fit.rho_used << '\n'
      << "residual_sum_squares=" << fit.residual_sum_squares << '\n';
  out << "residual_by_n=";
  for (std::size_t i = 0; i < fit.residual_by_n.size(); ++i) {
    out << (i ? "," : "") << fit.residual_by_n[i];
  }
  out << '\n';
  return out.str();
}

}  // namespace nvqrng
