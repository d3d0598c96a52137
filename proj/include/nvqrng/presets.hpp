#pragma once

#include <array>

#include "nvqrng/model.hpp"

namespace nvqrng {

/// Reported ENT-suite values for one region's 800 Mbit sample.
struct EntAnchors {
  double entropy_per_byte;
  double chi2_percentile;
  double arithmetic_mean;
  double monte_carlo_pi;
  double serial_correlation;
};

/// Measured nanodiamond regions: fitted g2 parameters, per-emitter flux and
/// the reported min-entropy, generation rate and test results.
struct RegionPreset {
  int region;
  int n_emitters;
  double gamma_per_ns;
  double beta;
  double rho;
  double lambda_per_ns;
  double min_entropy;
  double throughput_mbit_s;
  double frequency_of_zero;
  EntAnchors ent;

  EmitterParams params() const {
    return EmitterParams::with_fixed_shelving_ratio(n_emitters, gamma_per_ns, beta, rho);
  }
  FluxSpec flux() const { return FluxSpec(lambda_per_ns); }
};

inline constexpr std::array<RegionPreset, 5> kRegionPresets{{
    {1, 1, 0.020, 1.126, 0.96531, 0.0000216, 0.999975, 0.173, 0.500012,
     {7.999998, 82.71, 127.492, 3.14185045, 0.000375}},
    {2, 2, 0.029, 1.218, 0.96816, 0.0000123, 0.999972, 0.197, 0.500000,
     {7.999998, 19.54, 127.507, 3.14121709, 0.000119}},
    {3, 4, 0.040, 1.623, 0.97251, 0.0000086, 0.999961, 0.274, 0.500002,
     {7.999998, 1.41, 127.484, 3.14234461, 0.000145}},
    {4, 17, 0.066, 1.455, 0.99708, 0.0000212, 0.999586, 2.88, 0.500000,
     {7.999998, 1.01, 127.496, 3.14137861, 0.000217}},
    {5, 49, 0.063, 1.671, 0.99839, 0.0000122, 0.999314, 4.77, 0.500003,
     {7.999998, 17.00, 127.492, 3.14258869, 0.000658}},
}};

/// Throws std::out_of_range for regions outside 1..5.
const RegionPreset& region_preset(int region);

}  // namespace nvqrng
