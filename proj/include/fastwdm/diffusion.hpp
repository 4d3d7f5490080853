#pragma once

#include "fastwdm/rng.hpp"
#include "fastwdm/schedule.hpp"
#include "fastwdm/wavelet.hpp"

namespace fastwdm {

/// A diffusion state x_t over wavelet coefficients.
struct DiffusionState {
  WaveletCoeffs coeffs;
  int t = 0;
};

// Closed-form marginal: sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps.
WaveletCoeffs q_sample(const WaveletCoeffs& x0, int t, const WaveletCoeffs& eps, const Schedule& s);

// One forward transition: sqrt(1 - beta_t) * x_prev + sqrt(beta_t) * z.
WaveletCoeffs q_step(const WaveletCoeffs& x_prev, int t, const Schedule& s, SeededRng& rng);

// Draw x_{t-1} from q(x_{t-1} | x_t, x0 = x0_hat). At t = 1 the variance is zero and the
// result equals x0_hat.
WaveletCoeffs posterior_sample(const WaveletCoeffs& x_t, const WaveletCoeffs& x0_hat, int t, const Schedule& s,
                               SeededRng& rng);

// Standard-normal coefficients shaped like `like`.
WaveletCoeffs gaussian_like(const WaveletCoeffs& like, SeededRng& rng);

}  // namespace fastwdm
