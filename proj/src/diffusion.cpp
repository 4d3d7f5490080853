#include "fastwdm/diffusion.hpp"

#include <cmath>

namespace fastwdm {
namespace {

void require_same_layout(const WaveletCoeffs& a, const WaveletCoeffs& b, const char* what) {
  if (a.band_shape() != b.band_shape() || a.data().size() != b.data().size()) {
    throw ShapeError(std::string(what) + ": coefficient shapes differ (" + to_string(a.band_shape()) + " vs " +
                     to_string(b.band_shape()) + ")");
  }
}

}  // namespace

WaveletCoeffs gaussian_like(const WaveletCoeffs& like, SeededRng& rng) {
  WaveletCoeffs z(like.band_shape(), like.scale());
  rng.fill_normal(std::span<float>(z.data()));
  return z;
}

WaveletCoeffs q_sample(const WaveletCoeffs& x0, int t, const WaveletCoeffs& eps, const Schedule& s) {
  require_same_layout(x0, eps, "q_sample");
  const double ab = s.alpha_bar(t);
  if (t < 1 || t > s.T()) throw ValidationError("q_sample step out of range");
  const double a = std::sqrt(ab);
  const double b = std::sqrt(1.0 - ab);
  WaveletCoeffs out(x0.band_shape(), x0.scale());
  const auto& xs = x0.data();
  const auto& es = eps.data();
  auto& os = out.data();
  for (std::size_t i = 0; i < os.size(); ++i) os[i] = static_cast<float>(a * xs[i] + b * es[i]);
  return out;
}

WaveletCoeffs q_step(const WaveletCoeffs& x_prev, int t, const Schedule& s, SeededRng& rng) {
  const double beta = s.beta(t);
  const double a = std::sqrt(1.0 - beta);
  const double b = std::sqrt(beta);
  WaveletCoeffs out(x_prev.band_shape(), x_prev.scale());
  const auto& xs = x_prev.data();
  auto& os = out.data();
  for (std::size_t i = 0; i < os.size(); ++i) os[i] = static_cast<float>(a * xs[i] + b * rng.normal());
  return out;
}

WaveletCoeffs posterior_sample(const WaveletCoeffs& x_t, const WaveletCoeffs& x0_hat, int t, const Schedule& s,
                               SeededRng& rng) {
  require_same_layout(x_t, x0_hat, "posterior_sample");
  const double c0 = s.posterior_mean_coef_x0(t);
  const double ct = s.posterior_mean_coef_xt(t);
  const double sd = std::sqrt(s.posterior_var(t));
  WaveletCoeffs out(x_t.band_shape(), x_t.scale());
  const auto& xt = x_t.data();
  const auto& x0 = x0_hat.data();
  auto& os = out.data();
  if (sd == 0.0) {
    // No noise drawn: the final step is deterministic and leaves the stream untouched.
    for (std::size_t i = 0; i < os.size(); ++i) os[i] = static_cast<float>(c0 * x0[i] + ct * xt[i]);
    return out;
  }
  for (std::size_t i = 0; i < os.size(); ++i) os[i] = static_cast<float>(c0 * x0[i] + ct * xt[i] + sd * rng.normal());
  return out;
}

}  // namespace fastwdm
