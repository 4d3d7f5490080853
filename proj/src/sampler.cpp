#include "fastwdm/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "fastwdm/training.hpp"

namespace fastwdm {
namespace {

WaveletCoeffs to_coeffs(const Activations& a, double scale) {
  if (a.channels() != kNumBands) throw ShapeError("x0 predictor must return 8 channels");
  return WaveletCoeffs(a.cast<float>(), scale);
}

}  // namespace

void SamplerConfig::validate() const {
  if (clamp_x0 && !(*clamp_x0 > 0.0)) throw ValidationError("clamp bound must be positive");
  if (!(coeff_scale > 0.0)) throw ValidationError("coefficient scale must be positive");
}

X0Predictor as_predictor(const DenoiserModel& model) {
  return [&model](const Activations& input, int t, int T) { return model.forward(input, t, T); };
}

Volume3D inpaint(const X0Predictor& predictor, const InpaintSample& sample, const Schedule& s,
                 const SamplerConfig& cfg) {
  cfg.validate();
  sample.validate();
  if (!sample.v.shape().all_even()) throw ShapeError("inpaint needs even dims, got " + to_string(sample.v.shape()));

  const WaveletCoeffs v_coeffs = dwt3(sample.v, cfg.coeff_scale);
  const WaveletCoeffs m_coeffs = dwt3(sample.m.volume(), cfg.coeff_scale);
  SeededRng rng(cfg.seed);
  WaveletCoeffs x_t = gaussian_like(v_coeffs, rng);
  Volume3D y_raw;
  for (int t = s.T(); t >= 1; --t) {
    const Activations input = build_conditioning_input(v_coeffs, m_coeffs, x_t);
    const Activations pred = predictor(input, t, s.T());
    if (pred.shape() != v_coeffs.band_shape()) throw ShapeError("x0 predictor changed the spatial dims");
    WaveletCoeffs x0_hat = to_coeffs(pred, cfg.coeff_scale);
    y_raw = idwt3(x0_hat);
    if (cfg.clamp_x0) {
      const auto bound = static_cast<float>(*cfg.clamp_x0);
      for (float& v : y_raw.values()) v = std::clamp(v, -bound, bound);
      x0_hat = dwt3(y_raw, cfg.coeff_scale);
    }
    x_t = posterior_sample(x_t, x0_hat, t, s, rng);
  }

  Volume3D out = y_raw;
  if (cfg.composite_known_region) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!sample.m.contains(i)) out[i] = sample.v[i];
    }
  }
  out.require_finite("inpaint");
  return denormalize(out, sample.norm);
}

Volume3D inpaint(const DenoiserModel& model, const InpaintSample& sample, const Schedule& s,
                 const SamplerConfig& cfg) {
  return inpaint(as_predictor(model), sample, s, cfg);
}

Volume3D mean_fill_baseline(const InpaintSample& sample) {
  sample.validate();
  if (sample.m.count() == 0) throw ValidationError("mean-fill baseline needs a nonempty mask");
  // Averaged in raw intensities so that "nonzero" excludes the zero background, not just the void.
  const Volume3D raw = denormalize(sample.v, sample.norm);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!sample.m.contains(i) && raw[i] != 0.0f) {
      sum += raw[i];
      ++count;
    }
  }
  const auto fill = static_cast<float>(count > 0 ? sum / static_cast<double>(count) : 0.0);
  Volume3D out = raw;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (sample.m.contains(i)) out[i] = fill;
  }
  return out;
}

}  // namespace fastwdm
