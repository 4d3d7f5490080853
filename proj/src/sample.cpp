#include "fastwdm/sample.hpp"

namespace fastwdm {

void InpaintSample::validate() const {
  if (v.shape() != m.shape()) throw ShapeError("sample v and m dims differ");
  norm.validate();
  v.require_finite("sample v");
  if (!g) return;
  if (g->shape() != m.shape()) throw ShapeError("sample g and m dims differ");
  g->require_finite("sample g");
  for (std::size_t i = 0; i < v.size(); ++i) {
    const float expected = m.contains(i) ? 0.0f : (*g)[i];
    if (v[i] != expected) throw ValidationError("sample v is not g * (1 - m)");
  }
}

InpaintSample prepare_training_sample(const Volume3D& raw_g, const MaskVolume& m, double pct) {
  auto [g, rec] = normalize(raw_g, pct);
  InpaintSample s;
  s.v = apply_mask(g, m);
  s.g = std::move(g);
  s.m = m;
  s.norm = rec;
  return s;
}

InpaintSample prepare_inference_sample(const Volume3D& raw_v, const MaskVolume& m, double pct) {
  auto [v, rec] = normalize(raw_v, pct);
  InpaintSample s;
  s.v = apply_mask(v, m);
  s.m = m;
  s.norm = rec;
  return s;
}

}  // namespace fastwdm
