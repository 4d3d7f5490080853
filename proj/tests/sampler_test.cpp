#include <gtest/gtest.h>

#include <cmath>

#include "fastwdm/errors.hpp"
#include "fastwdm/phantom.hpp"
#include "fastwdm/sampler.hpp"
#include "test_util.hpp"

using namespace fastwdm;
using fastwdm::testing::random_volume;

namespace {

InpaintSample sample_from(const Volume3D& g, const MaskVolume& m) {
  InpaintSample s;
  s.g = g;
  s.m = m;
  s.v = apply_mask(g, m);
  return s;  // identity NormRecord: outputs stay in normalized units
}

MaskVolume centre_cube(Shape3 s, std::size_t lo, std::size_t hi) {
  Volume3D m(s);
  for (std::size_t i = lo; i < hi; ++i)
    for (std::size_t j = lo; j < hi; ++j)
      for (std::size_t k = lo; k < hi; ++k) m.at(i, j, k) = 1.0f;
  return MaskVolume(m);
}

X0Predictor oracle(const Volume3D& g) {
  const Activations truth = dwt3(g).tensor().cast<double>();
  return [truth](const Activations&, int, int) { return truth; };
}

}  // namespace

TEST(Inpaint, OracleDenoiserRecoversGroundTruth) {
  const Shape3 shape{8, 8, 8};
  const auto g = random_volume(shape, 1);
  const auto sample = sample_from(g, centre_cube(shape, 2, 6));
  for (const auto& p : {ScheduleParams::linear(4), ScheduleParams::linear_adapted(4),
                        ScheduleParams::variance_preserving(2), ScheduleParams::variance_preserving(8)}) {
    for (bool composite : {true, false}) {
      SamplerConfig cfg;
      cfg.composite_known_region = composite;
      cfg.seed = 3;
      const auto out = inpaint(oracle(g), sample, Schedule(p), cfg);
      for (std::size_t i = 0; i < g.size(); ++i) ASSERT_NEAR(out[i], g[i], 1e-5) << i;
    }
  }
}

TEST(Inpaint, CompositingKeepsKnownVoxelsExactly) {
  const Shape3 shape{8, 8, 8};
  const auto g = random_volume(shape, 2);
  const auto m = centre_cube(shape, 3, 5);
  const auto sample = sample_from(g, m);
  const auto out = inpaint(init_model({4, 1, 4}, 1), sample, Schedule(ScheduleParams::variance_preserving(2)), {});
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (m.contains(i)) {
      EXPECT_EQ(out[i], 0.0f);  // zero-initialized output layer predicts the zero image
    } else {
      EXPECT_EQ(out[i], sample.v[i]);
    }
  }
}

TEST(Inpaint, DeterministicPerSeedAndClampBounds) {
  const Shape3 shape{8, 8, 8};
  const auto g = random_volume(shape, 4);
  const auto sample = sample_from(g, centre_cube(shape, 2, 6));
  DenoiserModel model({4, 1, 4});
  SeededRng rng(5);
  for (auto& p : model.params())
    for (double& v : p.values) v = rng.uniform(-0.5, 0.5);
  const Schedule s(ScheduleParams::variance_preserving(4));
  SamplerConfig cfg;
  cfg.seed = 10;
  cfg.composite_known_region = false;
  const auto a = inpaint(model, sample, s, cfg);
  const auto b = inpaint(model, sample, s, cfg);
  EXPECT_EQ(a, b);
  cfg.seed = 11;
  EXPECT_NE(inpaint(model, sample, s, cfg), a);

  cfg.clamp_x0 = 0.25;
  const auto c = inpaint(model, sample, s, cfg);
  for (float v : c.values()) {
    EXPECT_LE(v, 0.25f + 1e-6f);
    EXPECT_GE(v, -0.25f - 1e-6f);
  }
}

TEST(Inpaint, OutputIsDenormalized) {
  PhantomSpec spec;
  spec.shape = {8, 8, 8};
  spec.min_mask_radius = 1;
  spec.max_mask_radius = 2;
  spec.seed = 4;
  const auto ph = gen_phantom(spec);
  const auto& g = *ph.sample.g;
  const auto out = inpaint(oracle(g), ph.sample, Schedule(ScheduleParams::variance_preserving(2)), {});
  const auto expected = denormalize(g, ph.sample.norm);
  for (std::size_t i = 0; i < g.size(); ++i) ASSERT_NEAR(out[i], expected[i], 1e-4 * (1.0 + std::abs(expected[i])));
}

TEST(Inpaint, RejectsBadInputs) {
  const auto g = random_volume({6, 6, 5}, 1);
  Volume3D mv(g.shape());
  mv[0] = 1.0f;
  const auto sample = sample_from(g, MaskVolume(mv));
  EXPECT_THROW(inpaint(oracle(random_volume({4, 4, 4}, 1)), sample, Schedule(ScheduleParams::linear(2)), {}),
               ShapeError);
  SamplerConfig cfg;
  cfg.clamp_x0 = -1.0;
  const auto ok = sample_from(random_volume({4, 4, 4}, 1), centre_cube({4, 4, 4}, 1, 3));
  EXPECT_THROW(inpaint(oracle(*ok.g), ok, Schedule(ScheduleParams::linear(2)), cfg), ValidationError);
}

TEST(MeanFill, ConstantBackgroundIsFilledWithThatConstant) {
  const Shape3 shape{6, 6, 6};
  const auto m = centre_cube(shape, 2, 4);
  const auto sample = sample_from(Volume3D(shape, 0.4f), m);
  const auto out = mean_fill_baseline(sample);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_FLOAT_EQ(out[i], 0.4f);
}

TEST(MeanFill, IgnoresZeroVoxelsAndMaskedRegion) {
  const Shape3 shape{4, 4, 4};
  Volume3D g(shape);
  // Checkerboard of 1 and 0 outside the mask, large values inside it.
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t k = 0; k < 4; ++k) g.at(i, j, k) = (i + j + k) % 2 ? 1.0f : 0.0f;
  const auto m = centre_cube(shape, 1, 3);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (m.contains(i)) g[i] = 50.0f;
  const auto out = mean_fill_baseline(sample_from(g, m));
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (m.contains(i)) {
      EXPECT_FLOAT_EQ(out[i], 1.0f);
    } else {
      EXPECT_EQ(out[i], g[i]);
    }
  }
}

TEST(MeanFill, EmptyMaskIsAnError) {
  const Shape3 shape{4, 4, 4};
  EXPECT_THROW(mean_fill_baseline(sample_from(random_volume(shape, 1), MaskVolume(Volume3D(shape)))),
               ValidationError);
}
