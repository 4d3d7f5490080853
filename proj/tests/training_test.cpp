#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "fastwdm/errors.hpp"
#include "fastwdm/phantom.hpp"
#include "fastwdm/training.hpp"
#include "test_util.hpp"

using namespace fastwdm;
using fastwdm::testing::random_volume;
using fastwdm::testing::TempDir;

namespace {

MaskVolume cube_mask(Shape3 s, std::size_t lo, std::size_t hi) {
  Volume3D m(s);
  for (std::size_t i = lo; i < hi; ++i)
    for (std::size_t j = lo; j < hi; ++j)
      for (std::size_t k = lo; k < hi; ++k) m.at(i, j, k) = 1.0f;
  return MaskVolume(m);
}

InpaintSample make_sample(Shape3 s, std::uint64_t seed, std::size_t lo, std::size_t hi) {
  InpaintSample out;
  out.g = random_volume(s, seed);
  out.m = cube_mask(s, lo, hi);
  out.v = apply_mask(*out.g, out.m);
  return out;
}

PhantomSpec small_spec() {
  PhantomSpec spec;
  spec.shape = {8, 8, 8};
  spec.min_mask_radius = 1;
  spec.max_mask_radius = 2;
  return spec;
}

TrainConfig fast_config(int steps) {
  TrainConfig cfg;
  cfg.schedule = ScheduleParams::variance_preserving(2);
  cfg.learning_rate = 3e-3;
  cfg.batch_size = 2;
  cfg.steps = steps;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST(ComputeLoss, HandWorkedCases) {
  const Shape3 s{2, 2, 2};
  Volume3D g(s, 0.0f), y(s, 0.0f);
  y[0] = 2.0f;
  y[1] = -1.0f;
  Volume3D mv(s, 0.0f);
  mv[0] = 1.0f;
  mv[5] = 1.0f;
  const MaskVolume m(mv);
  const auto sq = compute_loss(g, y, m);
  EXPECT_DOUBLE_EQ(sq.l_recon, 5.0 / 8.0);
  EXPECT_DOUBLE_EQ(sq.l_masked, 4.0 / 2.0);
  EXPECT_DOUBLE_EQ(sq.total, 5.0 / 8.0 + 2.0);
  const auto ab = compute_loss(g, y, m, LossKind::AbsoluteError);
  EXPECT_DOUBLE_EQ(ab.l_recon, 3.0 / 8.0);
  EXPECT_DOUBLE_EQ(ab.l_masked, 1.0);
}

TEST(ComputeLoss, PropertiesHold) {
  const Shape3 s{4, 4, 4};
  const auto a = random_volume(s, 1);
  const auto b = random_volume(s, 2);
  const auto m = cube_mask(s, 1, 3);
  const auto ab = compute_loss(a, b, m);
  const auto ba = compute_loss(b, a, m);
  EXPECT_DOUBLE_EQ(ab.total, ba.total);
  EXPECT_GE(ab.l_recon, 0.0);
  EXPECT_GE(ab.l_masked, 0.0);
  EXPECT_EQ(compute_loss(a, a, m).total, 0.0);

  const MaskVolume empty(Volume3D(s, 0.0f));
  const auto e = compute_loss(a, b, empty);
  EXPECT_EQ(e.l_masked, 0.0);
  EXPECT_DOUBLE_EQ(e.total, e.l_recon);

  EXPECT_THROW(compute_loss(a, Volume3D({4, 4, 2}), m), ShapeError);
  EXPECT_EQ(parse_loss_kind("l1"), LossKind::AbsoluteError);
  EXPECT_THROW(parse_loss_kind("huber"), ValidationError);
}

TEST(LossGradient, MatchesFiniteDifferences) {
  const std::vector<double> g = {0.1, -0.4, 0.7, 0.2};
  std::vector<double> y = {0.3, -0.1, 0.5, 0.9};
  const std::vector<float> m = {1.0f, 0.0f, 1.0f, 0.0f};
  std::vector<double> grad(4);
  loss_and_gradient(g, y, m, LossKind::SquaredError, grad);
  for (std::size_t i = 0; i < 4; ++i) {
    const double orig = y[i];
    y[i] = orig + 1e-6;
    const double up = loss_and_gradient(g, y, m, LossKind::SquaredError, {}).total;
    y[i] = orig - 1e-6;
    const double down = loss_and_gradient(g, y, m, LossKind::SquaredError, {}).total;
    y[i] = orig;
    EXPECT_NEAR(grad[i], (up - down) / 2e-6, 1e-8);
  }
}

TEST(PipelineLoss, ZeroModelPredictsZeroImage) {
  const auto sample = make_sample({4, 4, 4}, 3, 1, 3);
  const auto model = init_model({4, 1, 4}, 0);
  const Schedule s(ScheduleParams::variance_preserving(2));
  WaveletCoeffs eps({2, 2, 2}, kDefaultCoeffScale);
  const auto l = pipeline_loss(model, sample, 1, eps, s, kDefaultCoeffScale, LossKind::SquaredError);
  const auto ref = compute_loss(*sample.g, Volume3D(sample.g->shape(), 0.0f), sample.m);
  EXPECT_NEAR(l.total, ref.total, 1e-6);
}

TEST(PipelineLoss, InverseTransformGradientIsScaledAnalysis) {
  // <idwt(c), y> = <c, analysis(y, 1/scale)> for any c and y.
  const Shape3 s{4, 4, 4};
  const double scale = 0.37;
  Activations c(8, s.halved());
  SeededRng rng(4);
  for (double& x : c.data()) x = rng.uniform(-1.0, 1.0);
  std::vector<double> y(s.count());
  for (double& x : y) x = rng.uniform(-1.0, 1.0);
  const auto img = haar::synthesis<double>(c, scale);
  const auto adj = haar::analysis<double>(y, s, 1.0 / scale);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += img[i] * y[i];
  for (std::size_t i = 0; i < c.data().size(); ++i) rhs += c.data()[i] * adj.data()[i];
  EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(PipelineLoss, EndToEndGradientMatchesFiniteDifferences) {
  const auto sample = make_sample({4, 4, 4}, 6, 1, 3);
  DenoiserModel model({4, 1, 4});
  SeededRng init(7);
  for (auto& p : model.params())
    for (double& v : p.values) v = init.uniform(-0.3, 0.3);
  const Schedule s(ScheduleParams::variance_preserving(2));
  SeededRng noise(8);
  const auto eps = gaussian_like(WaveletCoeffs({2, 2, 2}, kDefaultCoeffScale), noise);
  ParamSet grads;
  pipeline_loss(model, sample, 2, eps, s, kDefaultCoeffScale, LossKind::SquaredError, &grads);
  const double h = 1e-3;
  SeededRng pick(9);
  for (std::size_t p = 0; p < model.params().size(); ++p) {
    auto& vals = model.params()[p].values;
    const std::size_t probes = std::min<std::size_t>(32, vals.size());
    for (std::size_t n = 0; n < probes; ++n) {
      const std::size_t idx = vals.size() <= 32 ? n : static_cast<std::size_t>(pick.uniform_int(0, vals.size() - 1));
      const double orig = vals[idx];
      vals[idx] = orig + h;
      const double up = pipeline_loss(model, sample, 2, eps, s, kDefaultCoeffScale, LossKind::SquaredError).total;
      vals[idx] = orig - h;
      const double down = pipeline_loss(model, sample, 2, eps, s, kDefaultCoeffScale, LossKind::SquaredError).total;
      vals[idx] = orig;
      const double fd = (up - down) / (2 * h);
      ASSERT_LE(std::abs(fd - grads[p].values[idx]), 1e-3 * std::max(1.0, std::abs(fd)))
          << model.params()[p].name << "[" << idx << "]";
    }
  }
}

TEST(TrainLoop, LossDropsOnSmallPhantoms) {
  const auto data = make_phantom_dataset(1, 100, small_spec());
  const auto cfg = fast_config(200);
  const auto r = train_loop(data, cfg, {8, 1, 8});
  ASSERT_EQ(r.history.size(), 200u);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 10; ++i) head += r.history[i].loss.total;
  for (int i = 190; i < 200; ++i) tail += r.history[i].loss.total;
  EXPECT_LT(tail, 0.5 * head) << "head " << head / 10 << " tail " << tail / 10;
  EXPECT_TRUE(r.model.all_finite());
  for (const auto& rec : r.history) {
    EXPECT_GE(rec.t, 1);
    EXPECT_LE(rec.t, 2);
  }
}

TEST(TrainLoop, BitwiseDeterministic) {
  const auto data = make_phantom_dataset(3, 7, small_spec());
  const auto cfg = fast_config(5);
  const auto a = train_loop(data, cfg, {4, 1, 4});
  const auto b = train_loop(data, cfg, {4, 1, 4});
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].t, b.history[i].t);
    EXPECT_EQ(a.history[i].loss.total, b.history[i].loss.total);
  }
  for (std::size_t p = 0; p < a.model.params().size(); ++p)
    EXPECT_EQ(a.model.params()[p].values, b.model.params()[p].values);
}

TEST(TrainLoop, ZeroStepsReturnsInitialModel) {
  const auto data = make_phantom_dataset(2, 1, small_spec());
  auto cfg = fast_config(0);
  const auto r = train_loop(data, cfg, {4, 1, 4});
  EXPECT_TRUE(r.history.empty());
  const auto init = init_model({4, 1, 4}, cfg.seed);
  for (std::size_t p = 0; p < r.model.params().size(); ++p)
    EXPECT_EQ(r.model.params()[p].values, init.params()[p].values);
}

TEST(TrainLoop, TimeConditioningIsLiveAfterTraining) {
  const auto data = make_phantom_dataset(2, 3, small_spec());
  const auto r = train_loop(data, fast_config(50), {4, 1, 4});
  const auto& sample = data[0];
  const auto v = dwt3(sample.v);
  const auto m = dwt3(sample.m.volume());
  const auto input = build_conditioning_input(v, m, v);
  EXPECT_NE(r.model.forward(input, 1, 2).data(), r.model.forward(input, 2, 2).data());
}

TEST(TrainLoop, RejectsBadInputs) {
  EXPECT_THROW(train_loop({}, fast_config(1), {4, 1, 4}), ValidationError);
  const auto data = make_phantom_dataset(1, 1, small_spec());
  auto cfg = fast_config(1);
  cfg.batch_size = 0;
  EXPECT_THROW(train_loop(data, cfg, {4, 1, 4}), ValidationError);
  auto no_gt = data;
  no_gt[0].g.reset();
  EXPECT_THROW(train_loop(no_gt, fast_config(1), {4, 1, 4}), ValidationError);
}

TEST(TrainLoop, WritesHistoryAndCheckpoint) {
  TempDir dir;
  const auto data = make_phantom_dataset(2, 11, small_spec());
  auto cfg = fast_config(3);
  cfg.checkpoint_path = dir / "m.fwck";
  const auto r = train_loop(data, cfg, {4, 1, 4});
  write_loss_history(r.history, dir / "h.csv");
  std::ifstream is(dir / "h.csv");
  std::string line;
  int rows = -1;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 3);
  const auto loaded = load_checkpoint(dir / "m.fwck");
  EXPECT_EQ(loaded.config(), (DenoiserConfig{4, 1, 4}));
}
