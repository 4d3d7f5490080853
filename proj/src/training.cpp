#include "fastwdm/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace fastwdm {

LossKind parse_loss_kind(const std::string& s) {
  if (s == "squared" || s == "mse") return LossKind::SquaredError;
  if (s == "absolute" || s == "l1") return LossKind::AbsoluteError;
  throw ValidationError("unknown loss kind '" + s + "' (expected squared or absolute)");
}

void TrainConfig::validate() const {
  schedule.validate();
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  if (batch_size < 1) throw ValidationError("batch size must be positive");
  if (steps < 0) throw ValidationError("steps must be non-negative");
  if (!(coeff_scale > 0.0)) throw ValidationError("coefficient scale must be positive");
}

LossBreakdown loss_and_gradient(std::span<const double> g, std::span<const double> y_hat,
                                std::span<const float> mask, LossKind kind, std::span<double> grad) {
  const std::size_t n = g.size();
  if (y_hat.size() != n || mask.size() != n || (!grad.empty() && grad.size() != n)) {
    throw ShapeError("loss inputs differ in size");
  }
  double mask_count = 0.0;
  for (float m : mask) mask_count += m;
  const double masked_denom = std::max(mask_count, 1.0);
  const double inv_n = 1.0 / static_cast<double>(n);

  double recon = 0.0;
  double masked = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y_hat[i] - g[i];
    const double e = kind == LossKind::SquaredError ? r * r : std::abs(r);
    recon += e;
    masked += mask[i] * e;
    if (!grad.empty()) {
      const double de = kind == LossKind::SquaredError ? 2.0 * r : (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0));
      grad[i] = de * (inv_n + mask[i] / masked_denom);
    }
  }
  LossBreakdown out;
  out.l_recon = recon * inv_n;
  out.l_masked = masked / masked_denom;
  out.total = out.l_recon + out.l_masked;
  return out;
}

LossBreakdown compute_loss(const Volume3D& g, const Volume3D& y_hat, const MaskVolume& m, LossKind kind) {
  if (g.shape() != y_hat.shape() || g.shape() != m.shape()) throw ShapeError("compute_loss dims differ");
  const std::vector<double> gd(g.values().begin(), g.values().end());
  const std::vector<double> yd(y_hat.values().begin(), y_hat.values().end());
  return loss_and_gradient(gd, yd, m.volume().values(), kind, {});
}

AdamState::AdamState(const DenoiserModel& model) : m_(model.zeros_like()), v_(model.zeros_like()) {}

void AdamState::apply(DenoiserModel& model, const ParamSet& grads, double lr, const AdamConfig& cfg) {
  auto& params = model.params();
  if (m_.size() != params.size()) {
    m_ = model.zeros_like();
    v_ = model.zeros_like();
  }
  if (grads.size() != params.size()) throw ShapeError("gradient set does not match model");
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_));
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& w = params[p].values;
    const auto& g = grads[p].values;
    auto& m = m_[p].values;
    auto& v = v_[p].values;
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      w[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.eps);
    }
  }
}

Activations build_conditioning_input(const WaveletCoeffs& v, const WaveletCoeffs& m, const WaveletCoeffs& x_t) {
  if (v.band_shape() != m.band_shape() || v.band_shape() != x_t.band_shape()) {
    throw ShapeError("conditioning coefficient shapes differ");
  }
  Activations input(DenoiserModel::kInputChannels, v.band_shape());
  input.assign_channels(0, v.tensor());
  input.assign_channels(kNumBands, m.tensor());
  input.assign_channels(2 * kNumBands, x_t.tensor());
  return input;
}

LossBreakdown pipeline_loss(const DenoiserModel& model, const InpaintSample& sample, int t,
                            const WaveletCoeffs& eps, const Schedule& s, double coeff_scale, LossKind kind,
                            ParamSet* grads) {
  if (!sample.g) throw ValidationError("training sample needs ground truth g");
  const Volume3D& g = *sample.g;
  const WaveletCoeffs x0 = dwt3(g, coeff_scale);
  const WaveletCoeffs x_t = q_sample(x0, t, eps, s);
  const Activations input = build_conditioning_input(dwt3(sample.v, coeff_scale), dwt3(sample.m.volume(), coeff_scale), x_t);

  const auto trace = model.trace(input, t, s.T());
  const std::vector<double> y_hat = haar::synthesis<double>(trace.output, coeff_scale);
  const std::vector<double> gd(g.values().begin(), g.values().end());
  std::vector<double> grad_y(grads ? gd.size() : 0);
  const LossBreakdown loss = loss_and_gradient(gd, y_hat, sample.m.volume().values(), kind, grad_y);
  if (grads) {
    // The inverse transform is linear with adjoint analysis(., 1 / scale).
    const Activations grad_coeffs = haar::analysis<double>(grad_y, g.shape(), 1.0 / coeff_scale);
    const ParamSet step = model.backward(trace, grad_coeffs);
    if (grads->empty()) *grads = model.zeros_like();
    for (std::size_t p = 0; p < step.size(); ++p) {
      auto& acc = (*grads)[p].values;
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += step[p].values[i];
    }
  }
  return loss;
}

StepRecord train_step(DenoiserModel& model, std::span<const InpaintSample> batch, const Schedule& s,
                      const TrainConfig& cfg, SeededRng& rng, AdamState& adam) {
  if (batch.empty()) throw ValidationError("empty training batch");
  StepRecord rec;
  rec.t = static_cast<int>(rng.uniform_int(1, s.T()));
  ParamSet grads = model.zeros_like();
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const auto& sample : batch) {
    if (!sample.g) throw ValidationError("training sample needs ground truth g");
    const WaveletCoeffs eps = gaussian_like(dwt3(sample.v, cfg.coeff_scale), rng);
    const LossBreakdown l = pipeline_loss(model, sample, rec.t, eps, s, cfg.coeff_scale, cfg.loss_kind, &grads);
    rec.loss.l_recon += l.l_recon * inv_b;
    rec.loss.l_masked += l.l_masked * inv_b;
  }
  rec.loss.total = rec.loss.l_recon + rec.loss.l_masked;
  for (auto& p : grads) {
    for (double& v : p.values) v *= inv_b;
  }
  adam.apply(model, grads, cfg.learning_rate, cfg.adam);
  return rec;
}

TrainResult train_loop(const std::vector<InpaintSample>& dataset, const TrainConfig& cfg,
                       const DenoiserConfig& model_cfg, const std::function<void(const StepRecord&)>& on_step) {
  if (dataset.empty()) throw ValidationError("training dataset is empty");
  cfg.validate();
  for (const auto& s : dataset) s.validate();
  const Schedule schedule(cfg.schedule);

  TrainResult result{init_model(model_cfg, cfg.seed), {}};
  SeededRng rng = SeededRng(cfg.seed).split();
  AdamState adam(result.model);

  std::vector<std::size_t> order(dataset.size());
  std::size_t cursor = order.size();
  std::vector<InpaintSample> batch;
  result.history.reserve(static_cast<std::size_t>(cfg.steps));
  for (int step = 0; step < cfg.steps; ++step) {
    batch.clear();
    while (batch.size() < static_cast<std::size_t>(cfg.batch_size)) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = order.size(); i > 1; --i) {
          std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
        }
        cursor = 0;
      }
      batch.push_back(dataset[order[cursor++]]);
    }
    StepRecord rec = train_step(result.model, batch, schedule, cfg, rng, adam);
    rec.step = step;
    if (!std::isfinite(rec.loss.total)) throw ValidationError("training diverged at step " + std::to_string(step));
    result.history.push_back(rec);
    if (on_step) on_step(rec);
  }
  if (cfg.checkpoint_path) save_checkpoint(result.model, *cfg.checkpoint_path);
  return result;
}

void write_loss_history(const std::vector<StepRecord>& history, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << "step,t_drawn,l_recon,l_masked,total\n";
  char line[160];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line, "%d,%d,%.9g,%.9g,%.9g\n", r.step, r.t, r.loss.l_recon, r.loss.l_masked,
                  r.loss.total);
    os << line;
  }
  if (!os.flush()) throw IoError("failed writing " + path.string());
}

}  // namespace fastwdm
