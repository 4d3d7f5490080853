#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "fastwdm/denoiser.hpp"
#include "fastwdm/diffusion.hpp"
#include "fastwdm/sample.hpp"

namespace fastwdm {

enum class LossKind { SquaredError, AbsoluteError };

LossKind parse_loss_kind(const std::string& s);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  ScheduleParams schedule = ScheduleParams::variance_preserving(2);
  double learning_rate = 1e-4;  // 2e-5 at full 128^3 scale
  int batch_size = 2;
  int steps = 0;
  std::uint64_t seed = 0;
  double coeff_scale = kDefaultCoeffScale;
  LossKind loss_kind = LossKind::SquaredError;
  AdamConfig adam;
  std::optional<std::filesystem::path> checkpoint_path;

  void validate() const;
};

/// L = L_recon + L_masked.
struct LossBreakdown {
  double total = 0.0;
  double l_recon = 0.0;   // mean error over all voxels
  double l_masked = 0.0;  // error summed over the mask, divided by max(mask count, 1)
};

LossBreakdown compute_loss(const Volume3D& g, const Volume3D& y_hat, const MaskVolume& m,
                           LossKind kind = LossKind::SquaredError);

// Same loss in double precision; writes dL/dy_hat into grad when it is non-empty.
LossBreakdown loss_and_gradient(std::span<const double> g, std::span<const double> y_hat,
                                std::span<const float> mask, LossKind kind, std::span<double> grad);

/// First and second moment estimates for every parameter tensor.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(const DenoiserModel& model);

  void apply(DenoiserModel& model, const ParamSet& grads, double lr, const AdamConfig& cfg);
  long steps() const { return step_; }

 private:
  ParamSet m_, v_;
  long step_ = 0;
};

// Channel-concatenated conditioning [v, m, x_t] as a 24-channel tensor.
Activations build_conditioning_input(const WaveletCoeffs& v, const WaveletCoeffs& m, const WaveletCoeffs& x_t);

// Loss of one sample at a fixed step t and noise eps: x_t = q_sample(dwt3(g), t, eps),
// y_hat = idwt3(model([v, m, x_t], t)). When grads is non-null the parameter gradients are
// accumulated into it (back through the inverse transform and the network).
LossBreakdown pipeline_loss(const DenoiserModel& model, const InpaintSample& sample, int t,
                            const WaveletCoeffs& eps, const Schedule& s, double coeff_scale, LossKind kind,
                            ParamSet* grads = nullptr);

struct StepRecord {
  int step = 0;
  int t = 0;
  LossBreakdown loss;
};

// One Adam update on a batch. A single t is drawn per step and shared by the batch; each
// sample gets its own noise. The reported loss and the gradient are batch means.
StepRecord train_step(DenoiserModel& model, std::span<const InpaintSample> batch, const Schedule& s,
                      const TrainConfig& cfg, SeededRng& rng, AdamState& adam);

struct TrainResult {
  DenoiserModel model;
  std::vector<StepRecord> history;
};

TrainResult train_loop(const std::vector<InpaintSample>& dataset, const TrainConfig& cfg,
                       const DenoiserConfig& model_cfg,
                       const std::function<void(const StepRecord&)>& on_step = {});

// CSV columns: step,t_drawn,l_recon,l_masked,total
void write_loss_history(const std::vector<StepRecord>& history, const std::filesystem::path& path);

}  // namespace fastwdm
