#include "fastwdm/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "binary_io.hpp"
#include "fastwdm/errors.hpp"
#include "fastwdm/rng.hpp"

namespace fastwdm {
namespace {

constexpr char kCkptMagic[4] = {'F', 'W', 'C', 'K'};
constexpr std::uint16_t kCkptVersion = 1;
constexpr std::uint32_t kKernel = 3;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// dst[k] += w0 * src[k-1] + w1 * src[k] + w2 * src[k+1], zero outside [0, n).
inline void row_corr(double* __restrict dst, const double* __restrict src, std::size_t n, double w0, double w1,
                     double w2) {
  if (n == 1) {
    dst[0] += w1 * src[0];
    return;
  }
  dst[0] += w1 * src[0] + w2 * src[1];
  for (std::size_t k = 1; k + 1 < n; ++k) dst[k] += w0 * src[k - 1] + w1 * src[k] + w2 * src[k + 1];
  dst[n - 1] += w0 * src[n - 2] + w1 * src[n - 1];
}

// acc[o] += sum_k g[k] * src[k + o - 1], zero outside [0, n).
inline void row_dots(const double* __restrict g, const double* __restrict src, std::size_t n, double* acc) {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) a1 += g[k] * src[k];
  for (std::size_t k = 1; k < n; ++k) a0 += g[k] * src[k - 1];
  for (std::size_t k = 0; k + 1 < n; ++k) a2 += g[k] * src[k + 1];
  acc[0] += a0;
  acc[1] += a1;
  acc[2] += a2;
}

// Valid output range along one axis for offset o in {-1, 0, 1}: x in [lo, hi) keeps x + o inside [0, d).
inline std::pair<std::size_t, std::size_t> valid_range(std::size_t d, int o) {
  const std::size_t lo = o < 0 ? 1 : 0;
  const std::size_t hi = o > 0 ? d - 1 : d;
  return {lo, std::max(lo, hi)};
}

// out[co][x] = bias[co] + sum_{ci, o} w[co][ci][o] * in[ci][x + o], same padding.
void conv_forward(const double* in, std::size_t cin, const Shape3& s, const double* w, const double* bias,
                  std::size_t cout, double* out) {
  const std::size_t n = s.count();
  for (std::size_t co = 0; co < cout; ++co) {
    double* o = out + co * n;
    std::fill(o, o + n, bias[co]);
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const double* x = in + ci * n;
      const double* wk = w + (co * cin + ci) * DenoiserModel::kTaps;
      for (int kd = 0; kd < 3; ++kd) {
        const auto [ilo, ihi] = valid_range(s.d0, kd - 1);
        for (int kh = 0; kh < 3; ++kh) {
          const auto [jlo, jhi] = valid_range(s.d1, kh - 1);
          const double* wr = wk + (kd * 3 + kh) * 3;
          for (std::size_t i = ilo; i < ihi; ++i) {
            for (std::size_t j = jlo; j < jhi; ++j) {
              const double* src = x + s.index(i + kd - 1, j + kh - 1, 0);
              row_corr(o + s.index(i, j, 0), src, s.d2, wr[0], wr[1], wr[2]);
            }
          }
        }
      }
    }
  }
}

// grad_in[ci][y] += sum_{co, o} w[co][ci][o] * grad_out[co][y - o].
void conv_backward_input(const double* grad_out, std::size_t cout, const Shape3& s, const double* w,
                         std::size_t cin, double* grad_in) {
  const std::size_t n = s.count();
  for (std::size_t co = 0; co < cout; ++co) {
    const double* g = grad_out + co * n;
    for (std::size_t ci = 0; ci < cin; ++ci) {
      double* gi = grad_in + ci * n;
      const double* wk = w + (co * cin + ci) * DenoiserModel::kTaps;
      for (int kd = 0; kd < 3; ++kd) {
        // y - o must stay inside the grid: that is the valid range for offset -o.
        const auto [ilo, ihi] = valid_range(s.d0, 1 - kd);
        for (int kh = 0; kh < 3; ++kh) {
          const auto [jlo, jhi] = valid_range(s.d1, 1 - kh);
          const double* wr = wk + (kd * 3 + kh) * 3;
          for (std::size_t i = ilo; i < ihi; ++i) {
            for (std::size_t j = jlo; j < jhi; ++j) {
              const double* src = g + s.index(i + 1 - kd, j + 1 - kh, 0);
              row_corr(gi + s.index(i, j, 0), src, s.d2, wr[2], wr[1], wr[0]);
            }
          }
        }
      }
    }
  }
}

// grad_w[co][ci][o] += sum_x grad_out[co][x] * in[ci][x + o]; grad_b[co] += sum_x grad_out[co][x].
void conv_backward_params(const double* grad_out, std::size_t cout, const Shape3& s, const double* in,
                          std::size_t cin, double* grad_w, double* grad_b) {
  const std::size_t n = s.count();
  for (std::size_t co = 0; co < cout; ++co) {
    const double* g = grad_out + co * n;
    double sum = 0.0;
    for (std::size_t x = 0; x < n; ++x) sum += g[x];
    grad_b[co] += sum;
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const double* x = in + ci * n;
      double* gw = grad_w + (co * cin + ci) * DenoiserModel::kTaps;
      for (int kd = 0; kd < 3; ++kd) {
        const auto [ilo, ihi] = valid_range(s.d0, kd - 1);
        for (int kh = 0; kh < 3; ++kh) {
          const auto [jlo, jhi] = valid_range(s.d1, kh - 1);
          double* gr = gw + (kd * 3 + kh) * 3;
          for (std::size_t i = ilo; i < ihi; ++i) {
            for (std::size_t j = jlo; j < jhi; ++j) {
              row_dots(g + s.index(i, j, 0), x + s.index(i + kd - 1, j + kh - 1, 0), s.d2, gr);
            }
          }
        }
      }
    }
  }
}

ParamTensor make_param(std::string name, std::vector<std::size_t> shape) {
  std::size_t count = 1;
  for (auto d : shape) count *= d;
  return ParamTensor{std::move(name), std::move(shape), std::vector<double>(count, 0.0)};
}

}  // namespace

void DenoiserConfig::validate() const {
  if (hidden_channels < 4) throw ValidationError("hidden_channels must be >= 4");
  if (num_hidden_convs < 0) throw ValidationError("num_hidden_convs must be >= 0");
  if (time_embed_dim < 2 || time_embed_dim % 2 != 0) throw ValidationError("time_embed_dim must be even and >= 2");
}

DenoiserModel::DenoiserModel(const DenoiserConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const auto C = static_cast<std::size_t>(cfg.hidden_channels);
  const auto E = static_cast<std::size_t>(cfg.time_embed_dim);
  params_.push_back(make_param("conv_in.weight", {C, kInputChannels, 3, 3, 3}));
  params_.push_back(make_param("conv_in.bias", {C}));
  params_.push_back(make_param("time.weight", {C, E}));
  params_.push_back(make_param("time.bias", {C}));
  for (int i = 0; i < cfg.num_hidden_convs; ++i) {
    params_.push_back(make_param("hidden." + std::to_string(i) + ".weight", {C, C, 3, 3, 3}));
    params_.push_back(make_param("hidden." + std::to_string(i) + ".bias", {C}));
  }
  params_.push_back(make_param("conv_out.weight", {kOutputChannels, C, 3, 3, 3}));
  params_.push_back(make_param("conv_out.bias", {kOutputChannels}));
}

std::size_t DenoiserModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.values.size();
  return n;
}

bool DenoiserModel::all_finite() const {
  for (const auto& p : params_) {
    if (!std::all_of(p.values.begin(), p.values.end(), [](double v) { return std::isfinite(v); })) return false;
  }
  return true;
}

ParamSet DenoiserModel::zeros_like() const {
  ParamSet out = params_;
  for (auto& p : out) std::fill(p.values.begin(), p.values.end(), 0.0);
  return out;
}

std::vector<double> time_embedding(int t, int T, int dim) {
  if (T < 1 || t < 0 || t > T) throw ValidationError("time step outside [0, T]");
  const int half = dim / 2;
  const double s = 1000.0 * static_cast<double>(t) / static_cast<double>(T);
  std::vector<double> emb(static_cast<std::size_t>(dim));
  for (int i = 0; i < half; ++i) {
    const double f = std::exp(-std::log(10000.0) * i / half);
    emb[static_cast<std::size_t>(i)] = std::sin(f * s);
    emb[static_cast<std::size_t>(half + i)] = std::cos(f * s);
  }
  return emb;
}

DenoiserModel::Trace DenoiserModel::trace(const Activations& input, int t, int T) const {
  if (input.channels() != kInputChannels) {
    throw ShapeError("denoiser expects 24 input channels, got " + std::to_string(input.channels()));
  }
  const Shape3 s = input.shape();
  if (s.count() == 0) throw ShapeError("empty denoiser input");
  const auto C = static_cast<std::size_t>(cfg_.hidden_channels);
  const auto E = static_cast<std::size_t>(cfg_.time_embed_dim);
  const std::size_t n = s.count();

  Trace cache;
  cache.input = &input;
  cache.emb = time_embedding(t, T, cfg_.time_embed_dim);
  cache.pre.assign(conv_count(), Activations(C, s));
  cache.act.assign(conv_count(), Activations(C, s));

  conv_forward(input.data().data(), kInputChannels, s, params_[0].values.data(), params_[1].values.data(), C,
               cache.pre[0].data().data());
  const auto& tw = params_[2].values;
  const auto& tb = params_[3].values;
  for (std::size_t c = 0; c < C; ++c) {
    double shift = tb[c];
    for (std::size_t e = 0; e < E; ++e) shift += tw[c * E + e] * cache.emb[e];
    for (double& v : cache.pre[0].channel(c)) v += shift;
  }

  for (std::size_t l = 0; l < conv_count(); ++l) {
    if (l > 0) {
      const auto& w = params_[4 + 2 * (l - 1)].values;
      const auto& b = params_[5 + 2 * (l - 1)].values;
      conv_forward(cache.act[l - 1].data().data(), C, s, w.data(), b.data(), C, cache.pre[l].data().data());
    }
    const auto& h = cache.pre[l].data();
    auto& a = cache.act[l].data();
    for (std::size_t i = 0; i < C * n; ++i) a[i] = h[i] * sigmoid(h[i]);
  }

  cache.output = Activations(kOutputChannels, s);
  const std::size_t oi = params_.size() - 2;
  conv_forward(cache.act.back().data().data(), C, s, params_[oi].values.data(), params_[oi + 1].values.data(),
               kOutputChannels, cache.output.data().data());
  return cache;
}

Activations DenoiserModel::forward(const Activations& input, int t, int T) const {
  return std::move(trace(input, t, T).output);
}

ParamSet DenoiserModel::backward(const Activations& input, int t, int T, const Activations& grad_out) const {
  return backward(trace(input, t, T), grad_out);
}

ParamSet DenoiserModel::backward(const Trace& cache, const Activations& grad_out) const {
  if (cache.input == nullptr) throw ValidationError("backward needs a trace from this model");
  const Activations& input = *cache.input;
  if (grad_out.channels() != kOutputChannels || grad_out.shape() != input.shape()) {
    throw ShapeError("grad_out must match the forward output shape");
  }
  const Shape3 s = input.shape();
  const std::size_t n = s.count();
  const auto C = static_cast<std::size_t>(cfg_.hidden_channels);
  const auto E = static_cast<std::size_t>(cfg_.time_embed_dim);
  ParamSet grads = zeros_like();

  const std::size_t oi = params_.size() - 2;
  conv_backward_params(grad_out.data().data(), kOutputChannels, s, cache.act.back().data().data(), C,
                       grads[oi].values.data(), grads[oi + 1].values.data());
  Activations grad_act(C, s);
  conv_backward_input(grad_out.data().data(), kOutputChannels, s, params_[oi].values.data(), C,
                      grad_act.data().data());

  Activations grad_pre(C, s);
  for (std::size_t l = conv_count(); l-- > 0;) {
    const auto& h = cache.pre[l].data();
    const auto& ga = grad_act.data();
    auto& gh = grad_pre.data();
    for (std::size_t i = 0; i < C * n; ++i) {
      const double sg = sigmoid(h[i]);
      gh[i] = ga[i] * sg * (1.0 + h[i] * (1.0 - sg));
    }
    if (l > 0) {
      const std::size_t wi = 4 + 2 * (l - 1);
      conv_backward_params(gh.data(), C, s, cache.act[l - 1].data().data(), C, grads[wi].values.data(),
                           grads[wi + 1].values.data());
      std::fill(grad_act.data().begin(), grad_act.data().end(), 0.0);
      conv_backward_input(gh.data(), C, s, params_[wi].values.data(), C, grad_act.data().data());
    } else {
      conv_backward_params(gh.data(), C, s, input.data().data(), kInputChannels, grads[0].values.data(),
                           grads[1].values.data());
      auto& gtw = grads[2].values;
      auto& gtb = grads[3].values;
      for (std::size_t c = 0; c < C; ++c) {
        double sum = 0.0;
        for (double v : grad_pre.channel(c)) sum += v;
        gtb[c] += sum;
        for (std::size_t e = 0; e < E; ++e) gtw[c * E + e] += sum * cache.emb[e];
      }
    }
  }
  return grads;
}

DenoiserModel init_model(const DenoiserConfig& cfg, std::uint64_t seed) {
  DenoiserModel model(cfg);
  SeededRng rng(seed);
  auto& params = model.params();
  const std::size_t out_weight = params.size() - 2;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (p.shape.size() < 2 || i == out_weight) continue;  // biases and conv_out stay zero
    std::size_t fan_in = 1;
    for (std::size_t d = 1; d < p.shape.size(); ++d) fan_in *= p.shape[d];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& v : p.values) v = rng.uniform(-bound, bound);
  }
  return model;
}

void save_checkpoint(const DenoiserModel& model, const std::filesystem::path& path) {
  if (!model.all_finite()) throw ValidationError("refusing to save a model with non-finite parameters");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  const auto& cfg = model.config();
  os.write(kCkptMagic, 4);
  detail::write_le<std::uint16_t>(os, kCkptVersion);
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(cfg.hidden_channels));
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(cfg.num_hidden_convs));
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(cfg.time_embed_dim));
  detail::write_le<std::uint32_t>(os, kKernel);
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(model.params().size()));
  for (const auto& p : model.params()) {
    detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(p.shape.size()));
    for (auto d : p.shape) detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    for (double v : p.values) detail::write_f32(os, static_cast<float>(v));
  }
  if (!os.flush()) throw IoError("failed writing " + path.string());
}

DenoiserModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  char magic[4] = {};
  if (!is.read(magic, 4)) throw IoError("truncated checkpoint header");
  if (std::string(magic, 4) != std::string(kCkptMagic, 4)) throw FormatError("bad checkpoint magic");
  if (detail::read_le<std::uint16_t>(is, "checkpoint header") != kCkptVersion) {
    throw FormatError("unsupported checkpoint version");
  }
  DenoiserConfig cfg;
  cfg.hidden_channels = static_cast<int>(detail::read_le<std::uint32_t>(is, "checkpoint config"));
  cfg.num_hidden_convs = static_cast<int>(detail::read_le<std::uint32_t>(is, "checkpoint config"));
  cfg.time_embed_dim = static_cast<int>(detail::read_le<std::uint32_t>(is, "checkpoint config"));
  if (detail::read_le<std::uint32_t>(is, "checkpoint config") != kKernel) throw FormatError("unsupported kernel size");
  DenoiserModel model(cfg);
  const auto count = detail::read_le<std::uint32_t>(is, "checkpoint tensor count");
  if (count != model.params().size()) throw FormatError("checkpoint tensor count does not match config");
  for (auto& p : model.params()) {
    const auto rank = detail::read_le<std::uint32_t>(is, "tensor shape");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = detail::read_le<std::uint32_t>(is, "tensor shape");
    if (shape != p.shape) throw FormatError("checkpoint tensor " + p.name + " has unexpected shape");
    for (double& v : p.values) v = detail::read_f32(is, "tensor values");
  }
  if (!model.all_finite()) throw FormatError("checkpoint contains non-finite parameters");
  return model;
}

}  // namespace fastwdm
