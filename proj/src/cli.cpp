#include "fastwdm/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fastwdm/metrics.hpp"
#include "fastwdm/phantom.hpp"
#include "fastwdm/sampler.hpp"
#include "fastwdm/training.hpp"

namespace fastwdm::cli {
namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Schedule flags shared by every subcommand that runs the diffusion process.
struct ScheduleFlags {
  std::string kind = "vp";
  double beta_min = 0.1;
  double beta_max = 20.0;
  std::optional<double> beta1;
  std::optional<double> betaT;
  std::string vp_form = "t_independent";

  void add_to(CLI::App* app, bool with_kind = true) {
    if (with_kind) app->add_option("--kind", kind, "Variance schedule: l, la or vp")->capture_default_str();
    app->add_option("--beta-min", beta_min, "VP beta_min")->capture_default_str();
    app->add_option("--beta-max", beta_max, "VP beta_max")->capture_default_str();
    app->add_option("--beta1", beta1, "L/LA first beta (default 1e-4)");
    app->add_option("--betaT", betaT, "L/LA last beta (default 0.02 for l, 0.9999 for la)");
    app->add_option("--vp-form", vp_form, "t_independent or paper_literal")->capture_default_str();
  }

  ScheduleParams params(const std::string& kind_name, int T) const {
    ScheduleParams p;
    switch (parse_schedule_kind(kind_name)) {
      case ScheduleKind::Linear:
        p = ScheduleParams::linear(T);
        break;
      case ScheduleKind::LinearAdapted:
        p = ScheduleParams::linear_adapted(T);
        break;
      case ScheduleKind::VariancePreserving:
        p = ScheduleParams::variance_preserving(T, parse_vp_form(vp_form));
        break;
    }
    p.beta_min = beta_min;
    p.beta_max = beta_max;
    if (beta1) p.beta_1 = *beta1;
    if (betaT) p.beta_T = *betaT;
    p.validate();
    return p;
  }
};

struct ManifestEntry {
  std::string id;
  std::uint64_t seed = 0;
  fs::path g, m, v;
};

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open manifest " + path.string());
  const fs::path dir = path.parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  std::getline(is, line);
  if (trim(line) != "id,seed,g_path,m_path,v_path") throw FormatError("unexpected manifest header in " + path.string());
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(trim(col));
    if (cols.size() != 5) throw FormatError("manifest row needs 5 columns: " + line);
    entries.push_back({cols[0], std::stoull(cols[1]), dir / cols[2], dir / cols[3], dir / cols[4]});
  }
  if (entries.empty()) throw ValidationError("manifest " + path.string() + " lists no volumes");
  return entries;
}

int cmd_schedule(const std::vector<std::string>& kinds, const std::vector<int>& Ts, const ScheduleFlags& flags,
                 const std::string& out_path, std::ostream& out) {
  std::vector<Schedule> schedules;
  for (const auto& k : kinds) {
    for (int T : Ts) schedules.emplace_back(flags.params(k, T));
  }
  export_curves(schedules, out_path);
  for (const auto& s : schedules) {
    const auto r = perturbation_report(s);
    char line[200];
    std::snprintf(line, sizeof line, "%s T=%d alpha_bar_T=%.6g first_t_below_0.01=%s fully_perturbed=%s\n",
                  to_string(s.params().kind).c_str(), s.T(), r.alpha_bar_T,
                  r.first_below_001 ? std::to_string(*r.first_below_001).c_str() : "none",
                  r.fully_perturbed ? "yes" : "no");
    out << line;
  }
  return kExitOk;
}

int cmd_make_phantoms(int count, std::size_t size, std::uint64_t seed, double pct, const std::string& out_dir,
                      std::ostream& out) {
  if (count < 1) throw ValidationError("--count must be positive");
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  std::ofstream manifest(dir / "manifest.csv");
  if (!manifest) throw IoError("cannot write " + (dir / "manifest.csv").string());
  manifest << "id,seed,g_path,m_path,v_path\n";
  PhantomSpec spec;
  spec.shape = {size, size, size};
  spec.pct = pct;
  for (int i = 0; i < count; ++i) {
    spec.seed = seed + static_cast<std::uint64_t>(i);
    const Phantom p = gen_phantom(spec);
    char id[32];
    std::snprintf(id, sizeof id, "phantom_%04d", i);
    const std::string g_name = std::string(id) + "_g.fw3d";
    const std::string m_name = std::string(id) + "_m.fw3d";
    const std::string v_name = std::string(id) + "_v.fw3d";
    const Volume3D& raw_g = p.raw_g;
    save_volume(raw_g, dir / g_name);
    save_volume(p.sample.m.volume(), dir / m_name);
    save_volume(apply_mask(raw_g, p.sample.m), dir / v_name);
    manifest << id << ',' << spec.seed << ',' << g_name << ',' << m_name << ',' << v_name << '\n';
  }
  if (!manifest.flush()) throw IoError("failed writing manifest");
  out << "wrote " << count << " phantoms to " << dir.string() << "\n";
  return kExitOk;
}

}  // namespace

std::vector<std::string> config_file_tokens(const std::string& path, const std::vector<std::string>& explicit_args) {
  std::set<std::string> given;
  for (const auto& a : explicit_args) {
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));
  }
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file " + path);
  std::vector<std::string> tokens;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || key == "config") throw ValidationError(path + ":" + std::to_string(lineno) + ": bad key");
    if (given.count(key)) continue;
    if (value == "true") {
      tokens.push_back("--" + key);
    } else if (value != "false") {
      tokens.push_back("--" + key);
      tokens.push_back(value);
    }
  }
  return tokens;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Few-step 3D wavelet diffusion inpainting"};
  app.name("fastwdm");
  app.require_subcommand(1);
  std::string config_path;
  std::uint64_t unused_seed = 0;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Flat key=value file; explicit flags take precedence");
  };

  // schedule
  auto* sched = app.add_subcommand("schedule", "Export beta / alpha_bar curves as CSV");
  std::vector<std::string> kinds{"vp"};
  std::vector<int> sched_Ts{2};
  ScheduleFlags sched_flags;
  std::string sched_out;
  sched->add_option("--kind", kinds, "Schedule kinds (comma separated): l, la, vp")->delimiter(',');
  sched->add_option("--T", sched_Ts, "Step counts (comma separated)")->delimiter(',');
  sched_flags.add_to(sched, false);
  sched->add_option("--out", sched_out, "Output CSV")->required();
  sched->add_option("--seed", unused_seed, "Unused; accepted for uniformity");
  add_config(sched);

  // make-phantoms
  auto* mk = app.add_subcommand("make-phantoms", "Write synthetic g/m/v FW3D triplets and a manifest");
  int mk_count = 16;
  std::size_t mk_size = 32;
  std::uint64_t mk_seed = 0;
  double mk_pct = 0.005;
  std::string mk_dir;
  mk->add_option("--count", mk_count, "Number of phantoms")->capture_default_str();
  mk->add_option("--size", mk_size, "Cube edge (even)")->capture_default_str();
  mk->add_option("--seed", mk_seed, "Seed of the first phantom")->capture_default_str();
  mk->add_option("--pct", mk_pct, "Percentile clip fraction")->capture_default_str();
  mk->add_option("--out-dir", mk_dir, "Output directory")->required();
  add_config(mk);

  // train
  auto* tr = app.add_subcommand("train", "Train the denoiser on a phantom manifest");
  std::string tr_manifest, tr_out, tr_history, tr_loss = "squared";
  int tr_T = 2, tr_log_every = 100;
  std::size_t tr_crop = 0;
  double tr_pct = 0.005;
  ScheduleFlags tr_flags;
  TrainConfig tr_cfg;
  DenoiserConfig tr_model;
  tr->add_option("--manifest", tr_manifest, "Manifest CSV from make-phantoms")->required();
  tr->add_option("--T", tr_T, "Diffusion steps")->capture_default_str();
  tr_flags.add_to(tr);
  tr->add_option("--steps", tr_cfg.steps, "Optimizer steps")->capture_default_str();
  tr->add_option("--batch", tr_cfg.batch_size, "Batch size")->capture_default_str();
  tr->add_option("--lr", tr_cfg.learning_rate, "Adam learning rate")->capture_default_str();
  tr->add_option("--seed", tr_cfg.seed, "Seed")->capture_default_str();
  tr->add_option("--coeff-scale", tr_cfg.coeff_scale, "Wavelet coefficient scale");
  tr->add_option("--loss", tr_loss, "squared or absolute")->capture_default_str();
  tr->add_option("--hidden", tr_model.hidden_channels, "Hidden channels")->capture_default_str();
  tr->add_option("--convs", tr_model.num_hidden_convs, "Hidden convolutions")->capture_default_str();
  tr->add_option("--embed", tr_model.time_embed_dim, "Time embedding size")->capture_default_str();
  tr->add_option("--crop", tr_crop, "Crop each volume to a cube of this edge around the mask (0 = off)");
  tr->add_option("--pct", tr_pct, "Percentile clip fraction")->capture_default_str();
  tr->add_option("--out", tr_out, "Checkpoint path")->required();
  tr->add_option("--history", tr_history, "Loss history CSV");
  tr->add_option("--log-every", tr_log_every, "Progress interval in steps (0 = quiet)")->capture_default_str();
  add_config(tr);

  // inpaint
  auto* inp = app.add_subcommand("inpaint", "Inpaint a voided volume with a trained checkpoint");
  std::string inp_model, inp_in, inp_mask, inp_out;
  int inp_T = 2;
  double inp_pct = 0.005;
  std::optional<double> inp_clamp;
  bool inp_no_composite = false;
  SamplerConfig inp_cfg;
  ScheduleFlags inp_flags;
  inp->add_option("--model", inp_model, "Checkpoint")->required();
  inp->add_option("--in", inp_in, "Voided volume v (FW3D)")->required();
  inp->add_option("--mask", inp_mask, "Mask volume (FW3D)")->required();
  inp->add_option("--out", inp_out, "Output volume")->required();
  inp->add_option("--T", inp_T, "Diffusion steps")->capture_default_str();
  inp_flags.add_to(inp);
  inp->add_option("--seed", inp_cfg.seed, "Seed")->capture_default_str();
  inp->add_option("--coeff-scale", inp_cfg.coeff_scale, "Wavelet coefficient scale used in training");
  inp->add_option("--clamp", inp_clamp, "Clamp each x0 estimate to [-b, b] in image space");
  inp->add_flag("--no-composite", inp_no_composite, "Return the raw model output instead of compositing v");
  inp->add_option("--pct", inp_pct, "Percentile clip fraction")->capture_default_str();
  add_config(inp);

  // eval
  auto* ev = app.add_subcommand("eval", "SSIM / MSE / PSNR of a prediction against ground truth");
  std::string ev_pred, ev_gt, ev_mask, ev_out, ev_id = "volume";
  std::optional<double> ev_range;
  int ev_window = 7;
  ev->add_option("--pred", ev_pred, "Predicted volume")->required();
  ev->add_option("--gt", ev_gt, "Ground-truth volume")->required();
  ev->add_option("--mask", ev_mask, "Mask volume; adds a masked-region row");
  ev->add_option("--id", ev_id, "Volume id in the report")->capture_default_str();
  ev->add_option("--data-range", ev_range, "Intensity range (default max(gt) - min(gt))");
  ev->add_option("--window", ev_window, "SSIM window edge (odd)")->capture_default_str();
  ev->add_option("--out", ev_out, "Report CSV (stdout if omitted)");
  ev->add_option("--seed", unused_seed, "Unused; accepted for uniformity");
  add_config(ev);

  // bench
  auto* bn = app.add_subcommand("bench", "Median inpainting wall time per T");
  std::string bn_model, bn_in, bn_mask, bn_out;
  std::vector<int> bn_Ts{2, 4, 8};
  int bn_repeats = 5;
  double bn_pct = 0.005;
  SamplerConfig bn_cfg;
  ScheduleFlags bn_flags;
  bn->add_option("--model", bn_model, "Checkpoint")->required();
  bn->add_option("--T", bn_Ts, "Step counts (comma separated)")->delimiter(',');
  bn->add_option("--in", bn_in, "Voided volume v")->required();
  bn->add_option("--mask", bn_mask, "Mask volume")->required();
  bn->add_option("--repeats", bn_repeats, "Runs per T (>= 5)")->capture_default_str();
  bn->add_option("--seed", bn_cfg.seed, "Seed")->capture_default_str();
  bn->add_option("--coeff-scale", bn_cfg.coeff_scale, "Wavelet coefficient scale used in training");
  bn->add_option("--pct", bn_pct, "Percentile clip fraction")->capture_default_str();
  bn_flags.add_to(bn);
  bn->add_option("--out", bn_out, "Timing CSV (stdout if omitted)");
  add_config(bn);

  if (raw_args.empty()) {
    out << app.help();
    return kExitUsage;
  }

  std::vector<std::string> args = raw_args;
  try {
    auto it = std::find_if(args.begin(), args.end(),
                           [](const std::string& a) { return a == "--config" || a.rfind("--config=", 0) == 0; });
    if (it != args.end()) {
      std::string path;
      if (*it == "--config") {
        if (it + 1 == args.end()) throw CLI::ArgumentMismatch("--config needs a file");
        path = *(it + 1);
      } else {
        path = it->substr(9);
      }
      const auto extra = config_file_tokens(path, args);
      args.insert(args.end(), extra.begin(), extra.end());
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (sched->parsed()) {
      if (sched_Ts.empty() || kinds.empty()) throw ValidationError("schedule needs --kind and --T");
      return cmd_schedule(kinds, sched_Ts, sched_flags, sched_out, out);
    }
    if (mk->parsed()) return cmd_make_phantoms(mk_count, mk_size, mk_seed, mk_pct, mk_dir, out);

    if (tr->parsed()) {
      tr_cfg.schedule = tr_flags.params(tr_flags.kind, tr_T);
      tr_cfg.loss_kind = parse_loss_kind(tr_loss);
      tr_cfg.checkpoint_path = tr_out;
      tr_cfg.validate();
      tr_model.validate();
      std::vector<InpaintSample> dataset;
      for (const auto& e : read_manifest(tr_manifest)) {
        Volume3D g = load_volume(e.g);
        MaskVolume m(load_volume(e.m));
        if (tr_crop > 0) {
          auto c = crop_to_cube(g, m, tr_crop);
          g = std::move(c.g);
          m = std::move(c.m);
        }
        dataset.push_back(prepare_training_sample(g, m, tr_pct));
      }
      auto result = train_loop(dataset, tr_cfg, tr_model, [&](const StepRecord& r) {
        if (tr_log_every > 0 && (r.step + 1) % tr_log_every == 0) {
          char line[160];
          std::snprintf(line, sizeof line, "step %d t=%d total=%.6g recon=%.6g masked=%.6g\n", r.step + 1, r.t,
                        r.loss.total, r.loss.l_recon, r.loss.l_masked);
          err << line;
        }
      });
      if (!tr_history.empty()) write_loss_history(result.history, tr_history);
      out << "saved checkpoint " << tr_out << " after " << result.history.size() << " steps\n";
      return kExitOk;
    }

    if (inp->parsed()) {
      const DenoiserModel model = load_checkpoint(inp_model);
      const Schedule schedule(inp_flags.params(inp_flags.kind, inp_T));
      inp_cfg.composite_known_region = !inp_no_composite;
      inp_cfg.clamp_x0 = inp_clamp;
      const MaskVolume m(load_volume(inp_mask));
      const Volume3D raw_v = load_volume(inp_in);
      const InpaintSample sample = prepare_inference_sample(raw_v, m, inp_pct);
      Volume3D result = inpaint(model, sample, schedule, inp_cfg);
      if (inp_cfg.composite_known_region) {
        // Normalization clips outliers, so the known region is copied from the raw input.
        for (std::size_t i = 0; i < result.size(); ++i)
          if (!m.contains(i)) result[i] = raw_v[i];
      }
      save_volume(result, inp_out);
      out << "wrote " << inp_out << "\n";
      return kExitOk;
    }

    if (ev->parsed()) {
      const Volume3D pred = load_volume(ev_pred);
      const Volume3D gt = load_volume(ev_gt);
      SsimWindow window;
      window.size = ev_window;
      std::vector<MetricRow> rows{{ev_id, evaluate(pred, gt, ev_range, window)}};
      if (!ev_mask.empty()) {
        const MaskVolume m(load_volume(ev_mask));
        rows.push_back({ev_id, evaluate(pred, gt, m, ev_range, window)});
      }
      if (!ev_out.empty()) {
        write_metric_report(rows, ev_out);
      } else {
        for (const auto& r : rows) {
          char line[200];
          std::snprintf(line, sizeof line, "%s %s ssim=%.6f mse=%.6g psnr=%.4f range=%.6g\n", r.volume_id.c_str(),
                        to_string(r.report.region).c_str(), r.report.ssim, r.report.mse, r.report.psnr,
                        r.report.data_range);
          out << line;
        }
      }
      return kExitOk;
    }

    if (bn->parsed()) {
      if (bn_repeats < 5) throw ValidationError("--repeats must be at least 5");
      if (bn_Ts.empty()) throw ValidationError("bench needs at least one --T");
      const DenoiserModel model = load_checkpoint(bn_model);
      const MaskVolume m(load_volume(bn_mask));
      const InpaintSample sample = prepare_inference_sample(load_volume(bn_in), m, bn_pct);
      std::ostringstream csv;
      csv << "T,runs,median_seconds,min_seconds,max_seconds\n";
      for (int T : bn_Ts) {
        const Schedule schedule(bn_flags.params(bn_flags.kind, T));
        std::vector<double> times;
        for (int r = 0; r < bn_repeats; ++r) {
          const auto t0 = std::chrono::steady_clock::now();
          const Volume3D y = inpaint(model, sample, schedule, bn_cfg);
          const auto t1 = std::chrono::steady_clock::now();
          times.push_back(std::chrono::duration<double>(t1 - t0).count());
        }
        std::sort(times.begin(), times.end());
        char line[160];
        std::snprintf(line, sizeof line, "%d,%d,%.6f,%.6f,%.6f\n", T, bn_repeats, times[times.size() / 2],
                      times.front(), times.back());
        csv << line;
      }
      if (bn_out.empty()) {
        out << csv.str();
      } else {
        std::ofstream os(bn_out);
        if (!(os << csv.str())) throw IoError("cannot write " + bn_out);
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  }
  return kExitUsage;
}

}  // namespace fastwdm::cli
