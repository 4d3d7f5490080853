#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fastwdm {

enum class ScheduleKind { Linear, LinearAdapted, VariancePreserving };

// t_independent uses beta_min / T per step so the total perturbation does not depend on T;
// paper_literal keeps a beta_min * t / T term, so the total perturbation grows with T.
enum class VpForm { TIndependent, PaperLiteral };

std::string to_string(ScheduleKind kind);
std::string to_string(VpForm form);
ScheduleKind parse_schedule_kind(const std::string& s);
VpForm parse_vp_form(const std::string& s);

struct ScheduleParams {
  ScheduleKind kind = ScheduleKind::VariancePreserving;
  int T = 2;
  double beta_1 = 1e-4;
  double beta_T = 0.02;
  double beta_min = 0.1;
  double beta_max = 20.0;
  VpForm vp_form = VpForm::TIndependent;

  static ScheduleParams linear(int T);
  static ScheduleParams linear_adapted(int T);
  static ScheduleParams variance_preserving(int T, VpForm form = VpForm::TIndependent);

  void validate() const;
};

/// Precomputed per-step constants. Arrays are indexed by t directly; slot 0 of the
/// per-step arrays is unused, alpha_bar[0] = 1.
class Schedule {
 public:
  explicit Schedule(const ScheduleParams& params);

  const ScheduleParams& params() const { return params_; }
  int T() const { return params_.T; }

  double beta(int t) const { return beta_.at(checked(t)); }
  double alpha(int t) const { return alpha_.at(checked(t)); }
  double alpha_bar(int t) const;
  double posterior_mean_coef_x0(int t) const { return coef_x0_.at(checked(t)); }
  double posterior_mean_coef_xt(int t) const { return coef_xt_.at(checked(t)); }
  double posterior_var(int t) const { return post_var_.at(checked(t)); }

 private:
  int checked(int t) const;

  ScheduleParams params_;
  std::vector<double> beta_, alpha_, alpha_bar_, coef_x0_, coef_xt_, post_var_;
};

Schedule build_schedule(const ScheduleParams& params);

// CSV columns: kind,T,t,t_normalized,beta,alpha_bar
void export_curves(const std::vector<Schedule>& schedules, const std::filesystem::path& path);

struct PerturbationReport {
  double alpha_bar_T = 1.0;
  std::optional<int> first_below_001;  // smallest t with alpha_bar[t] < 0.01
  bool fully_perturbed = false;        // alpha_bar[T] < 1e-3
};

PerturbationReport perturbation_report(const Schedule& s);

}  // namespace fastwdm
