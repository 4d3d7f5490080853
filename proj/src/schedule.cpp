#include "fastwdm/schedule.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "fastwdm/errors.hpp"

namespace fastwdm {

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::Linear:
      return "L";
    case ScheduleKind::LinearAdapted:
      return "LA";
    case ScheduleKind::VariancePreserving:
      return "VP";
  }
  return "?";
}

std::string to_string(VpForm form) {
  return form == VpForm::TIndependent ? "t_independent" : "paper_literal";
}

ScheduleKind parse_schedule_kind(const std::string& s) {
  if (s == "l" || s == "L") return ScheduleKind::Linear;
  if (s == "la" || s == "LA") return ScheduleKind::LinearAdapted;
  if (s == "vp" || s == "VP") return ScheduleKind::VariancePreserving;
  throw ValidationError("unknown schedule kind '" + s + "' (expected l, la or vp)");
}

VpForm parse_vp_form(const std::string& s) {
  if (s == "t_independent") return VpForm::TIndependent;
  if (s == "paper_literal") return VpForm::PaperLiteral;
  throw ValidationError("unknown vp form '" + s + "' (expected t_independent or paper_literal)");
}

ScheduleParams ScheduleParams::linear(int T) {
  ScheduleParams p;
  p.kind = ScheduleKind::Linear;
  p.T = T;
  p.beta_1 = 1e-4;
  p.beta_T = 0.02;
  return p;
}

ScheduleParams ScheduleParams::linear_adapted(int T) {
  ScheduleParams p;
  p.kind = ScheduleKind::LinearAdapted;
  p.T = T;
  p.beta_1 = 1e-4;
  p.beta_T = 0.9999;
  return p;
}

ScheduleParams ScheduleParams::variance_preserving(int T, VpForm form) {
  ScheduleParams p;
  p.kind = ScheduleKind::VariancePreserving;
  p.T = T;
  p.vp_form = form;
  return p;
}

void ScheduleParams::validate() const {
  if (T < 1) throw ValidationError("schedule needs T >= 1");
  if (kind == ScheduleKind::VariancePreserving) {
    if (!(beta_min > 0.0 && beta_min < beta_max) || !std::isfinite(beta_max)) {
      throw ValidationError("VP schedule needs 0 < beta_min < beta_max");
    }
  } else {
    if (!(beta_1 > 0.0 && beta_1 < 1.0 && beta_T > 0.0 && beta_T < 1.0)) {
      throw ValidationError("linear schedule needs beta_1, beta_T in (0, 1)");
    }
  }
}

Schedule::Schedule(const ScheduleParams& params) : params_(params) {
  params_.validate();
  const int T = params_.T;
  const auto n = static_cast<std::size_t>(T) + 1;
  beta_.assign(n, 0.0);
  alpha_.assign(n, 1.0);
  alpha_bar_.assign(n, 1.0);
  coef_x0_.assign(n, 0.0);
  coef_xt_.assign(n, 0.0);
  post_var_.assign(n, 0.0);

  const double Td = T;
  for (int t = 1; t <= T; ++t) {
    double b = 0.0;
    switch (params_.kind) {
      case ScheduleKind::Linear:
      case ScheduleKind::LinearAdapted:
        b = T == 1 ? params_.beta_T
                   : params_.beta_1 + (t - 1) / (Td - 1.0) * (params_.beta_T - params_.beta_1);
        break;
      case ScheduleKind::VariancePreserving: {
        const double linear_term =
            params_.vp_form == VpForm::TIndependent ? params_.beta_min / Td : params_.beta_min * t / Td;
        const double quad_term = 0.5 * (params_.beta_max - params_.beta_min) * (2.0 * t - 1.0) / (Td * Td);
        b = -std::expm1(-(linear_term + quad_term));
        break;
      }
    }
    if (!(b > 0.0 && b < 1.0)) throw ValidationError("schedule produced beta outside (0, 1) at t=" + std::to_string(t));
    beta_[t] = b;
    alpha_[t] = 1.0 - b;
    alpha_bar_[t] = alpha_bar_[t - 1] * alpha_[t];
  }

  // At t = 1 the posterior collapses onto x0; 1 - (1 - beta_1) would round away from beta_1.
  coef_x0_[1] = 1.0;
  for (int t = 2; t <= T; ++t) {
    const double ab = alpha_bar_[t];
    const double ab_prev = alpha_bar_[t - 1];
    const double denom = 1.0 - ab;
    coef_x0_[t] = std::sqrt(ab_prev) * beta_[t] / denom;
    coef_xt_[t] = std::sqrt(alpha_[t]) * (1.0 - ab_prev) / denom;
    post_var_[t] = beta_[t] * (1.0 - ab_prev) / denom;
  }
}

int Schedule::checked(int t) const {
  if (t < 1 || t > params_.T) {
    throw ValidationError("step " + std::to_string(t) + " outside [1, " + std::to_string(params_.T) + "]");
  }
  return t;
}

double Schedule::alpha_bar(int t) const {
  if (t < 0 || t > params_.T) throw ValidationError("step " + std::to_string(t) + " outside [0, T]");
  return alpha_bar_[static_cast<std::size_t>(t)];
}

Schedule build_schedule(const ScheduleParams& params) { return Schedule(params); }

void export_curves(const std::vector<Schedule>& schedules, const std::filesystem::path& path) {
  if (schedules.empty()) throw ValidationError("export_curves needs at least one schedule");
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << "kind,T,t,t_normalized,beta,alpha_bar\n";
  char line[160];
  for (const auto& s : schedules) {
    for (int t = 1; t <= s.T(); ++t) {
      std::snprintf(line, sizeof line, "%s,%d,%d,%.17g,%.17g,%.17g\n", to_string(s.params().kind).c_str(), s.T(), t,
                    static_cast<double>(t) / s.T(), s.beta(t), s.alpha_bar(t));
      os << line;
    }
  }
  if (!os.flush()) throw IoError("failed writing " + path.string());
}

PerturbationReport perturbation_report(const Schedule& s) {
  PerturbationReport r;
  r.alpha_bar_T = s.alpha_bar(s.T());
  for (int t = 1; t <= s.T(); ++t) {
    if (s.alpha_bar(t) < 0.01) {
      r.first_below_001 = t;
      break;
    }
  }
  r.fully_perturbed = r.alpha_bar_T < 1e-3;
  return r;
}

}  // namespace fastwdm
