#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fastwdm/volume.hpp"

namespace fastwdm {

enum class MetricRegion { Whole, Masked };

std::string to_string(MetricRegion r);

struct SsimWindow {
  int size = 7;  // odd, per axis
  double sigma = 1.5;
};

struct MetricReport {
  double ssim = 0.0;
  double mse = 0.0;
  double psnr = 0.0;  // +inf when mse == 0
  MetricRegion region = MetricRegion::Whole;
  double data_range = 0.0;
};

double mse(const Volume3D& a, const Volume3D& b);
double mse(const Volume3D& a, const Volume3D& b, const MaskVolume& region);

double psnr_from_mse(double mse_value, double data_range);
double psnr(const Volume3D& a, const Volume3D& b, double data_range);
double psnr(const Volume3D& a, const Volume3D& b, double data_range, const MaskVolume& region);

// Mean of the local SSIM map. Local moments use a separable Gaussian window; near the border the
// window is truncated and renormalized. The masked variant averages the map over mask voxels.
double ssim3d(const Volume3D& a, const Volume3D& b, double data_range, const SsimWindow& window = {});
double ssim3d(const Volume3D& a, const Volume3D& b, double data_range, const MaskVolume& region,
              const SsimWindow& window = {});

// Full triple; data_range defaults to max(gt) - min(gt).
MetricReport evaluate(const Volume3D& pred, const Volume3D& gt, std::optional<double> data_range = std::nullopt,
                      const SsimWindow& window = {});
MetricReport evaluate(const Volume3D& pred, const Volume3D& gt, const MaskVolume& region,
                      std::optional<double> data_range = std::nullopt, const SsimWindow& window = {});

struct MetricRow {
  std::string volume_id;
  MetricReport report;
};

// CSV columns: volume_id,region,ssim,mse,psnr,data_range
void write_metric_report(const std::vector<MetricRow>& rows, const std::filesystem::path& path);

}  // namespace fastwdm
