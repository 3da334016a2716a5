#include "satnerf/metrics.hpp"

#include <cmath>
#include <vector>

namespace satnerf {

namespace {
void require_same_shape(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height)
    throw ImageIoError("metric: image shapes differ");
}
}  // namespace

double psnr(const Image& img, const Image& ref) {
  require_same_shape(img, ref);
  double se = 0;
  const size_t n = img.rgb.size();
  for (size_t i = 0; i < n; ++i) {
    const double d = img.rgb[i] / 255.0 - ref.rgb[i] / 255.0;
    se += d * d;
  }
  const double mse = se / static_cast<double>(n);
  if (mse <= 0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& img, const Image& ref) {
  require_same_shape(img, ref);
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;

  double w[kWin][kWin];
  double wsum = 0;
  for (int i = 0; i < kWin; ++i)
    for (int j = 0; j < kWin; ++j) {
      const double di = i - kWin / 2, dj = j - kWin / 2;
      w[i][j] = std::exp(-(di * di + dj * dj) / (2 * kSigma * kSigma));
      wsum += w[i][j];
    }
  for (auto& row : w)
    for (auto& x : row) x /= wsum;

  const int h = img.height, wd = img.width;
  if (h < kWin || wd < kWin) throw ImageIoError("ssim: image below window");

  double total = 0;
  size_t count = 0;
  for (int ch = 0; ch < 3; ++ch) {
    for (int r = 0; r + kWin <= h; ++r)
      for (int c = 0; c + kWin <= wd; ++c) {
        double mx = 0, my = 0;
        for (int i = 0; i < kWin; ++i)
          for (int j = 0; j < kWin; ++j) {
            mx += w[i][j] * img.at(r + i, c + j, ch);
            my += w[i][j] * ref.at(r + i, c + j, ch);
          }
        double vx = 0, vy = 0, cov = 0;
        for (int i = 0; i < kWin; ++i)
          for (int j = 0; j < kWin; ++j) {
            const double dx = img.at(r + i, c + j, ch) - mx;
            const double dy = ref.at(r + i, c + j, ch) - my;
            vx += w[i][j] * dx * dx;
            vy += w[i][j] * dy * dy;
            cov += w[i][j] * dx * dy;
          }
        const double num = (2 * mx * my + kC1) * (2 * cov + kC2);
        const double den = (mx * mx + my * my + kC1) * (vx + vy + kC2);
        total += num / den;
        ++count;
      }
  }
  return total / static_cast<double>(count);
}

}  // namespace satnerf
