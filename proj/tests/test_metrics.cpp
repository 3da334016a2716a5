#include <cmath>
#include <vector>

#include "doctest.h"
#include "satnerf/metrics.hpp"
#include "satnerf/rng.hpp"

using namespace satnerf;

namespace {

Image random_image(int w, int h, uint64_t seed) {
  Pcg32 rng(seed, 9);
  Image im = Image::blank(w, h);
  for (auto& b : im.rgb) b = static_cast<uint8_t>(rng.below(256));
  return im;
}

// independent straightforward implementations

double ref_psnr(const Image& a, const Image& b) {
  double se = 0;
  for (size_t i = 0; i < a.rgb.size(); ++i) {
    const double d = (a.rgb[i] - b.rgb[i]) / 255.0;
    se += d * d;
  }
  const double mse = se / a.rgb.size();
  return mse > 0 ? 10 * std::log10(1.0 / mse) : 99.0;
}

// moment form: sigma^2 = E[x^2] - E[x]^2 over the gaussian window
double ref_ssim(const Image& a, const Image& b) {
  const int win = 11;
  const double sigma = 1.5;
  std::vector<double> w(win * win);
  double ws = 0;
  for (int i = 0; i < win; ++i)
    for (int j = 0; j < win; ++j) {
      const double di = i - 5, dj = j - 5;
      w[i * win + j] = std::exp(-(di * di + dj * dj) / (2 * sigma * sigma));
      ws += w[i * win + j];
    }
  for (auto& x : w) x /= ws;

  double total = 0;
  size_t cnt = 0;
  for (int ch = 0; ch < 3; ++ch)
    for (int r = 0; r + win <= a.height; ++r)
      for (int c = 0; c + win <= a.width; ++c) {
        double ex = 0, ey = 0, exx = 0, eyy = 0, exy = 0;
        for (int i = 0; i < win; ++i)
          for (int j = 0; j < win; ++j) {
            const double x = a.at(r + i, c + j, ch);
            const double y = b.at(r + i, c + j, ch);
            const double wij = w[i * win + j];
            ex += wij * x;
            ey += wij * y;
            exx += wij * x * x;
            eyy += wij * y * y;
            exy += wij * x * y;
          }
        const double vx = exx - ex * ex, vy = eyy - ey * ey,
                     cv = exy - ex * ey;
        const double c1 = 1e-4, c2 = 9e-4;
        total += ((2 * ex * ey + c1) * (2 * cv + c2)) /
                 ((ex * ex + ey * ey + c1) * (vx + vy + c2));
        ++cnt;
      }
  return total / cnt;
}

}  // namespace

TEST_CASE("psnr anchor values") {
  const Image a = random_image(32, 24, 1);
  CHECK(psnr(a, a) == 99.0);

  Image zeros = Image::blank(16, 16);
  Image half = Image::blank(16, 16);
  for (auto& b : half.rgb) b = 128;  // quantized 0.5
  const double expect = 10 * std::log10(1.0 / ((128.0 / 255) * (128.0 / 255)));
  CHECK(psnr(zeros, half) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(expect == doctest::Approx(6.02).epsilon(1e-2));
}

TEST_CASE("psnr matches the direct formula on random pairs") {
  for (uint64_t s = 0; s < 5; ++s) {
    const Image a = random_image(40, 30, 100 + s);
    const Image b = random_image(40, 30, 200 + s);
    CHECK(std::abs(psnr(a, b) - ref_psnr(a, b)) < 1e-9);
  }
}

TEST_CASE("ssim anchors and oracle agreement") {
  const Image a = random_image(36, 28, 7);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

  for (uint64_t s = 0; s < 3; ++s) {
    const Image x = random_image(36, 28, 300 + s);
    const Image y = random_image(36, 28, 400 + s);
    const double got = ssim(x, y);
    const double want = ref_ssim(x, y);
    CHECK(std::abs(got - want) < 1e-6);
    CHECK(got >= -1.0);
    CHECK(got <= 1.0);
  }
}

TEST_CASE("metrics reject shape mismatches") {
  const Image a = random_image(16, 16, 1);
  const Image b = random_image(16, 17, 1);
  CHECK_THROWS_AS(psnr(a, b), ImageIoError);
  CHECK_THROWS_AS(ssim(a, b), ImageIoError);
}
