#pragma once

#include "satnerf/image_io.hpp"

namespace satnerf {

// Peak signal-to-noise ratio on [0,1] images, capped at 99 dB.
double psnr(const Image& img, const Image& ref);

// Structural similarity: 11x11 gaussian window (sigma 1.5), K1=0.01,
// K2=0.03, dynamic range 1. Window fully inside the image; channel average.
double ssim(const Image& img, const Image& ref);

}  // namespace satnerf
