// Rough single-thread throughput numbers for the hot kernels.

#include <chrono>
#include <cstdio>
#include <vector>

#include "satnerf/kernels.hpp"
#include "satnerf/rng.hpp"

using namespace satnerf;
namespace k = satnerf::kernels;

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(
             clock::now().time_since_epoch())
      .count();
}

template <typename T>
void bench(k::Isa isa, const char* label) {
  const auto& K = k::table<T>(isa);
  const size_t m = 8192, kk = 64, n = 64;
  Pcg32 rng(1, 1);
  std::vector<T> a(m * kk), b(kk * n), c(m * n);
  for (auto& x : a) x = static_cast<T>(rng.uniform(-1, 1));
  for (auto& x : b) x = static_cast<T>(rng.uniform(-1, 1));

  const int reps = 40;
  K.gemm(a.data(), b.data(), c.data(), m, kk, n);  // warm
  double t0 = now_ms();
  for (int r = 0; r < reps; ++r)
    K.gemm(a.data(), b.data(), c.data(), m, kk, n);
  double dt = (now_ms() - t0) / reps;
  const double flops = 2.0 * m * kk * n;
  std::printf("%-8s %-6s gemm   %8.3f ms  %7.2f gflops\n", label,
              sizeof(T) == 4 ? "f32" : "f64", dt, flops / dt / 1e6);

  std::vector<T> y(m * kk);
  K.vsin(a.data(), y.data(), a.size());
  t0 = now_ms();
  for (int r = 0; r < reps; ++r) K.vsin(a.data(), y.data(), a.size());
  dt = (now_ms() - t0) / reps;
  std::printf("%-8s %-6s sin    %8.3f ms  %7.2f melem/s\n", label,
              sizeof(T) == 4 ? "f32" : "f64", dt, a.size() / dt / 1e3);

  t0 = now_ms();
  for (int r = 0; r < reps; ++r) K.vexp(a.data(), y.data(), a.size());
  dt = (now_ms() - t0) / reps;
  std::printf("%-8s %-6s exp    %8.3f ms  %7.2f melem/s\n", label,
              sizeof(T) == 4 ? "f32" : "f64", dt, a.size() / dt / 1e3);
}

}  // namespace

int main() {
  std::printf("detected: %s\n", k::isa_name(k::detect()));
  bench<float>(k::Isa::Scalar, "scalar");
  bench<double>(k::Isa::Scalar, "scalar");
  if (k::detect() == k::Isa::Avx2) {
    bench<float>(k::Isa::Avx2, "avx2");
    bench<double>(k::Isa::Avx2, "avx2");
  }
  return 0;
}
