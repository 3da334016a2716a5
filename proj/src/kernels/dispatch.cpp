#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "satnerf/kernels.hpp"

namespace satnerf::kernels {

namespace detail {
bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}
}  // namespace detail

namespace {

Isa initial_isa() {
  if (const char* env = std::getenv("SATNERF_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return Isa::Scalar;
    if (std::strcmp(env, "avx2") == 0) {
      if (!detail::cpu_has_avx2())
        throw std::runtime_error("SATNERF_KERNELS=avx2 but cpu lacks avx2+fma");
      return Isa::Avx2;
    }
  }
  return detail::cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa>& active_slot() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

Isa detect() { return detail::cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar; }

Isa active_isa() { return active_slot().load(std::memory_order_relaxed); }

void set_active(Isa isa) {
  if (isa == Isa::Avx2 && !detail::cpu_has_avx2())
    throw std::runtime_error("cpu lacks avx2+fma");
  active_slot().store(isa, std::memory_order_relaxed);
}

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "?";
}

template <>
const Table<float>& table<float>(Isa isa) {
  return isa == Isa::Avx2 ? detail::avx2_table<float>()
                          : detail::scalar_table<float>();
}

template <>
const Table<double>& table<double>(Isa isa) {
  return isa == Isa::Avx2 ? detail::avx2_table<double>()
                          : detail::scalar_table<double>();
}

}  // namespace satnerf::kernels
