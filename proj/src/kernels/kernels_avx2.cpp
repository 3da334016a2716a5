#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>

#include "satnerf/kernels.hpp"

// AVX2 + FMA kernel variants. Compiled with -mavx2 -mfma; callers reach this
// translation unit only after runtime cpu detection.
//
// The float transcendentals use the classic Cody-Waite range reduction and
// minimax polynomials (cephes coefficients), accurate to a few ulp over the
// ranges the models use (|x| < 1e4 for sin/cos). Double transcendentals fall
// back to libm loops; they sit on cold paths.

namespace satnerf::kernels {
namespace {

inline __m256i tail_mask_epi32(size_t r) {
  alignas(32) static const int32_t lut[16] = {-1, -1, -1, -1, -1, -1, -1, -1,
                                              0,  0,  0,  0,  0,  0,  0,  0};
  return _mm256_loadu_si256(
      reinterpret_cast<const __m256i*>(lut + (8 - static_cast<int>(r))));
}

inline __m256i tail_mask_epi64(size_t r) {
  alignas(32) static const int64_t lut[8] = {-1, -1, -1, -1, 0, 0, 0, 0};
  return _mm256_loadu_si256(
      reinterpret_cast<const __m256i*>(lut + (4 - static_cast<int>(r))));
}

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
  lo = _mm_add_ss(lo, _mm_shuffle_ps(lo, lo, 1));
  return _mm_cvtss_f32(lo);
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

// ---------------------------------------------------------------------------
// float32 gemm: broadcast-A row form, C[i,:] accumulated in registers over a
// 32-column tile, 2 rows at a time. Per-element accumulation order is the
// sequential k order for every m, so batching does not change results.
// ---------------------------------------------------------------------------

void gemm_f32(const float* a, const float* b, float* c, size_t m, size_t k,
              size_t n) {
  const size_t ntile = n & ~size_t(31);
  size_t i = 0;
  for (; i + 2 <= m; i += 2) {
    const float* a0 = a + i * k;
    const float* a1 = a0 + k;
    float* c0 = c + i * n;
    float* c1 = c0 + n;
    for (size_t j = 0; j < ntile; j += 32) {
      __m256 acc00 = _mm256_setzero_ps(), acc01 = _mm256_setzero_ps();
      __m256 acc02 = _mm256_setzero_ps(), acc03 = _mm256_setzero_ps();
      __m256 acc10 = _mm256_setzero_ps(), acc11 = _mm256_setzero_ps();
      __m256 acc12 = _mm256_setzero_ps(), acc13 = _mm256_setzero_ps();
      const float* bp = b + j;
      for (size_t p = 0; p < k; ++p, bp += n) {
        const __m256 b0 = _mm256_loadu_ps(bp);
        const __m256 b1 = _mm256_loadu_ps(bp + 8);
        const __m256 b2 = _mm256_loadu_ps(bp + 16);
        const __m256 b3 = _mm256_loadu_ps(bp + 24);
        const __m256 va0 = _mm256_broadcast_ss(a0 + p);
        acc00 = _mm256_fmadd_ps(va0, b0, acc00);
        acc01 = _mm256_fmadd_ps(va0, b1, acc01);
        acc02 = _mm256_fmadd_ps(va0, b2, acc02);
        acc03 = _mm256_fmadd_ps(va0, b3, acc03);
        const __m256 va1 = _mm256_broadcast_ss(a1 + p);
        acc10 = _mm256_fmadd_ps(va1, b0, acc10);
        acc11 = _mm256_fmadd_ps(va1, b1, acc11);
        acc12 = _mm256_fmadd_ps(va1, b2, acc12);
        acc13 = _mm256_fmadd_ps(va1, b3, acc13);
      }
      _mm256_storeu_ps(c0 + j, acc00);
      _mm256_storeu_ps(c0 + j + 8, acc01);
      _mm256_storeu_ps(c0 + j + 16, acc02);
      _mm256_storeu_ps(c0 + j + 24, acc03);
      _mm256_storeu_ps(c1 + j, acc10);
      _mm256_storeu_ps(c1 + j + 8, acc11);
      _mm256_storeu_ps(c1 + j + 16, acc12);
      _mm256_storeu_ps(c1 + j + 24, acc13);
    }
    for (size_t j = ntile; j < n; j += 8) {
      const size_t r = n - j < 8 ? n - j : 8;
      const __m256i msk = tail_mask_epi32(r);
      __m256 acc0 = _mm256_setzero_ps();
      __m256 acc1 = _mm256_setzero_ps();
      const float* bp = b + j;
      for (size_t p = 0; p < k; ++p, bp += n) {
        const __m256 bv = _mm256_maskload_ps(bp, msk);
        acc0 = _mm256_fmadd_ps(_mm256_broadcast_ss(a0 + p), bv, acc0);
        acc1 = _mm256_fmadd_ps(_mm256_broadcast_ss(a1 + p), bv, acc1);
      }
      _mm256_maskstore_ps(c0 + j, msk, acc0);
      _mm256_maskstore_ps(c1 + j, msk, acc1);
    }
  }
  if (i < m) {
    const float* a0 = a + i * k;
    float* c0 = c + i * n;
    for (size_t j = 0; j < ntile; j += 32) {
      __m256 acc0 = _mm256_setzero_ps(), acc1 = _mm256_setzero_ps();
      __m256 acc2 = _mm256_setzero_ps(), acc3 = _mm256_setzero_ps();
      const float* bp = b + j;
      for (size_t p = 0; p < k; ++p, bp += n) {
        const __m256 va = _mm256_broadcast_ss(a0 + p);
        acc0 = _mm256_fmadd_ps(va, _mm256_loadu_ps(bp), acc0);
        acc1 = _mm256_fmadd_ps(va, _mm256_loadu_ps(bp + 8), acc1);
        acc2 = _mm256_fmadd_ps(va, _mm256_loadu_ps(bp + 16), acc2);
        acc3 = _mm256_fmadd_ps(va, _mm256_loadu_ps(bp + 24), acc3);
      }
      _mm256_storeu_ps(c0 + j, acc0);
      _mm256_storeu_ps(c0 + j + 8, acc1);
      _mm256_storeu_ps(c0 + j + 16, acc2);
      _mm256_storeu_ps(c0 + j + 24, acc3);
    }
    for (size_t j = ntile; j < n; j += 8) {
      const size_t r = n - j < 8 ? n - j : 8;
      const __m256i msk = tail_mask_epi32(r);
      __m256 acc = _mm256_setzero_ps();
      const float* bp = b + j;
      for (size_t p = 0; p < k; ++p, bp += n)
        acc = _mm256_fmadd_ps(_mm256_broadcast_ss(a0 + p),
                              _mm256_maskload_ps(bp, msk), acc);
      _mm256_maskstore_ps(c0 + j, msk, acc);
    }
  }
}

void gemm_f64(const double* a, const double* b, double* c, size_t m, size_t k,
              size_t n) {
  const size_t ntile = n & ~size_t(15);
  for (size_t i = 0; i < m; ++i) {
    const double* a0 = a + i * k;
    double* c0 = c + i * n;
    for (size_t j = 0; j < ntile; j += 16) {
      __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
      __m256d acc2 = _mm256_setzero_pd(), acc3 = _mm256_setzero_pd();
      const double* bp = b + j;
      for (size_t p = 0; p < k; ++p, bp += n) {
        const __m256d va = _mm256_broadcast_sd(a0 + p);
        acc0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(bp), acc0);
        acc1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(bp + 4), acc1);
        acc2 = _mm256_fmadd_pd(va, _mm256_loadu_pd(bp + 8), acc2);
        acc3 = _mm256_fmadd_pd(va, _mm256_loadu_pd(bp + 12), acc3);
      }
      _mm256_storeu_pd(c0 + j, acc0);
      _mm256_storeu_pd(c0 + j + 4, acc1);
      _mm256_storeu_pd(c0 + j + 8, acc2);
      _mm256_storeu_pd(c0 + j + 12, acc3);
    }
    for (size_t j = ntile; j < n; j += 4) {
      const size_t r = n - j < 4 ? n - j : 4;
      const __m256i msk = tail_mask_epi64(r);
      __m256d acc = _mm256_setzero_pd();
      const double* bp = b + j;
      for (size_t p = 0; p < k; ++p, bp += n)
        acc = _mm256_fmadd_pd(_mm256_broadcast_sd(a0 + p),
                              _mm256_maskload_pd(bp, msk), acc);
      _mm256_maskstore_pd(c0 + j, msk, acc);
    }
  }
}

// c[i,j] = dot(a_i, b_j); lanewise partial sums combined in a fixed order.
void gemm_bt_f32(const float* a, const float* b, float* c, size_t m, size_t k,
                 size_t n) {
  const size_t kv = k & ~size_t(7);
  for (size_t i = 0; i < m; ++i) {
    const float* ai = a + i * k;
    float* ci = c + i * n;
    for (size_t j = 0; j < n; ++j) {
      const float* bj = b + j * k;
      __m256 acc = _mm256_setzero_ps();
      for (size_t p = 0; p < kv; p += 8)
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(ai + p), _mm256_loadu_ps(bj + p),
                              acc);
      float s = hsum(acc);
      for (size_t p = kv; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = s;
    }
  }
}

void gemm_bt_f64(const double* a, const double* b, double* c, size_t m,
                 size_t k, size_t n) {
  const size_t kv = k & ~size_t(3);
  for (size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      __m256d acc = _mm256_setzero_pd();
      for (size_t p = 0; p < kv; p += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(ai + p), _mm256_loadu_pd(bj + p),
                              acc);
      double s = hsum(acc);
      for (size_t p = kv; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = s;
    }
  }
}

// c[k x n] += a^T b. Row tiles accumulate in registers so the c row is
// touched once per tile instead of once per input row; i stays sequential
// inside each element's reduction.
void gemm_at_acc_f32(const float* a, const float* b, float* c, size_t m,
                     size_t k, size_t n) {
  constexpr size_t kTile = 32;
  const size_t nv = n & ~size_t(31);
  for (size_t i0 = 0; i0 < m; i0 += kTile) {
    const size_t i1 = std::min(m, i0 + kTile);
    for (size_t p = 0; p < k; ++p) {
      float* cp = c + p * n;
      size_t j = 0;
      for (; j < nv; j += 32) {
        __m256 acc0 = _mm256_setzero_ps(), acc1 = _mm256_setzero_ps();
        __m256 acc2 = _mm256_setzero_ps(), acc3 = _mm256_setzero_ps();
        for (size_t i = i0; i < i1; ++i) {
          const __m256 va = _mm256_broadcast_ss(a + i * k + p);
          const float* bi = b + i * n + j;
          acc0 = _mm256_fmadd_ps(va, _mm256_loadu_ps(bi), acc0);
          acc1 = _mm256_fmadd_ps(va, _mm256_loadu_ps(bi + 8), acc1);
          acc2 = _mm256_fmadd_ps(va, _mm256_loadu_ps(bi + 16), acc2);
          acc3 = _mm256_fmadd_ps(va, _mm256_loadu_ps(bi + 24), acc3);
        }
        _mm256_storeu_ps(cp + j, _mm256_add_ps(_mm256_loadu_ps(cp + j), acc0));
        _mm256_storeu_ps(cp + j + 8,
                         _mm256_add_ps(_mm256_loadu_ps(cp + j + 8), acc1));
        _mm256_storeu_ps(cp + j + 16,
                         _mm256_add_ps(_mm256_loadu_ps(cp + j + 16), acc2));
        _mm256_storeu_ps(cp + j + 24,
                         _mm256_add_ps(_mm256_loadu_ps(cp + j + 24), acc3));
      }
      for (; j < n; ++j) {
        float acc = 0.0f;
        for (size_t i = i0; i < i1; ++i) acc += a[i * k + p] * b[i * n + j];
        cp[j] += acc;
      }
    }
  }
}

void gemm_at_acc_f64(const double* a, const double* b, double* c, size_t m,
                     size_t k, size_t n) {
  const size_t nv = n & ~size_t(3);
  for (size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* bi = b + i * n;
    for (size_t p = 0; p < k; ++p) {
      const __m256d va = _mm256_broadcast_sd(ai + p);
      double* cp = c + p * n;
      size_t j = 0;
      for (; j < nv; j += 4)
        _mm256_storeu_pd(
            cp + j,
            _mm256_fmadd_pd(va, _mm256_loadu_pd(bi + j), _mm256_loadu_pd(cp + j)));
      for (; j < n; ++j) cp[j] += ai[p] * bi[j];
    }
  }
}

void col_sum_acc_f32(const float* a, float* out, size_t m, size_t n) {
  const size_t nv = n & ~size_t(7);
  for (size_t i = 0; i < m; ++i) {
    const float* ai = a + i * n;
    size_t j = 0;
    for (; j < nv; j += 8)
      _mm256_storeu_ps(out + j,
                       _mm256_add_ps(_mm256_loadu_ps(out + j), _mm256_loadu_ps(ai + j)));
    for (; j < n; ++j) out[j] += ai[j];
  }
}

void col_sum_acc_f64(const double* a, double* out, size_t m, size_t n) {
  const size_t nv = n & ~size_t(3);
  for (size_t i = 0; i < m; ++i) {
    const double* ai = a + i * n;
    size_t j = 0;
    for (; j < nv; j += 4)
      _mm256_storeu_pd(out + j,
                       _mm256_add_pd(_mm256_loadu_pd(out + j), _mm256_loadu_pd(ai + j)));
    for (; j < n; ++j) out[j] += ai[j];
  }
}

// ---------------------------------------------------------------------------
// elementwise arithmetic
// ---------------------------------------------------------------------------

#define EW_BINOP_F32(name, vop, sop)                                   \
  void name(const float* a, const float* b, float* c, size_t n) {      \
    size_t i = 0;                                                      \
    for (; i + 8 <= n; i += 8)                                         \
      _mm256_storeu_ps(c + i,                                          \
                       vop(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i))); \
    for (; i < n; ++i) c[i] = sop;                                     \
  }

#define EW_BINOP_F64(name, vop, sop)                                   \
  void name(const double* a, const double* b, double* c, size_t n) {   \
    size_t i = 0;                                                      \
    for (; i + 4 <= n; i += 4)                                         \
      _mm256_storeu_pd(c + i,                                          \
                       vop(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i))); \
    for (; i < n; ++i) c[i] = sop;                                     \
  }

EW_BINOP_F32(add_f32, _mm256_add_ps, a[i] + b[i])
EW_BINOP_F32(sub_f32, _mm256_sub_ps, a[i] - b[i])
EW_BINOP_F32(mul_f32, _mm256_mul_ps, a[i] * b[i])
EW_BINOP_F64(add_f64, _mm256_add_pd, a[i] + b[i])
EW_BINOP_F64(sub_f64, _mm256_sub_pd, a[i] - b[i])
EW_BINOP_F64(mul_f64, _mm256_mul_pd, a[i] * b[i])

#undef EW_BINOP_F32
#undef EW_BINOP_F64

void fmadd_f32(const float* a, const float* b, float* c, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(c + i, _mm256_fmadd_ps(_mm256_loadu_ps(a + i),
                                            _mm256_loadu_ps(b + i),
                                            _mm256_loadu_ps(c + i)));
  for (; i < n; ++i) c[i] = std::fma(a[i], b[i], c[i]);
}

void fmadd_f64(const double* a, const double* b, double* c, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(c + i, _mm256_fmadd_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i),
                                            _mm256_loadu_pd(c + i)));
  for (; i < n; ++i) c[i] = std::fma(a[i], b[i], c[i]);
}

void scale_f32(const float* a, float s, float* c, size_t n) {
  const __m256 vs = _mm256_set1_ps(s);
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(c + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), vs));
  for (; i < n; ++i) c[i] = a[i] * s;
}

void scale_f64(const double* a, double s, double* c, size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(c + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vs));
  for (; i < n; ++i) c[i] = a[i] * s;
}

void axpy_f32(float s, const float* x, float* y, size_t n) {
  const __m256 vs = _mm256_set1_ps(s);
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(
        y + i, _mm256_fmadd_ps(vs, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) y[i] = std::fma(s, x[i], y[i]);
}

void axpy_f64(double s, const double* x, double* y, size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(
        y + i, _mm256_fmadd_pd(vs, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] = std::fma(s, x[i], y[i]);
}

// ---------------------------------------------------------------------------
// float32 transcendentals
// ---------------------------------------------------------------------------

inline __m256 exp256(__m256 x) {
  const __m256 hi = _mm256_set1_ps(88.3762626647950f);
  const __m256 lo = _mm256_set1_ps(-87.3365478515625f);
  x = _mm256_min_ps(_mm256_max_ps(x, lo), hi);

  __m256 fx = _mm256_fmadd_ps(x, _mm256_set1_ps(1.44269504088896341f),
                              _mm256_set1_ps(0.5f));
  fx = _mm256_floor_ps(fx);

  x = _mm256_fnmadd_ps(fx, _mm256_set1_ps(0.693359375f), x);
  x = _mm256_fnmadd_ps(fx, _mm256_set1_ps(-2.12194440e-4f), x);

  const __m256 z = _mm256_mul_ps(x, x);
  __m256 y = _mm256_set1_ps(1.9875691500e-4f);
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.3981999507e-3f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(8.3334519073e-3f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(4.1665795894e-2f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.6666665459e-1f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(5.0000001201e-1f));
  y = _mm256_fmadd_ps(y, z, x);
  y = _mm256_add_ps(y, _mm256_set1_ps(1.0f));

  __m256i imm = _mm256_cvtps_epi32(fx);
  imm = _mm256_add_epi32(imm, _mm256_set1_epi32(0x7f));
  imm = _mm256_slli_epi32(imm, 23);
  return _mm256_mul_ps(y, _mm256_castsi256_ps(imm));
}

inline __m256 log256(__m256 x) {
  const __m256 one = _mm256_set1_ps(1.0f);
  const __m256 invalid = _mm256_cmp_ps(x, _mm256_setzero_ps(), _CMP_LE_OQ);
  x = _mm256_max_ps(x, _mm256_castsi256_ps(_mm256_set1_epi32(0x00800000)));

  __m256i imm = _mm256_srli_epi32(_mm256_castps_si256(x), 23);
  imm = _mm256_sub_epi32(imm, _mm256_set1_epi32(0x7f));
  __m256 e = _mm256_add_ps(_mm256_cvtepi32_ps(imm), one);

  x = _mm256_and_ps(x, _mm256_castsi256_ps(_mm256_set1_epi32(~0x7f800000)));
  x = _mm256_or_ps(x, _mm256_set1_ps(0.5f));

  const __m256 below = _mm256_cmp_ps(x, _mm256_set1_ps(0.707106781186547524f),
                                     _CMP_LT_OQ);
  e = _mm256_sub_ps(e, _mm256_and_ps(one, below));
  x = _mm256_add_ps(x, _mm256_and_ps(x, below));
  x = _mm256_sub_ps(x, one);

  const __m256 z = _mm256_mul_ps(x, x);
  __m256 y = _mm256_set1_ps(7.0376836292e-2f);
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(-1.1514610310e-1f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.1676998740e-1f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(-1.2420140846e-1f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.4249322787e-1f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(-1.6668057665e-1f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(2.0000714765e-1f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(-2.4999993993e-1f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(3.3333331174e-1f));
  y = _mm256_mul_ps(_mm256_mul_ps(y, x), z);

  y = _mm256_fmadd_ps(e, _mm256_set1_ps(-2.12194440e-4f), y);
  y = _mm256_fnmadd_ps(_mm256_set1_ps(0.5f), z, y);
  x = _mm256_add_ps(x, y);
  x = _mm256_fmadd_ps(e, _mm256_set1_ps(0.693359375f), x);
  return _mm256_or_ps(x, invalid);  // NaN for x <= 0
}

inline void sincos256(__m256 x, __m256* out_sin, __m256* out_cos) {
  const __m256 sign_mask = _mm256_set1_ps(-0.0f);
  __m256 sign_sin = _mm256_and_ps(x, sign_mask);
  x = _mm256_andnot_ps(sign_mask, x);

  __m256 y = _mm256_mul_ps(x, _mm256_set1_ps(1.27323954473516f));  // 4/pi
  __m256i q = _mm256_cvttps_epi32(y);
  q = _mm256_add_epi32(q, _mm256_set1_epi32(1));
  q = _mm256_and_si256(q, _mm256_set1_epi32(~1));
  y = _mm256_cvtepi32_ps(q);

  const __m256i four = _mm256_set1_epi32(4);
  __m256 swap_sin = _mm256_castsi256_ps(
      _mm256_slli_epi32(_mm256_and_si256(q, four), 29));
  __m256 sign_cos = _mm256_castsi256_ps(_mm256_slli_epi32(
      _mm256_andnot_si256(_mm256_sub_epi32(q, _mm256_set1_epi32(2)), four),
      29));
  const __m256 poly_mask = _mm256_castsi256_ps(_mm256_cmpeq_epi32(
      _mm256_and_si256(q, _mm256_set1_epi32(2)), _mm256_setzero_si256()));
  sign_sin = _mm256_xor_ps(sign_sin, swap_sin);

  x = _mm256_fnmadd_ps(y, _mm256_set1_ps(0.78515625f), x);
  x = _mm256_fnmadd_ps(y, _mm256_set1_ps(2.4187564849853515625e-4f), x);
  x = _mm256_fnmadd_ps(y, _mm256_set1_ps(3.77489497744594108e-8f), x);

  const __m256 z = _mm256_mul_ps(x, x);

  __m256 pc = _mm256_set1_ps(2.443315711809948e-5f);
  pc = _mm256_fmadd_ps(pc, z, _mm256_set1_ps(-1.388731625493765e-3f));
  pc = _mm256_fmadd_ps(pc, z, _mm256_set1_ps(4.166664568298827e-2f));
  pc = _mm256_mul_ps(_mm256_mul_ps(pc, z), z);
  pc = _mm256_fnmadd_ps(z, _mm256_set1_ps(0.5f), pc);
  pc = _mm256_add_ps(pc, _mm256_set1_ps(1.0f));

  __m256 ps = _mm256_set1_ps(-1.9515295891e-4f);
  ps = _mm256_fmadd_ps(ps, z, _mm256_set1_ps(8.3321608736e-3f));
  ps = _mm256_fmadd_ps(ps, z, _mm256_set1_ps(-1.6666654611e-1f));
  ps = _mm256_mul_ps(_mm256_mul_ps(ps, z), x);
  ps = _mm256_add_ps(ps, x);

  const __m256 sin_sel =
      _mm256_or_ps(_mm256_and_ps(poly_mask, ps), _mm256_andnot_ps(poly_mask, pc));
  const __m256 cos_sel =
      _mm256_sub_ps(_mm256_add_ps(pc, ps), sin_sel);

  *out_sin = _mm256_xor_ps(sin_sel, sign_sin);
  *out_cos = _mm256_xor_ps(cos_sel, sign_cos);
}

void vsin_f32(const float* x, float* y, size_t n) {
  size_t i = 0;
  __m256 s, c;
  for (; i + 8 <= n; i += 8) {
    sincos256(_mm256_loadu_ps(x + i), &s, &c);
    _mm256_storeu_ps(y + i, s);
  }
  if (i < n) {
    alignas(32) float buf[8] = {0};
    for (size_t j = i; j < n; ++j) buf[j - i] = x[j];
    sincos256(_mm256_load_ps(buf), &s, &c);
    _mm256_store_ps(buf, s);
    for (size_t j = i; j < n; ++j) y[j] = buf[j - i];
  }
}

void vcos_f32(const float* x, float* y, size_t n) {
  size_t i = 0;
  __m256 s, c;
  for (; i + 8 <= n; i += 8) {
    sincos256(_mm256_loadu_ps(x + i), &s, &c);
    _mm256_storeu_ps(y + i, c);
  }
  if (i < n) {
    alignas(32) float buf[8] = {0};
    for (size_t j = i; j < n; ++j) buf[j - i] = x[j];
    sincos256(_mm256_load_ps(buf), &s, &c);
    _mm256_store_ps(buf, c);
    for (size_t j = i; j < n; ++j) y[j] = buf[j - i];
  }
}

void vsincos_f32(const float* x, float* so, float* co, size_t n) {
  size_t i = 0;
  __m256 s, c;
  for (; i + 8 <= n; i += 8) {
    sincos256(_mm256_loadu_ps(x + i), &s, &c);
    _mm256_storeu_ps(so + i, s);
    _mm256_storeu_ps(co + i, c);
  }
  if (i < n) {
    alignas(32) float bx[8] = {0}, bs[8], bc[8];
    for (size_t j = i; j < n; ++j) bx[j - i] = x[j];
    sincos256(_mm256_load_ps(bx), &s, &c);
    _mm256_store_ps(bs, s);
    _mm256_store_ps(bc, c);
    for (size_t j = i; j < n; ++j) {
      so[j] = bs[j - i];
      co[j] = bc[j - i];
    }
  }
}

void add_rowvec_f32(const float* a, const float* b, float* c, size_t m,
                    size_t n) {
  const size_t nv = n & ~size_t(7);
  for (size_t i = 0; i < m; ++i) {
    const float* ai = a + i * n;
    float* ci = c + i * n;
    size_t j = 0;
    for (; j < nv; j += 8)
      _mm256_storeu_ps(
          ci + j, _mm256_add_ps(_mm256_loadu_ps(ai + j), _mm256_loadu_ps(b + j)));
    for (; j < n; ++j) ci[j] = ai[j] + b[j];
  }
}

void vexp_f32(const float* x, float* y, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, exp256(_mm256_loadu_ps(x + i)));
  if (i < n) {
    alignas(32) float buf[8] = {0};
    for (size_t j = i; j < n; ++j) buf[j - i] = x[j];
    _mm256_store_ps(buf, exp256(_mm256_load_ps(buf)));
    for (size_t j = i; j < n; ++j) y[j] = buf[j - i];
  }
}

void vlog_f32(const float* x, float* y, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, log256(_mm256_loadu_ps(x + i)));
  if (i < n) {
    alignas(32) float buf[8] = {1, 1, 1, 1, 1, 1, 1, 1};
    for (size_t j = i; j < n; ++j) buf[j - i] = x[j];
    _mm256_store_ps(buf, log256(_mm256_load_ps(buf)));
    for (size_t j = i; j < n; ++j) y[j] = buf[j - i];
  }
}

inline __m256 sigmoid256(__m256 x) {
  const __m256 e = exp256(_mm256_xor_ps(x, _mm256_set1_ps(-0.0f)));
  return _mm256_div_ps(_mm256_set1_ps(1.0f),
                       _mm256_add_ps(_mm256_set1_ps(1.0f), e));
}

void vsigmoid_f32(const float* x, float* y, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, sigmoid256(_mm256_loadu_ps(x + i)));
  if (i < n) {
    alignas(32) float buf[8] = {0};
    for (size_t j = i; j < n; ++j) buf[j - i] = x[j];
    _mm256_store_ps(buf, sigmoid256(_mm256_load_ps(buf)));
    for (size_t j = i; j < n; ++j) y[j] = buf[j - i];
  }
}

// softplus(x) = log1p(exp(-|x|)) + max(x, 0). log1p is computed with a short
// series below t = 1e-3 to keep relative accuracy on tiny outputs.
inline __m256 softplus256(__m256 x) {
  const __m256 ax = _mm256_andnot_ps(_mm256_set1_ps(-0.0f), x);
  const __m256 t = exp256(_mm256_xor_ps(ax, _mm256_set1_ps(-0.0f)));
  const __m256 one = _mm256_set1_ps(1.0f);
  const __m256 big = log256(_mm256_add_ps(one, t));
  // t - t^2/2 + t^3/3
  __m256 small = _mm256_fmadd_ps(t, _mm256_set1_ps(1.0f / 3.0f),
                                 _mm256_set1_ps(-0.5f));
  small = _mm256_fmadd_ps(_mm256_mul_ps(small, t), t, t);
  const __m256 use_small = _mm256_cmp_ps(t, _mm256_set1_ps(1e-3f), _CMP_LT_OQ);
  const __m256 l1p = _mm256_blendv_ps(big, small, use_small);
  return _mm256_add_ps(l1p, _mm256_max_ps(x, _mm256_setzero_ps()));
}

void vsoftplus_f32(const float* x, float* y, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, softplus256(_mm256_loadu_ps(x + i)));
  if (i < n) {
    alignas(32) float buf[8] = {0};
    for (size_t j = i; j < n; ++j) buf[j - i] = x[j];
    _mm256_store_ps(buf, softplus256(_mm256_load_ps(buf)));
    for (size_t j = i; j < n; ++j) y[j] = buf[j - i];
  }
}

// double transcendentals: libm loops (cold path; accuracy over speed).
void vsin_f64(const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = std::sin(x[i]);
}
void vcos_f64(const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = std::cos(x[i]);
}
void vsincos_f64(const double* x, double* s, double* c, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    s[i] = std::sin(x[i]);
    c[i] = std::cos(x[i]);
  }
}
void add_rowvec_f64(const double* a, const double* b, double* c, size_t m,
                    size_t n) {
  const size_t nv = n & ~size_t(3);
  for (size_t i = 0; i < m; ++i) {
    const double* ai = a + i * n;
    double* ci = c + i * n;
    size_t j = 0;
    for (; j < nv; j += 4)
      _mm256_storeu_pd(
          ci + j, _mm256_add_pd(_mm256_loadu_pd(ai + j), _mm256_loadu_pd(b + j)));
    for (; j < n; ++j) ci[j] = ai[j] + b[j];
  }
}
void vexp_f64(const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = std::exp(x[i]);
}
void vlog_f64(const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = std::log(x[i]);
}
void vsigmoid_f64(const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
}
void vsoftplus_f64(const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i)
    y[i] = std::log1p(std::exp(-std::abs(x[i]))) + (x[i] > 0 ? x[i] : 0.0);
}

// ---------------------------------------------------------------------------
// reductions / checks / optimizer
// ---------------------------------------------------------------------------

float sum_f32(const float* x, size_t n) {
  __m256 acc = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
  float s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double sum_f64(const double* x, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

// x*0 == 0 exactly iff x is finite.
bool all_finite_f32(const float* x, size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 t = _mm256_mul_ps(_mm256_loadu_ps(x + i), zero);
    if (_mm256_movemask_ps(_mm256_cmp_ps(t, zero, _CMP_NEQ_UQ))) return false;
  }
  for (; i < n; ++i)
    if (!std::isfinite(x[i])) return false;
  return true;
}

bool all_finite_f64(const double* x, size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d t = _mm256_mul_pd(_mm256_loadu_pd(x + i), zero);
    if (_mm256_movemask_pd(_mm256_cmp_pd(t, zero, _CMP_NEQ_UQ))) return false;
  }
  for (; i < n; ++i)
    if (!std::isfinite(x[i])) return false;
  return true;
}

void adam_f32(float* p, const float* g, float* m, float* v, size_t n, float lr,
              float beta1, float beta2, float eps, float bc1, float bc2) {
  const __m256 vb1 = _mm256_set1_ps(beta1);
  const __m256 vb2 = _mm256_set1_ps(beta2);
  const __m256 vq1 = _mm256_set1_ps(1.0f - beta1);
  const __m256 vq2 = _mm256_set1_ps(1.0f - beta2);
  const __m256 veps = _mm256_set1_ps(eps);
  const __m256 vlr = _mm256_set1_ps(lr);
  const __m256 rb1 = _mm256_set1_ps(1.0f / bc1);
  const __m256 rb2 = _mm256_set1_ps(1.0f / bc2);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 gi = _mm256_loadu_ps(g + i);
    __m256 mi = _mm256_loadu_ps(m + i);
    __m256 vi = _mm256_loadu_ps(v + i);
    mi = _mm256_fmadd_ps(vb1, mi, _mm256_mul_ps(vq1, gi));
    vi = _mm256_fmadd_ps(vb2, vi, _mm256_mul_ps(vq2, _mm256_mul_ps(gi, gi)));
    _mm256_storeu_ps(m + i, mi);
    _mm256_storeu_ps(v + i, vi);
    const __m256 mhat = _mm256_mul_ps(mi, rb1);
    const __m256 vhat = _mm256_mul_ps(vi, rb2);
    const __m256 den = _mm256_add_ps(_mm256_sqrt_ps(vhat), veps);
    const __m256 upd = _mm256_div_ps(_mm256_mul_ps(vlr, mhat), den);
    _mm256_storeu_ps(p + i, _mm256_sub_ps(_mm256_loadu_ps(p + i), upd));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0f - beta2) * g[i] * g[i];
    p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
  }
}

void adam_f64(double* p, const double* g, double* m, double* v, size_t n,
              double lr, double beta1, double beta2, double eps, double bc1,
              double bc2) {
  const __m256d vb1 = _mm256_set1_pd(beta1);
  const __m256d vb2 = _mm256_set1_pd(beta2);
  const __m256d vq1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d vq2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d rb1 = _mm256_set1_pd(1.0 / bc1);
  const __m256d rb2 = _mm256_set1_pd(1.0 / bc2);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gi = _mm256_loadu_pd(g + i);
    __m256d mi = _mm256_loadu_pd(m + i);
    __m256d vi = _mm256_loadu_pd(v + i);
    mi = _mm256_fmadd_pd(vb1, mi, _mm256_mul_pd(vq1, gi));
    vi = _mm256_fmadd_pd(vb2, vi, _mm256_mul_pd(vq2, _mm256_mul_pd(gi, gi)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d mhat = _mm256_mul_pd(mi, rb1);
    const __m256d vhat = _mm256_mul_pd(vi, rb2);
    const __m256d den = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
    const __m256d upd = _mm256_div_pd(_mm256_mul_pd(vlr, mhat), den);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), upd));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
  }
}

}  // namespace

namespace detail {

template <>
const Table<float>& avx2_table<float>() {
  static const Table<float> t = [] {
    Table<float> k;
    k.gemm = &gemm_f32;
    k.gemm_bt = &gemm_bt_f32;
    k.gemm_at_acc = &gemm_at_acc_f32;
    k.col_sum_acc = &col_sum_acc_f32;
    k.add = &add_f32;
    k.sub = &sub_f32;
    k.mul = &mul_f32;
    k.fmadd = &fmadd_f32;
    k.scale = &scale_f32;
    k.axpy = &axpy_f32;
    k.vsin = &vsin_f32;
    k.vcos = &vcos_f32;
    k.vsincos = &vsincos_f32;
    k.vexp = &vexp_f32;
    k.vlog = &vlog_f32;
    k.vsigmoid = &vsigmoid_f32;
    k.vsoftplus = &vsoftplus_f32;
    k.add_rowvec = &add_rowvec_f32;
    k.sum = &sum_f32;
    k.all_finite = &all_finite_f32;
    k.adam = &adam_f32;
    return k;
  }();
  return t;
}

template <>
const Table<double>& avx2_table<double>() {
  static const Table<double> t = [] {
    Table<double> k;
    k.gemm = &gemm_f64;
    k.gemm_bt = &gemm_bt_f64;
    k.gemm_at_acc = &gemm_at_acc_f64;
    k.col_sum_acc = &col_sum_acc_f64;
    k.add = &add_f64;
    k.sub = &sub_f64;
    k.mul = &mul_f64;
    k.fmadd = &fmadd_f64;
    k.scale = &scale_f64;
    k.axpy = &axpy_f64;
    k.vsin = &vsin_f64;
    k.vcos = &vcos_f64;
    k.vsincos = &vsincos_f64;
    k.vexp = &vexp_f64;
    k.vlog = &vlog_f64;
    k.vsigmoid = &vsigmoid_f64;
    k.vsoftplus = &vsoftplus_f64;
    k.add_rowvec = &add_rowvec_f64;
    k.sum = &sum_f64;
    k.all_finite = &all_finite_f64;
    k.adam = &adam_f64;
    return k;
  }();
  return t;
}

}  // namespace detail
}  // namespace satnerf::kernels
