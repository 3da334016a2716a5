#include <cmath>
#include <cstddef>

#include "satnerf/kernels.hpp"

// Reference kernels. Plain loops, sequential accumulation order; the AVX2
// variants are tested for agreement against these.

namespace satnerf::kernels {
namespace {

template <typename T>
void gemm(const T* a, const T* b, T* c, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    T* ci = c + i * n;
    for (size_t j = 0; j < n; ++j) ci[j] = T(0);
    const T* ai = a + i * k;
    for (size_t p = 0; p < k; ++p) {
      const T aip = ai[p];
      const T* bp = b + p * n;
      for (size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

template <typename T>
void gemm_bt(const T* a, const T* b, T* c, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    const T* ai = a + i * k;
    T* ci = c + i * n;
    for (size_t j = 0; j < n; ++j) {
      const T* bj = b + j * k;
      T acc = T(0);
      for (size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] = acc;
    }
  }
}

template <typename T>
void gemm_at_acc(const T* a, const T* b, T* c, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    const T* ai = a + i * k;
    const T* bi = b + i * n;
    for (size_t p = 0; p < k; ++p) {
      const T aip = ai[p];
      T* cp = c + p * n;
      for (size_t j = 0; j < n; ++j) cp[j] += aip * bi[j];
    }
  }
}

template <typename T>
void col_sum_acc(const T* a, T* out, size_t m, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    const T* ai = a + i * n;
    for (size_t j = 0; j < n; ++j) out[j] += ai[j];
  }
}

template <typename T>
void add(const T* a, const T* b, T* c, size_t n) {
  for (size_t i = 0; i < n; ++i) c[i] = a[i] + b[i];
}
template <typename T>
void sub(const T* a, const T* b, T* c, size_t n) {
  for (size_t i = 0; i < n; ++i) c[i] = a[i] - b[i];
}
template <typename T>
void mul(const T* a, const T* b, T* c, size_t n) {
  for (size_t i = 0; i < n; ++i) c[i] = a[i] * b[i];
}
template <typename T>
void fmadd(const T* a, const T* b, T* c, size_t n) {
  for (size_t i = 0; i < n; ++i) c[i] += a[i] * b[i];
}
template <typename T>
void scale(const T* a, T s, T* c, size_t n) {
  for (size_t i = 0; i < n; ++i) c[i] = a[i] * s;
}
template <typename T>
void axpy(T s, const T* x, T* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += s * x[i];
}

template <typename T>
void vsin(const T* x, T* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = std::sin(x[i]);
}
template <typename T>
void vcos(const T* x, T* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = std::cos(x[i]);
}
template <typename T>
void vsincos(const T* x, T* s, T* c, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    s[i] = std::sin(x[i]);
    c[i] = std::cos(x[i]);
  }
}
template <typename T>
void add_rowvec(const T* a, const T* b, T* c, size_t m, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    const T* ai = a + i * n;
    T* ci = c + i * n;
    for (size_t j = 0; j < n; ++j) ci[j] = ai[j] + b[j];
  }
}
template <typename T>
void vexp(const T* x, T* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = std::exp(x[i]);
}
template <typename T>
void vlog(const T* x, T* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = std::log(x[i]);
}
template <typename T>
void vsigmoid(const T* x, T* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = T(1) / (T(1) + std::exp(-x[i]));
}

// softplus(x) = log1p(exp(-|x|)) + max(x, 0); stable for large |x|.
template <typename T>
void vsoftplus(const T* x, T* y, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    const T v = x[i];
    y[i] = std::log1p(std::exp(-std::abs(v))) + (v > T(0) ? v : T(0));
  }
}

template <typename T>
T sum(const T* x, size_t n) {
  T acc = T(0);
  for (size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

template <typename T>
bool all_finite(const T* x, size_t n) {
  for (size_t i = 0; i < n; ++i)
    if (!std::isfinite(x[i])) return false;
  return true;
}

template <typename T>
void adam(T* p, const T* g, T* m, T* v, size_t n, T lr, T beta1, T beta2,
          T eps, T bc1, T bc2) {
  for (size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (T(1) - beta1) * g[i];
    v[i] = beta2 * v[i] + (T(1) - beta2) * g[i] * g[i];
    const T mhat = m[i] / bc1;
    const T vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

template <typename T>
Table<T> make_table() {
  Table<T> t;
  t.gemm = &gemm<T>;
  t.gemm_bt = &gemm_bt<T>;
  t.gemm_at_acc = &gemm_at_acc<T>;
  t.col_sum_acc = &col_sum_acc<T>;
  t.add = &add<T>;
  t.sub = &sub<T>;
  t.mul = &mul<T>;
  t.fmadd = &fmadd<T>;
  t.scale = &scale<T>;
  t.axpy = &axpy<T>;
  t.vsin = &vsin<T>;
  t.vcos = &vcos<T>;
  t.vsincos = &vsincos<T>;
  t.vexp = &vexp<T>;
  t.vlog = &vlog<T>;
  t.vsigmoid = &vsigmoid<T>;
  t.vsoftplus = &vsoftplus<T>;
  t.add_rowvec = &add_rowvec<T>;
  t.sum = &sum<T>;
  t.all_finite = &all_finite<T>;
  t.adam = &adam<T>;
  return t;
}

}  // namespace

namespace detail {

template <>
const Table<float>& scalar_table<float>() {
  static const Table<float> t = make_table<float>();
  return t;
}

template <>
const Table<double>& scalar_table<double>() {
  static const Table<double> t = make_table<double>();
  return t;
}

}  // namespace detail
}  // namespace satnerf::kernels
