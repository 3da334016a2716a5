#pragma once

#include <cstddef>

// Hot numeric inner loops: one scalar reference implementation and one AVX2
// implementation per kernel, selected at runtime. Everything above this layer
// (tensor ops, the renderer, the optimizer) calls through the active table,
// so results are reproducible for a given machine and selection.
//
// All matrices are row-major and dense. Reduction order inside each kernel is
// fixed and independent of how the caller batches rows, which keeps per-row
// results bit-identical across batch sizes on a given path.

namespace satnerf::kernels {

enum class Isa { Scalar, Avx2 };

template <typename T>
struct Table {
  // c[m x n] = a[m x k] * b[k x n]
  void (*gemm)(const T* a, const T* b, T* c, size_t m, size_t k, size_t n);
  // c[m x n] = a[m x k] * b[n x k]^T
  void (*gemm_bt)(const T* a, const T* b, T* c, size_t m, size_t k, size_t n);
  // c[k x n] += a[m x k]^T * b[m x n]
  void (*gemm_at_acc)(const T* a, const T* b, T* c, size_t m, size_t k,
                      size_t n);
  // out[j] += sum_i a[i, j]
  void (*col_sum_acc)(const T* a, T* out, size_t m, size_t n);

  void (*add)(const T* a, const T* b, T* c, size_t n);
  void (*sub)(const T* a, const T* b, T* c, size_t n);
  void (*mul)(const T* a, const T* b, T* c, size_t n);
  void (*fmadd)(const T* a, const T* b, T* c, size_t n);  // c += a * b
  void (*scale)(const T* a, T s, T* c, size_t n);
  void (*axpy)(T s, const T* x, T* y, size_t n);  // y += s * x

  void (*vsin)(const T* x, T* y, size_t n);
  void (*vcos)(const T* x, T* y, size_t n);
  void (*vsincos)(const T* x, T* s, T* c, size_t n);
  void (*vexp)(const T* x, T* y, size_t n);
  void (*vlog)(const T* x, T* y, size_t n);
  void (*vsigmoid)(const T* x, T* y, size_t n);
  void (*vsoftplus)(const T* x, T* y, size_t n);

  // c[i, :] = a[i, :] + b[0, :] for every row
  void (*add_rowvec)(const T* a, const T* b, T* c, size_t m, size_t n);

  T (*sum)(const T* x, size_t n);
  bool (*all_finite)(const T* x, size_t n);

  // Bias-corrected Adam update. bc1 = 1 - beta1^t, bc2 = 1 - beta2^t.
  void (*adam)(T* p, const T* g, T* m, T* v, size_t n, T lr, T beta1, T beta2,
               T eps, T bc1, T bc2);
};

// Best ISA supported by the running CPU (honors SATNERF_KERNELS=scalar|avx2).
Isa detect();
Isa active_isa();
void set_active(Isa isa);
const char* isa_name(Isa isa);

template <typename T>
const Table<T>& table(Isa isa);

template <typename T>
inline const Table<T>& active() {
  return table<T>(active_isa());
}

namespace detail {
template <typename T>
const Table<T>& scalar_table();
template <typename T>
const Table<T>& avx2_table();  // valid only if detect() >= Avx2
bool cpu_has_avx2();
}  // namespace detail

}  // namespace satnerf::kernels
