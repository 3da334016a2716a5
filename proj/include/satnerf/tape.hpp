#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace satnerf::ad {

struct ShapeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonFiniteValue : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonScalarLoss : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense rank-2 tensor; scalars are 1x1, vectors are nx1 or 1xn.
template <typename T>
struct Tensor {
  size_t rows = 0, cols = 0;
  std::vector<T> v;

  Tensor() = default;
  Tensor(size_t r, size_t c) : rows(r), cols(c), v(r * c, T(0)) {}
  static Tensor scalar(T x) {
    Tensor t(1, 1);
    t.v[0] = x;
    return t;
  }
  size_t size() const { return rows * cols; }
  T& at(size_t r, size_t c) { return v[r * cols + c]; }
  T at(size_t r, size_t c) const { return v[r * cols + c]; }
  T* data() { return v.data(); }
  const T* data() const { return v.data(); }
};

// Reverse-mode tape. Operations evaluate eagerly through the active kernel
// table and record enough to pull gradients back. backward() walks nodes in
// reverse creation order exactly once, so accumulation order is fixed.
template <typename T>
class Tape {
 public:
  using Id = int32_t;

  Tape() = default;

  // Leaves. track=true marks a node whose gradient will be read afterwards.
  Id leaf(Tensor<T> value, bool track = false);
  Id constant(Tensor<T> value) { return leaf(std::move(value), false); }
  Id scalar(T x) { return leaf(Tensor<T>::scalar(x), false); }

  // primitives
  Id matmul(Id a, Id b);                // [m,k]x[k,n]
  Id add(Id a, Id b);                   // same shape
  Id add_rowvec(Id a, Id b);            // [m,n] + [1,n]
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);                   // same shape
  Id mul_colvec(Id a, Id b);            // [m,n] * [m,1]
  Id scalar_mul(Id a, T s);
  Id scalar_add(Id a, T s);
  Id sin(Id a);
  Id sin_scaled(Id a, T s);  // sin(s * a), one fused node
  Id exp(Id a);
  Id log(Id a);
  Id sigmoid(Id a);
  Id softplus(Id a);
  Id square(Id a);
  Id sum(Id a);                         // -> 1x1
  Id mean(Id a);                        // -> 1x1
  Id sum_cols(Id a);                    // [m,n] -> [m,1]
  Id sum_groups(Id a, size_t group);    // [g*G, n] -> [G, n]
  Id cumprod_excl_groups(Id a, size_t group);  // [g*G,1]: prod of predecessors
  Id concat_cols(Id a, Id b);           // [m,p]+[m,q] -> [m,p+q]
  Id slice_cols(Id a, size_t lo, size_t hi);
  Id gather_rows(Id table, std::vector<int32_t> idx);  // [n,d], idx[m] -> [m,d]

  const Tensor<T>& value(Id id) const { return nodes_[id].val; }
  T scalar_value(Id id) const { return nodes_[id].val.v[0]; }

  // Reverse sweep from a scalar loss; gradients retrievable for any node
  // reachable from a tracked leaf. A tracked node the loss never touched
  // reads as an all-zero gradient.
  void backward(Id loss);
  const Tensor<T>& grad(Id id);

  size_t node_count() const { return nodes_.size(); }

  // Per-op finite checks (on by default; every op output is scanned).
  void set_check_finite(bool on) { check_finite_ = on; }

 private:
  enum class Op : uint8_t {
    Leaf, Matmul, Add, AddRow, Sub, Mul, MulCol, ScalarMul, ScalarAdd,
    Sin, SinScaled, Exp, Log, Sigmoid, Softplus, Square, Sum, Mean, SumCols, SumGroups,
    CumprodExcl, Concat, SliceCols, Gather,
  };

  struct Node {
    Op op = Op::Leaf;
    Id a = -1, b = -1;
    Tensor<T> val;
    Tensor<T> grad;
    Tensor<T> aux;  // saved activation (cos for the sine ops)
    T s = T(0);
    size_t group = 0, lo = 0, hi = 0;
    std::vector<int32_t> idx;
    bool needs_grad = false;
  };

  Id push(Node n, const char* opname);
  bool needs(Id a, Id b = -1) const {
    return (a >= 0 && nodes_[a].needs_grad) || (b >= 0 && nodes_[b].needs_grad);
  }
  Tensor<T>& grad_buf(Id id);

  std::vector<Node> nodes_;
  bool check_finite_ = true;
};

using TapeF = Tape<float>;
using TapeD = Tape<double>;

}  // namespace satnerf::ad
