#include "satnerf/tape.hpp"

#include <cmath>
#include <cstring>

#include "satnerf/kernels.hpp"

namespace satnerf::ad {

namespace {
template <typename T>
const kernels::Table<T>& kk() {
  return kernels::active<T>();
}

template <typename T>
void transpose(const Tensor<T>& a, Tensor<T>& out) {
  out = Tensor<T>(a.cols, a.rows);
  for (size_t i = 0; i < a.rows; ++i)
    for (size_t j = 0; j < a.cols; ++j) out.v[j * a.rows + i] = a.v[i * a.cols + j];
}
}  // namespace

template <typename T>
typename Tape<T>::Id Tape<T>::push(Node n, const char* opname) {
  if (check_finite_ && !kk<T>().all_finite(n.val.data(), n.val.size()))
    throw NonFiniteValue(std::string("non-finite value out of ") + opname);
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

template <typename T>
typename Tape<T>::Id Tape<T>::leaf(Tensor<T> value, bool track) {
  Node n;
  n.op = Op::Leaf;
  n.val = std::move(value);
  n.needs_grad = track;
  return push(std::move(n), "leaf");
}

template <typename T>
typename Tape<T>::Id Tape<T>::matmul(Id a, Id b) {
  const auto& ta = nodes_[a].val;
  const auto& tb = nodes_[b].val;
  if (ta.cols != tb.rows) throw ShapeMismatch("matmul: inner dims differ");
  Node n;
  n.op = Op::Matmul;
  n.a = a;
  n.b = b;
  n.needs_grad = needs(a, b);
  n.val = Tensor<T>(ta.rows, tb.cols);
  kk<T>().gemm(ta.data(), tb.data(), n.val.data(), ta.rows, ta.cols, tb.cols);
  return push(std::move(n), "matmul");
}

template <typename T>
typename Tape<T>::Id Tape<T>::add(Id a, Id b) {
  const auto& ta = nodes_[a].val;
  const auto& tb = nodes_[b].val;
  if (ta.rows != tb.rows || ta.cols != tb.cols)
    throw ShapeMismatch("add: shapes differ");
  Node n;
  n.op = Op::Add;
  n.a = a;
  n.b = b;
  n.needs_grad = needs(a, b);
  n.val = Tensor<T>(ta.rows, ta.cols);
  kk<T>().add(ta.data(), tb.data(), n.val.data(), ta.size());
  return push(std::move(n), "add");
}

template <typename T>
typename Tape<T>::Id Tape<T>::add_rowvec(Id a, Id b) {
  const auto& ta = nodes_[a].val;
  const auto& tb = nodes_[b].val;
  if (tb.rows != 1 || tb.cols != ta.cols)
    throw ShapeMismatch("add_rowvec: want [1,n]");
  Node n;
  n.op = Op::AddRow;
  n.a = a;
  n.b = b;
  n.needs_grad = needs(a, b);
  n.val = Tensor<T>(ta.rows, ta.cols);
  kk<T>().add_rowvec(ta.data(), tb.data(), n.val.data(), ta.rows, ta.cols);
  return push(std::move(n), "add_rowvec");
}

template <typename T>
typename Tape<T>::Id Tape<T>::sub(Id a, Id b) {
  const auto& ta = nodes_[a].val;
  const auto& tb = nodes_[b].val;
  if (ta.rows != tb.rows || ta.cols != tb.cols)
    throw ShapeMismatch("sub: shapes differ");
  Node n;
  n.op = Op::Sub;
  n.a = a;
  n.b = b;
  n.needs_grad = needs(a, b);
  n.val = Tensor<T>(ta.rows, ta.cols);
  kk<T>().sub(ta.data(), tb.data(), n.val.data(), ta.size());
  return push(std::move(n), "sub");
}

template <typename T>
typename Tape<T>::Id Tape<T>::mul(Id a, Id b) {
  const auto& ta = nodes_[a].val;
  const auto& tb = nodes_[b].val;
  if (ta.rows != tb.rows || ta.cols != tb.cols)
    throw ShapeMismatch("mul: shapes differ");
  Node n;
  n.op = Op::Mul;
  n.a = a;
  n.b = b;
  n.needs_grad = needs(a, b);
  n.val = Tensor<T>(ta.rows, ta.cols);
  kk<T>().mul(ta.data(), tb.data(), n.val.data(), ta.size());
  return push(std::move(n), "mul");
}

template <typename T>
typename Tape<T>::Id Tape<T>::mul_colvec(Id a, Id b) {
  const auto& ta = nodes_[a].val;
  const auto& tb = nodes_[b].val;
  if (tb.cols != 1 || tb.rows != ta.rows)
    throw ShapeMismatch("mul_colvec: want [m,1]");
  Node n;
  n.op = Op::MulCol;
  n.a = a;
  n.b = b;
  n.needs_grad = needs(a, b);
  n.val = Tensor<T>(ta.rows, ta.cols);
  for (size_t i = 0; i < ta.rows; ++i) {
    const T s = tb.v[i];
    const T* src_row = ta.data() + i * ta.cols;
    T* dst_row = n.val.data() + i * ta.cols;
    for (size_t j = 0; j < ta.cols; ++j) dst_row[j] = src_row[j] * s;
  }
  return push(std::move(n), "mul_colvec");
}

template <typename T>
typename Tape<T>::Id Tape<T>::scalar_mul(Id a, T s) {
  const auto& ta = nodes_[a].val;
  Node n;
  n.op = Op::ScalarMul;
  n.a = a;
  n.s = s;
  n.needs_grad = needs(a);
  n.val = Tensor<T>(ta.rows, ta.cols);
  kk<T>().scale(ta.data(), s, n.val.data(), ta.size());
  return push(std::move(n), "scalar_mul");
}

template <typename T>
typename Tape<T>::Id Tape<T>::scalar_add(Id a, T s) {
  const auto& ta = nodes_[a].val;
  Node n;
  n.op = Op::ScalarAdd;
  n.a = a;
  n.s = s;
  n.needs_grad = needs(a);
  n.val = Tensor<T>(ta.rows, ta.cols);
  for (size_t i = 0; i < ta.size(); ++i) n.val.v[i] = ta.v[i] + s;
  return push(std::move(n), "scalar_add");
}

#define UNARY_OP(fname, OPTAG, kern)                       \
  template <typename T>                                    \
  typename Tape<T>::Id Tape<T>::fname(Id a) {              \
    const auto& ta = nodes_[a].val;                        \
    Node n;                                                \
    n.op = Op::OPTAG;                                      \
    n.a = a;                                               \
    n.needs_grad = needs(a);                               \
    n.val = Tensor<T>(ta.rows, ta.cols);                   \
    kk<T>().kern(ta.data(), n.val.data(), ta.size());      \
    return push(std::move(n), #fname);                     \
  }

template <typename T>
typename Tape<T>::Id Tape<T>::sin(Id a) {
  const auto& ta = nodes_[a].val;
  Node n;
  n.op = Op::Sin;
  n.a = a;
  n.needs_grad = needs(a);
  n.val = Tensor<T>(ta.rows, ta.cols);
  if (n.needs_grad) {
    n.aux = Tensor<T>(ta.rows, ta.cols);
    kk<T>().vsincos(ta.data(), n.val.data(), n.aux.data(), ta.size());
  } else {
    kk<T>().vsin(ta.data(), n.val.data(), ta.size());
  }
  return push(std::move(n), "sin");
}

template <typename T>
typename Tape<T>::Id Tape<T>::sin_scaled(Id a, T s) {
  const auto& ta = nodes_[a].val;
  Node n;
  n.op = Op::SinScaled;
  n.a = a;
  n.s = s;
  n.needs_grad = needs(a);
  n.val = Tensor<T>(ta.rows, ta.cols);
  Tensor<T> scaled(ta.rows, ta.cols);
  kk<T>().scale(ta.data(), s, scaled.data(), ta.size());
  if (n.needs_grad) {
    n.aux = Tensor<T>(ta.rows, ta.cols);
    kk<T>().vsincos(scaled.data(), n.val.data(), n.aux.data(), ta.size());
  } else {
    kk<T>().vsin(scaled.data(), n.val.data(), ta.size());
  }
  return push(std::move(n), "sin_scaled");
}

UNARY_OP(exp, Exp, vexp)
UNARY_OP(log, Log, vlog)
UNARY_OP(sigmoid, Sigmoid, vsigmoid)
UNARY_OP(softplus, Softplus, vsoftplus)
#undef UNARY_OP

template <typename T>
typename Tape<T>::Id Tape<T>::square(Id a) {
  const auto& ta = nodes_[a].val;
  Node n;
  n.op = Op::Square;
  n.a = a;
  n.needs_grad = needs(a);
  n.val = Tensor<T>(ta.rows, ta.cols);
  kk<T>().mul(ta.data(), ta.data(), n.val.data(), ta.size());
  return push(std::move(n), "square");
}

template <typename T>
typename Tape<T>::Id Tape<T>::sum(Id a) {
  const auto& ta = nodes_[a].val;
  Node n;
  n.op = Op::Sum;
  n.a = a;
  n.needs_grad = needs(a);
  n.val = Tensor<T>::scalar(kk<T>().sum(ta.data(), ta.size()));
  return push(std::move(n), "sum");
}

template <typename T>
typename Tape<T>::Id Tape<T>::mean(Id a) {
  const auto& ta = nodes_[a].val;
  Node n;
  n.op = Op::Mean;
  n.a = a;
  n.needs_grad = needs(a);
  n.val = Tensor<T>::scalar(kk<T>().sum(ta.data(), ta.size()) /
                            static_cast<T>(ta.size()));
  return push(std::move(n), "mean");
}

template <typename T>
typename Tape<T>::Id Tape<T>::sum_cols(Id a) {
  const auto& ta = nodes_[a].val;
  Node n;
  n.op = Op::SumCols;
  n.a = a;
  n.needs_grad = needs(a);
  n.val = Tensor<T>(ta.rows, 1);
  for (size_t i = 0; i < ta.rows; ++i)
    n.val.v[i] = kk<T>().sum(ta.data() + i * ta.cols, ta.cols);
  return push(std::move(n), "sum_cols");
}

template <typename T>
typename Tape<T>::Id Tape<T>::sum_groups(Id a, size_t group) {
  const auto& ta = nodes_[a].val;
  if (group == 0 || ta.rows % group != 0)
    throw ShapeMismatch("sum_groups: rows not divisible by group");
  Node n;
  n.op = Op::SumGroups;
  n.a = a;
  n.group = group;
  n.needs_grad = needs(a);
  const size_t ng = ta.rows / group;
  n.val = Tensor<T>(ng, ta.cols);
  for (size_t g = 0; g < ng; ++g) {
    T* out = n.val.data() + g * ta.cols;
    kk<T>().col_sum_acc(ta.data() + g * group * ta.cols, out, group, ta.cols);
  }
  return push(std::move(n), "sum_groups");
}

template <typename T>
typename Tape<T>::Id Tape<T>::cumprod_excl_groups(Id a, size_t group) {
  const auto& ta = nodes_[a].val;
  if (ta.cols != 1 || group == 0 || ta.rows % group != 0)
    throw ShapeMismatch("cumprod_excl_groups: want [g*G,1]");
  Node n;
  n.op = Op::CumprodExcl;
  n.a = a;
  n.group = group;
  n.needs_grad = needs(a);
  n.val = Tensor<T>(ta.rows, 1);
  const size_t ng = ta.rows / group;
  for (size_t g = 0; g < ng; ++g) {
    const T* x = ta.data() + g * group;
    T* y = n.val.data() + g * group;
    T run = T(1);
    for (size_t i = 0; i < group; ++i) {
      y[i] = run;
      run *= x[i];
    }
  }
  return push(std::move(n), "cumprod_excl_groups");
}

template <typename T>
typename Tape<T>::Id Tape<T>::concat_cols(Id a, Id b) {
  const auto& ta = nodes_[a].val;
  const auto& tb = nodes_[b].val;
  if (ta.rows != tb.rows) throw ShapeMismatch("concat_cols: row mismatch");
  Node n;
  n.op = Op::Concat;
  n.a = a;
  n.b = b;
  n.needs_grad = needs(a, b);
  n.val = Tensor<T>(ta.rows, ta.cols + tb.cols);
  for (size_t i = 0; i < ta.rows; ++i) {
    std::memcpy(n.val.data() + i * n.val.cols, ta.data() + i * ta.cols,
                ta.cols * sizeof(T));
    std::memcpy(n.val.data() + i * n.val.cols + ta.cols,
                tb.data() + i * tb.cols, tb.cols * sizeof(T));
  }
  return push(std::move(n), "concat_cols");
}

template <typename T>
typename Tape<T>::Id Tape<T>::slice_cols(Id a, size_t lo, size_t hi) {
  const auto& ta = nodes_[a].val;
  if (lo >= hi || hi > ta.cols) throw ShapeMismatch("slice_cols: bad range");
  Node n;
  n.op = Op::SliceCols;
  n.a = a;
  n.lo = lo;
  n.hi = hi;
  n.needs_grad = needs(a);
  n.val = Tensor<T>(ta.rows, hi - lo);
  for (size_t i = 0; i < ta.rows; ++i)
    std::memcpy(n.val.data() + i * n.val.cols, ta.data() + i * ta.cols + lo,
                (hi - lo) * sizeof(T));
  return push(std::move(n), "slice_cols");
}

template <typename T>
typename Tape<T>::Id Tape<T>::gather_rows(Id table, std::vector<int32_t> idx) {
  const auto& tt = nodes_[table].val;
  Node n;
  n.op = Op::Gather;
  n.a = table;
  n.needs_grad = needs(table);
  n.val = Tensor<T>(idx.size(), tt.cols);
  for (size_t i = 0; i < idx.size(); ++i) {
    const auto r = idx[i];
    if (r < 0 || static_cast<size_t>(r) >= tt.rows)
      throw ShapeMismatch("gather_rows: index out of range");
    std::memcpy(n.val.data() + i * tt.cols, tt.data() + r * tt.cols,
                tt.cols * sizeof(T));
  }
  n.idx = std::move(idx);
  return push(std::move(n), "gather_rows");
}

template <typename T>
Tensor<T>& Tape<T>::grad_buf(Id id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Tensor<T>(n.val.rows, n.val.cols);
  return n.grad;
}

template <typename T>
const Tensor<T>& Tape<T>::grad(Id id) {
  if (nodes_[id].grad.size() == 0) {
    if (!nodes_[id].needs_grad)
      throw std::runtime_error("grad: node is not tracked");
    return grad_buf(id);  // tracked but unreached by the loss: zeros
  }
  return nodes_[id].grad;
}

template <typename T>
void Tape<T>::backward(Id loss) {
  if (nodes_[loss].val.size() != 1)
    throw NonScalarLoss("backward: loss must be a scalar");
  grad_buf(loss).v[0] = T(1);

  const auto& K = kk<T>();
  Tensor<T> scratch;

  for (Id id = loss; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    const Tensor<T>& g = n.grad;
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::Matmul: {
        const Node& na = nodes_[n.a];
        const Node& nb = nodes_[n.b];
        if (na.needs_grad) {
          transpose(nb.val, scratch);  // [n,k]
          Tensor<T> tmp(na.val.rows, na.val.cols);
          K.gemm(g.data(), scratch.data(), tmp.data(), g.rows, g.cols,
                 scratch.cols);
          Tensor<T>& ga = grad_buf(n.a);
          K.add(ga.data(), tmp.data(), ga.data(), ga.size());
        }
        if (nb.needs_grad) {
          Tensor<T>& gb = grad_buf(n.b);
          K.gemm_at_acc(na.val.data(), g.data(), gb.data(), na.val.rows,
                        na.val.cols, g.cols);
        }
        break;
      }
      case Op::Add: {
        if (nodes_[n.a].needs_grad) {
          Tensor<T>& ga = grad_buf(n.a);
          K.add(ga.data(), g.data(), ga.data(), ga.size());
        }
        if (nodes_[n.b].needs_grad) {
          Tensor<T>& gb = grad_buf(n.b);
          K.add(gb.data(), g.data(), gb.data(), gb.size());
        }
        break;
      }
      case Op::AddRow: {
        if (nodes_[n.a].needs_grad) {
          Tensor<T>& ga = grad_buf(n.a);
          K.add(ga.data(), g.data(), ga.data(), ga.size());
        }
        if (nodes_[n.b].needs_grad) {
          Tensor<T>& gb = grad_buf(n.b);
          K.col_sum_acc(g.data(), gb.data(), g.rows, g.cols);
        }
        break;
      }
      case Op::Sub: {
        if (nodes_[n.a].needs_grad) {
          Tensor<T>& ga = grad_buf(n.a);
          K.add(ga.data(), g.data(), ga.data(), ga.size());
        }
        if (nodes_[n.b].needs_grad) {
          Tensor<T>& gb = grad_buf(n.b);
          K.axpy(T(-1), g.data(), gb.data(), gb.size());
        }
        break;
      }
      case Op::Mul: {
        if (nodes_[n.a].needs_grad)
          K.fmadd(g.data(), nodes_[n.b].val.data(), grad_buf(n.a).data(),
                  g.size());
        if (nodes_[n.b].needs_grad)
          K.fmadd(g.data(), nodes_[n.a].val.data(), grad_buf(n.b).data(),
                  g.size());
        break;
      }
      case Op::MulCol: {
        const Tensor<T>& av = nodes_[n.a].val;
        const Tensor<T>& bv = nodes_[n.b].val;
        if (nodes_[n.a].needs_grad) {
          Tensor<T>& ga = grad_buf(n.a);
          for (size_t i = 0; i < av.rows; ++i) {
            const T s = bv.v[i];
            const T* gr = g.data() + i * av.cols;
            T* out = ga.data() + i * av.cols;
            for (size_t j = 0; j < av.cols; ++j) out[j] += s * gr[j];
          }
        }
        if (nodes_[n.b].needs_grad) {
          Tensor<T>& gb = grad_buf(n.b);
          for (size_t i = 0; i < av.rows; ++i) {
            T acc = T(0);
            const T* gr = g.data() + i * av.cols;
            const T* ar = av.data() + i * av.cols;
            for (size_t jj = 0; jj < av.cols; ++jj) acc += gr[jj] * ar[jj];
            gb.v[i] += acc;
          }
        }
        break;
      }
      case Op::ScalarMul:
        if (nodes_[n.a].needs_grad)
          K.axpy(n.s, g.data(), grad_buf(n.a).data(), g.size());
        break;
      case Op::ScalarAdd:
        if (nodes_[n.a].needs_grad) {
          Tensor<T>& ga = grad_buf(n.a);
          K.add(ga.data(), g.data(), ga.data(), ga.size());
        }
        break;
      case Op::Sin: {
        if (nodes_[n.a].needs_grad)
          K.fmadd(g.data(), n.aux.data(), grad_buf(n.a).data(), g.size());
        break;
      }
      case Op::SinScaled: {
        // d/dx sin(s x) = s cos(s x); cos saved at forward time
        if (nodes_[n.a].needs_grad) {
          Tensor<T>& ga = grad_buf(n.a);
          const T s = n.s;
          const T* gv = g.data();
          const T* cv = n.aux.data();
          T* out = ga.data();
          for (size_t i = 0; i < g.size(); ++i) out[i] += s * gv[i] * cv[i];
        }
        break;
      }
      case Op::Exp:
        if (nodes_[n.a].needs_grad)
          K.fmadd(g.data(), n.val.data(), grad_buf(n.a).data(), g.size());
        break;
      case Op::Log: {
        if (nodes_[n.a].needs_grad) {
          const Tensor<T>& av = nodes_[n.a].val;
          Tensor<T>& ga = grad_buf(n.a);
          for (size_t i = 0; i < av.size(); ++i) ga.v[i] += g.v[i] / av.v[i];
        }
        break;
      }
      case Op::Sigmoid: {
        // saved output: d = y (1 - y)
        if (nodes_[n.a].needs_grad) {
          Tensor<T>& ga = grad_buf(n.a);
          const T* y = n.val.data();
          for (size_t i = 0; i < n.val.size(); ++i)
            ga.v[i] += g.v[i] * y[i] * (T(1) - y[i]);
        }
        break;
      }
      case Op::Softplus: {
        // d = sigmoid(x), recomputed from the saved input
        if (nodes_[n.a].needs_grad) {
          const Tensor<T>& av = nodes_[n.a].val;
          scratch = Tensor<T>(av.rows, av.cols);
          K.vsigmoid(av.data(), scratch.data(), av.size());
          K.fmadd(g.data(), scratch.data(), grad_buf(n.a).data(), g.size());
        }
        break;
      }
      case Op::Square: {
        if (nodes_[n.a].needs_grad) {
          const Tensor<T>& av = nodes_[n.a].val;
          Tensor<T>& ga = grad_buf(n.a);
          for (size_t i = 0; i < av.size(); ++i)
            ga.v[i] += T(2) * g.v[i] * av.v[i];
        }
        break;
      }
      case Op::Sum: {
        if (nodes_[n.a].needs_grad) {
          Tensor<T>& ga = grad_buf(n.a);
          const T gv = g.v[0];
          for (size_t i = 0; i < ga.size(); ++i) ga.v[i] += gv;
        }
        break;
      }
      case Op::Mean: {
        if (nodes_[n.a].needs_grad) {
          Tensor<T>& ga = grad_buf(n.a);
          const T gv = g.v[0] / static_cast<T>(ga.size());
          for (size_t i = 0; i < ga.size(); ++i) ga.v[i] += gv;
        }
        break;
      }
      case Op::SumCols: {
        if (nodes_[n.a].needs_grad) {
          Tensor<T>& ga = grad_buf(n.a);
          for (size_t i = 0; i < ga.rows; ++i) {
            const T gv = g.v[i];
            T* row = ga.data() + i * ga.cols;
            for (size_t jj = 0; jj < ga.cols; ++jj) row[jj] += gv;
          }
        }
        break;
      }
      case Op::SumGroups: {
        if (nodes_[n.a].needs_grad) {
          Tensor<T>& ga = grad_buf(n.a);
          for (size_t i = 0; i < ga.rows; ++i) {
            const T* gr = g.data() + (i / n.group) * g.cols;
            T* out = ga.data() + i * ga.cols;
            for (size_t j = 0; j < ga.cols; ++j) out[j] += gr[j];
          }
        }
        break;
      }
      case Op::CumprodExcl: {
        // O(group^2) per group, division-free: factors can underflow to 0.
        if (nodes_[n.a].needs_grad) {
          const Tensor<T>& x = nodes_[n.a].val;
          Tensor<T>& ga = grad_buf(n.a);
          const size_t ng = x.rows / n.group;
          for (size_t grp = 0; grp < ng; ++grp) {
            const T* xv = x.data() + grp * n.group;
            const T* gv = g.data() + grp * n.group;
            T* gout = ga.data() + grp * n.group;
            T prefix = T(1);  // prod of x[k], k < j
            for (size_t j = 0; j < n.group; ++j) {
              T p = prefix;
              T acc = T(0);
              for (size_t i = j + 1; i < n.group; ++i) {
                acc += gv[i] * p;
                p *= xv[i];
              }
              gout[j] += acc;
              prefix *= xv[j];
            }
          }
        }
        break;
      }
      case Op::Concat: {
        const size_t ac = nodes_[n.a].val.cols;
        const size_t bc = nodes_[n.b].val.cols;
        if (nodes_[n.a].needs_grad) {
          Tensor<T>& ga = grad_buf(n.a);
          for (size_t i = 0; i < ga.rows; ++i) {
            const T* gr = g.data() + i * (ac + bc);
            T* out = ga.data() + i * ac;
            for (size_t j = 0; j < ac; ++j) out[j] += gr[j];
          }
        }
        if (nodes_[n.b].needs_grad) {
          Tensor<T>& gb = grad_buf(n.b);
          for (size_t i = 0; i < gb.rows; ++i) {
            const T* gr = g.data() + i * (ac + bc) + ac;
            T* out = gb.data() + i * bc;
            for (size_t j = 0; j < bc; ++j) out[j] += gr[j];
          }
        }
        break;
      }
      case Op::SliceCols: {
        if (nodes_[n.a].needs_grad) {
          Tensor<T>& ga = grad_buf(n.a);
          const size_t w = n.hi - n.lo;
          for (size_t i = 0; i < ga.rows; ++i) {
            const T* gr = g.data() + i * w;
            T* out = ga.data() + i * ga.cols + n.lo;
            for (size_t j = 0; j < w; ++j) out[j] += gr[j];
          }
        }
        break;
      }
      case Op::Gather: {
        if (nodes_[n.a].needs_grad) {
          Tensor<T>& ga = grad_buf(n.a);
          for (size_t i = 0; i < n.idx.size(); ++i) {
            const T* gr = g.data() + i * g.cols;
            T* out = ga.data() + n.idx[i] * ga.cols;
            for (size_t j = 0; j < g.cols; ++j) out[j] += gr[j];
          }
        }
        break;
      }
    }
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace satnerf::ad
