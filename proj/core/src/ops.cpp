#include "sspfield/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sspfield/rng.hpp"

namespace sspfield::diff {
namespace {

Tape& same_tape(Tensor a, Tensor b) {
  if (a.tape == nullptr || a.tape != b.tape)
    throw ContractError("operands recorded on different tapes");
  return *a.tape;
}

void require_rank2(Tensor t, const char* what) {
  if (t.shape().size() != 2)
    throw ShapeError(std::string(what) + " must be a rank-2 tensor");
}

void require_rank1(Tensor t, const char* what) {
  if (t.shape().size() != 1)
    throw ShapeError(std::string(what) + " must be a rank-1 tensor");
}

double sigmoid_stable(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_stable(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

constexpr double kGeluC0 = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluC1 = 0.044715;

}  // namespace

Tensor matmul(Tensor a, Tensor b) {
  Tape& t = same_tape(a, b);
  require_rank2(a, "matmul lhs");
  require_rank2(b, "matmul rhs");
  int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) throw ShapeError("matmul inner dimensions disagree");
  bool ng = t.needs_grad(a.id) || t.needs_grad(b.id);
  int aid = a.id, bid = b.id;
  int oid = static_cast<int>(t.node_count());
  t.emit({m, n}, static_cast<std::size_t>(m) * n, ng,
         !ng ? std::function<void(Tape&)>() : [=](Tape& tp) {
           const auto& g = tp.grad(oid);
           const auto& av = tp.value(aid);
           const auto& bv = tp.value(bid);
           if (tp.needs_grad(aid)) {
             auto& ga = tp.grad(aid);
             for (int i = 0; i < m; ++i)
               for (int l = 0; l < k; ++l) {
                 double acc = 0.0;
                 for (int j = 0; j < n; ++j) acc += g[i * n + j] * bv[l * n + j];
                 ga[i * k + l] += acc;
               }
           }
           if (tp.needs_grad(bid)) {
             auto& gb = tp.grad(bid);
             for (int l = 0; l < k; ++l)
               for (int j = 0; j < n; ++j) {
                 double acc = 0.0;
                 for (int i = 0; i < m; ++i) acc += av[i * k + l] * g[i * n + j];
                 gb[l * n + j] += acc;
               }
           }
         });
  auto& out = t.value(oid);
  const auto& av = t.value(aid);
  const auto& bv = t.value(bid);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int l = 0; l < k; ++l) acc += av[i * k + l] * bv[l * n + j];
      out[i * n + j] = acc;
    }
  return Tensor{&t, oid};
}

Tensor matmul_nt(Tensor a, Tensor b) {
  Tape& t = same_tape(a, b);
  require_rank2(a, "matmul_nt lhs");
  require_rank2(b, "matmul_nt rhs");
  int m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k) throw ShapeError("matmul_nt inner dimensions disagree");
  bool ng = t.needs_grad(a.id) || t.needs_grad(b.id);
  int aid = a.id, bid = b.id;
  int oid = static_cast<int>(t.node_count());
  t.emit({m, n}, static_cast<std::size_t>(m) * n, ng,
         !ng ? std::function<void(Tape&)>() : [=](Tape& tp) {
           const auto& g = tp.grad(oid);
           const auto& av = tp.value(aid);
           const auto& bv = tp.value(bid);
           if (tp.needs_grad(aid)) {
             auto& ga = tp.grad(aid);
             for (int i = 0; i < m; ++i)
               for (int l = 0; l < k; ++l) {
                 double acc = 0.0;
                 for (int j = 0; j < n; ++j) acc += g[i * n + j] * bv[j * k + l];
                 ga[i * k + l] += acc;
               }
           }
           if (tp.needs_grad(bid)) {
             auto& gb = tp.grad(bid);
             for (int j = 0; j < n; ++j)
               for (int l = 0; l < k; ++l) {
                 double acc = 0.0;
                 for (int i = 0; i < m; ++i) acc += g[i * n + j] * av[i * k + l];
                 gb[j * k + l] += acc;
               }
           }
         });
  auto& out = t.value(oid);
  const auto& av = t.value(aid);
  const auto& bv = t.value(bid);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int l = 0; l < k; ++l) acc += av[i * k + l] * bv[j * k + l];
      out[i * n + j] = acc;
    }
  return Tensor{&t, oid};
}

namespace {

enum class EwKind { Add, Sub, Mul };

Tensor elementwise(Tensor a, Tensor b, EwKind kind) {
  Tape& t = same_tape(a, b);
  if (a.shape() != b.shape()) throw ShapeError("elementwise shapes differ");
  std::size_t n = a.size();
  bool ng = t.needs_grad(a.id) || t.needs_grad(b.id);
  int aid = a.id, bid = b.id;
  int oid = static_cast<int>(t.node_count());
  t.emit(a.shape(), n, ng,
         !ng ? std::function<void(Tape&)>() : [=](Tape& tp) {
           const auto& g = tp.grad(oid);
           switch (kind) {
             case EwKind::Add:
               if (tp.needs_grad(aid)) {
                 auto& ga = tp.grad(aid);
                 for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
               }
               if (tp.needs_grad(bid)) {
                 auto& gb = tp.grad(bid);
                 for (std::size_t i = 0; i < n; ++i) gb[i] += g[i];
               }
               break;
             case EwKind::Sub:
               if (tp.needs_grad(aid)) {
                 auto& ga = tp.grad(aid);
                 for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
               }
               if (tp.needs_grad(bid)) {
                 auto& gb = tp.grad(bid);
                 for (std::size_t i = 0; i < n; ++i) gb[i] -= g[i];
               }
               break;
             case EwKind::Mul: {
               const auto& av = tp.value(aid);
               const auto& bv = tp.value(bid);
               if (tp.needs_grad(aid)) {
                 auto& ga = tp.grad(aid);
                 for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * bv[i];
               }
               if (tp.needs_grad(bid)) {
                 auto& gb = tp.grad(bid);
                 for (std::size_t i = 0; i < n; ++i) gb[i] += g[i] * av[i];
               }
               break;
             }
           }
         });
  auto& out = t.value(oid);
  const auto& av = t.value(aid);
  const auto& bv = t.value(bid);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = kind == EwKind::Add   ? av[i] + bv[i]
             : kind == EwKind::Sub ? av[i] - bv[i]
                                   : av[i] * bv[i];
  return Tensor{&t, oid};
}

}  // namespace

Tensor add(Tensor a, Tensor b) { return elementwise(a, b, EwKind::Add); }
Tensor sub(Tensor a, Tensor b) { return elementwise(a, b, EwKind::Sub); }
Tensor mul(Tensor a, Tensor b) { return elementwise(a, b, EwKind::Mul); }

Tensor scale(Tensor a, double c) {
  Tape& t = *a.tape;
  std::size_t n = a.size();
  bool ng = t.needs_grad(a.id);
  int aid = a.id;
  int oid = static_cast<int>(t.node_count());
  t.emit(a.shape(), n, ng,
         !ng ? std::function<void(Tape&)>() : [=](Tape& tp) {
           const auto& g = tp.grad(oid);
           auto& ga = tp.grad(aid);
           for (std::size_t i = 0; i < n; ++i) ga[i] += c * g[i];
         });
  auto& out = t.value(oid);
  const auto& av = t.value(aid);
  for (std::size_t i = 0; i < n; ++i) out[i] = c * av[i];
  return Tensor{&t, oid};
}

Tensor mul_scalar(Tensor a, Tensor s) {
  Tape& t = same_tape(a, s);
  if (s.size() != 1) throw ShapeError("mul_scalar needs a size-1 scalar tensor");
  std::size_t n = a.size();
  bool ng = t.needs_grad(a.id) || t.needs_grad(s.id);
  int aid = a.id, sid = s.id;
  int oid = static_cast<int>(t.node_count());
  t.emit(a.shape(), n, ng,
         !ng ? std::function<void(Tape&)>() : [=](Tape& tp) {
           const auto& g = tp.grad(oid);
           const auto& av = tp.value(aid);
           double sv = tp.value(sid)[0];
           if (tp.needs_grad(aid)) {
             auto& ga = tp.grad(aid);
             for (std::size_t i = 0; i < n; ++i) ga[i] += sv * g[i];
           }
           if (tp.needs_grad(sid)) {
             double acc = 0.0;
             for (std::size_t i = 0; i < n; ++i) acc += av[i] * g[i];
             tp.grad(sid)[0] += acc;
           }
         });
  auto& out = t.value(oid);
  const auto& av = t.value(aid);
  double sv = t.value(sid)[0];
  for (std::size_t i = 0; i < n; ++i) out[i] = sv * av[i];
  return Tensor{&t, oid};
}

Tensor add_scalar(Tensor a, Tensor s) {
  Tape& t = same_tape(a, s);
  if (s.size() != 1) throw ShapeError("add_scalar needs a size-1 scalar tensor");
  std::size_t n = a.size();
  bool ng = t.needs_grad(a.id) || t.needs_grad(s.id);
  int aid = a.id, sid = s.id;
  int oid = static_cast<int>(t.node_count());
  t.emit(a.shape(), n, ng,
         !ng ? std::function<void(Tape&)>() : [=](Tape& tp) {
           const auto& g = tp.grad(oid);
           if (tp.needs_grad(aid)) {
             auto& ga = tp.grad(aid);
             for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
           }
           if (tp.needs_grad(sid)) {
             double acc = 0.0;
             for (std::size_t i = 0; i < n; ++i) acc += g[i];
             tp.grad(sid)[0] += acc;
           }
         });
  auto& out = t.value(oid);
  const auto& av = t.value(aid);
  double sv = t.value(sid)[0];
  for (std::size_t i = 0; i < n; ++i) out[i] = av[i] + sv;
  return Tensor{&t, oid};
}

Tensor add_rowvec(Tensor a, Tensor b) {
  Tape& t = same_tape(a, b);
  require_rank2(a, "add_rowvec matrix");
  require_rank1(b, "add_rowvec row vector");
  int m = a.dim(0), n = a.dim(1);
  if (b.dim(0) != n) throw ShapeError("row vector length does not match columns");
  bool ng = t.needs_grad(a.id) || t.needs_grad(b.id);
  int aid = a.id, bid = b.id;
  int oid = static_cast<int>(t.node_count());
  t.emit({m, n}, static_cast<std::size_t>(m) * n, ng,
         !ng ? std::function<void(Tape&)>() : [=](Tape& tp) {
           const auto& g = tp.grad(oid);
           if (tp.needs_grad(aid)) {
             auto& ga = tp.grad(aid);
             for (std::size_t i = 0; i < static_cast<std::size_t>(m) * n; ++i)
               ga[i] += g[i];
           }
           if (tp.needs_grad(bid)) {
             auto& gb = tp.grad(bid);
             for (int j = 0; j < n; ++j) {
               double acc = 0.0;
               for (int i = 0; i < m; ++i) acc += g[i * n + j];
               gb[j] += acc;
             }
           }
         });
  auto& out = t.value(oid);
  const auto& av = t.value(aid);
  const auto& bv = t.value(bid);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[i * n + j] = av[i * n + j] + bv[j];
  return Tensor{&t, oid};
}

Tensor reshape(Tensor a, std::vector<int> shape) {
  Tape& t = *a.tape;
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  if (n != a.size()) throw ShapeError("reshape changes element count");
  bool ng = t.needs_grad(a.id);
  int aid = a.id;
  int oid = static_cast<int>(t.node_count());
  t.emit(std::move(shape), n, ng,
         !ng ? std::function<void(Tape&)>() : [=](Tape& tp) {
           const auto& g = tp.grad(oid);
           auto& ga = tp.grad(aid);
           for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
         });
  t.value(oid) = t.value(aid);
  return Tensor{&t, oid};
}

Tensor concat_rows(Tensor a, Tensor b) {
  Tape& t = same_tape(a, b);
  require_rank2(a, "concat_rows lhs");
  require_rank2(b, "concat_rows rhs");
  int m1 = a.dim(0), m2 = b.dim(0), n = a.dim(1);
  if (b.dim(1) != n) throw ShapeError("concat_rows column counts differ");
  bool ng = t.needs_grad(a.id) || t.needs_grad(b.id);
  int aid = a.id, bid = b.id;
  int oid = static_cast<int>(t.node_count());
  t.emit({m1 + m2, n}, static_cast<std::size_t>(m1 + m2) * n, ng,
         !ng ? std::function<void(Tape&)>() : [=](Tape& tp) {
           const auto& g = tp.grad(oid);
           if (tp.needs_grad(aid)) {
             auto& ga = tp.grad(aid);
             for (std::size_t i = 0; i < static_cast<std::size_t>(m1) * n; ++i)
               ga[i] += g[i];
           }
           if (tp.needs_grad(bid)) {
             auto& gb = tp.grad(bid);
             std::size_t off = static_cast<std::size_t>(m1) * n;
             for (std::size_t i = 0; i < static_cast<std::size_t>(m2) * n; ++i)
               gb[i] += g[off + i];
           }
         });
  auto& out = t.value(oid);
  const auto& av = t.value(aid);
  const auto& bv = t.value(bid);
  std::copy(av.begin(), av.end(), out.begin());
  std::copy(bv.begin(), bv.end(), out.begin() + static_cast<std::ptrdiff_t>(av.size()));
  return Tensor{&t, oid};
}

Tensor concat_cols(Tensor a, Tensor b) {
  Tape& t = same_tape(a, b);
  require_rank2(a, "concat_cols lhs");
  require_rank2(b, "concat_cols rhs");
  int m = a.dim(0), n1 = a.dim(1), n2 = b.dim(1);
  if (b.dim(0) != m) throw ShapeError("concat_cols row counts differ");
  bool ng = t.needs_grad(a.id) || t.needs_grad(b.id);
  int aid = a.id, bid = b.id;
  int oid = static_cast<int>(t.node_count());
  int n = n1 + n2;
  t.emit({m, n}, static_cast<std::size_t>(m) * n, ng,
         !ng ? std::function<void(Tape&)>() : [=](Tape& tp) {
           const auto& g = tp.grad(oid);
           if (tp.needs_grad(aid)) {
             auto& ga = tp.grad(aid);
             for (int i = 0; i < m; ++i)
               for (int j = 0; j < n1; ++j) ga[i * n1 + j] += g[i * n + j];
           }
           if (tp.needs_grad(bid)) {
             auto& gb = tp.grad(bid);
             for (int i = 0; i < m; ++i)
               for (int j = 0; j < n2; ++j) gb[i * n2 + j] += g[i * n + n1 + j];
           }
         });
  auto& out = t.value(oid);
  const auto& av = t.value(aid);
  const auto& bv = t.value(bid);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n1; ++j) out[i * n + j] = av[i * n1 + j];
    for (int j = 0; j < n2; ++j) out[i * n + n1 + j] = bv[i * n2 + j];
  }
  return Tensor{&t, oid};
}

Tensor slice_rows(Tensor a, int r0, int r1) {
  Tape& t = *a.tape;
  require_rank2(a, "slice_rows input");
  int m = a.dim(0), n = a.dim(1);
  if (r0 < 0 || r1 > m || r0 >= r1) throw ShapeError("slice_rows range invalid");
  int mo = r1 - r0;
  bool ng = t.needs_grad(a.id);
  int aid = a.id;
  int oid = static_cast<int>(t.node_count());
  t.emit({mo, n}, static_cast<std::size_t>(mo) * n, ng,
         !ng ? std::function<void(Tape&)>() : [=](Tape& tp) {
           const auto& g = tp.grad(oid);
           auto& ga = tp.grad(aid);
           for (int i = 0; i < mo; ++i)
             for (int j = 0; j < n; ++j) ga[(r0 + i) * n + j] += g[i * n + j];
         });
  auto& out = t.value(oid);
  const auto& av = t.value(aid);
  for (int i = 0; i < mo; ++i)
    for (int j = 0; j < n; ++j) out[i * n + j] = av[(r0 + i) * n + j];
  return Tensor{&t, oid};
}

namespace {

enum class UnKind { Relu, Sigmoid, Gelu, Softplus };

Tensor unary(Tensor a, UnKind kind) {
  Tape& t = *a.tape;
  std::size_t n = a.size();
  bool ng = t.needs_grad(a.id);
  int aid = a.id;
  int oid = static_cast<int>(t.node_count());
  t.emit(a.shape(), n, ng,
         !ng ? std::function<void(Tape&)>() : [=](Tape& tp) {
           const auto& g = tp.grad(oid);
           const auto& x = tp.value(aid);
           const auto& y = tp.value(oid);
           auto& ga = tp.grad(aid);
           for (std::size_t i = 0; i < n; ++i) {
             double d = 0.0;
             switch (kind) {
               case UnKind::Relu: d = x[i] > 0.0 ? 1.0 : 0.0; break;
               case UnKind::Sigmoid: d = y[i] * (1.0 - y[i]); break;
               case UnKind::Gelu: {
                 double xi = x[i];
                 double inner = kGeluC0 * (xi + kGeluC1 * xi * xi * xi);
                 double th = std::tanh(inner);
                 d = 0.5 * (1.0 + th) +
                     0.5 * xi * (1.0 - th * th) * kGeluC0 *
                         (1.0 + 3.0 * kGeluC1 * xi * xi);
                 break;
               }
               case UnKind::Softplus: d = sigmoid_stable(x[i]); break;
             }
             ga[i] += d * g[i];
           }
         });
  auto& out = t.value(oid);
  const auto& x = t.value(aid);
  for (std::size_t i = 0; i < n; ++i) {
    switch (kind) {
      case UnKind::Relu: out[i] = x[i] > 0.0 ? x[i] : 0.0; break;
      case UnKind::Sigmoid: out[i] = sigmoid_stable(x[i]); break;
      case UnKind::Gelu: {
        double xi = x[i];
        double inner = kGeluC0 * (xi + kGeluC1 * xi * xi * xi);
        out[i] = 0.5 * xi * (1.0 + std::tanh(inner));
        break;
      }
      case UnKind::Softplus: out[i] = softplus_stable(x[i]); break;
    }
  }
  return Tensor{&t, oid};
}

}  // namespace

Tensor relu(Tensor a) { return unary(a, UnKind::Relu); }
Tensor sigmoid(Tensor a) { return unary(a, UnKind::Sigmoid); }
Tensor gelu(Tensor a) { return unary(a, UnKind::Gelu); }
Tensor softplus(Tensor a) { return unary(a, UnKind::Softplus); }

Tensor sqrt_eps(Tensor a, double eps) {
  Tape& t = *a.tape;
  std::size_t n = a.size();
  bool ng = t.needs_grad(a.id);
  int aid = a.id;
  int oid = static_cast<int>(t.node_count());
  t.emit(a.shape(), n, ng,
         !ng ? std::function<void(Tape&)>() : [=](Tape& tp) {
           const auto& g = tp.grad(oid);
           const auto& y = tp.value(oid);
           auto& ga = tp.grad(aid);
           for (std::size_t i = 0; i < n; ++i) ga[i] += 0.5 / y[i] * g[i];
         });
  auto& out = t.value(oid);
  const auto& x = t.value(aid);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::sqrt(x[i] + eps);
  return Tensor{&t, oid};
}

namespace {

Tensor reduce(Tensor a, bool take_mean) {
  Tape& t = *a.tape;
  std::size_t n = a.size();
  double inv = take_mean ? 1.0 / static_cast<double>(n) : 1.0;
  bool ng = t.needs_grad(a.id);
  int aid = a.id;
  int oid = static_cast<int>(t.node_count());
  t.emit({1}, 1, ng,
         !ng ? std::function<void(Tape&)>() : [=](Tape& tp) {
           double g = tp.grad(oid)[0] * inv;
           auto& ga = tp.grad(aid);
           for (std::size_t i = 0; i < n; ++i) ga[i] += g;
         });
  const auto& x = t.value(aid);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  t.value(oid)[0] = acc * inv;
  return Tensor{&t, oid};
}

}  // namespace

Tensor sum(Tensor a) { return reduce(a, false); }
Tensor mean(Tensor a) { return reduce(a, true); }

Tensor row_mean(Tensor a) {
  Tape& t = *a.tape;
  require_rank2(a, "row_mean input");
  int m = a.dim(0), n = a.dim(1);
  double inv = 1.0 / static_cast<double>(n);
  bool ng = t.needs_grad(a.id);
  int aid = a.id;
  int oid = static_cast<int>(t.node_count());
  t.emit({m}, static_cast<std::size_t>(m), ng,
         !ng ? std::function<void(Tape&)>() : [=](Tape& tp) {
           const auto& g = tp.grad(oid);
           auto& ga = tp.grad(aid);
           for (int i = 0; i < m; ++i) {
             double gi = g[i] * inv;
             for (int j = 0; j < n; ++j) ga[i * n + j] += gi;
           }
         });
  auto& out = t.value(oid);
  const auto& x = t.value(aid);
  for (int i = 0; i < m; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += x[i * n + j];
    out[i] = acc * inv;
  }
  return Tensor{&t, oid};
}

Tensor linear(Tensor x, Tensor w, Tensor b) { return add_rowvec(matmul(x, w), b); }

Tensor layer_norm(Tensor x, Tensor gamma, Tensor beta, double eps) {
  Tape& t = same_tape(x, gamma);
  same_tape(x, beta);
  require_rank2(x, "layer_norm input");
  require_rank1(gamma, "layer_norm gamma");
  require_rank1(beta, "layer_norm beta");
  int m = x.dim(0), n = x.dim(1);
  if (gamma.dim(0) != n || beta.dim(0) != n)
    throw ShapeError("layer_norm affine params do not match column count");
  bool ng = t.needs_grad(x.id) || t.needs_grad(gamma.id) || t.needs_grad(beta.id);
  int xid = x.id, gid = gamma.id, bid = beta.id;
  int oid = static_cast<int>(t.node_count());
  t.emit({m, n}, static_cast<std::size_t>(m) * n, ng,
         !ng ? std::function<void(Tape&)>() : [=](Tape& tp) {
           const auto& g = tp.grad(oid);
           const auto& xv = tp.value(xid);
           const auto& gv = tp.value(gid);
           double invn = 1.0 / static_cast<double>(n);
           std::vector<double> xhat(static_cast<std::size_t>(n));
           for (int i = 0; i < m; ++i) {
             double mu = 0.0;
             for (int j = 0; j < n; ++j) mu += xv[i * n + j];
             mu *= invn;
             double var = 0.0;
             for (int j = 0; j < n; ++j) {
               double d = xv[i * n + j] - mu;
               var += d * d;
             }
             var *= invn;
             double s = std::sqrt(var + eps);
             for (int j = 0; j < n; ++j)
               xhat[static_cast<std::size_t>(j)] = (xv[i * n + j] - mu) / s;
             if (tp.needs_grad(gid)) {
               auto& gg = tp.grad(gid);
               for (int j = 0; j < n; ++j)
                 gg[j] += g[i * n + j] * xhat[static_cast<std::size_t>(j)];
             }
             if (tp.needs_grad(bid)) {
               auto& gb = tp.grad(bid);
               for (int j = 0; j < n; ++j) gb[j] += g[i * n + j];
             }
             if (tp.needs_grad(xid)) {
               auto& gx = tp.grad(xid);
               double mean_dxh = 0.0, mean_dxh_xh = 0.0;
               for (int j = 0; j < n; ++j) {
                 double dxh = g[i * n + j] * gv[j];
                 mean_dxh += dxh;
                 mean_dxh_xh += dxh * xhat[static_cast<std::size_t>(j)];
               }
               mean_dxh *= invn;
               mean_dxh_xh *= invn;
               for (int j = 0; j < n; ++j) {
                 double dxh = g[i * n + j] * gv[j];
                 gx[i * n + j] += (dxh - mean_dxh -
                                   xhat[static_cast<std::size_t>(j)] * mean_dxh_xh) /
                                  s;
               }
             }
           }
         });
  auto& out = t.value(oid);
  const auto& xv = t.value(xid);
  const auto& gv = t.value(gid);
  const auto& bv = t.value(bid);
  double invn = 1.0 / static_cast<double>(n);
  for (int i = 0; i < m; ++i) {
    double mu = 0.0;
    for (int j = 0; j < n; ++j) mu += xv[i * n + j];
    mu *= invn;
    double var = 0.0;
    for (int j = 0; j < n; ++j) {
      double d = xv[i * n + j] - mu;
      var += d * d;
    }
    var *= invn;
    double s = std::sqrt(var + eps);
    for (int j = 0; j < n; ++j)
      out[i * n + j] = gv[j] * ((xv[i * n + j] - mu) / s) + bv[j];
  }
  return Tensor{&t, oid};
}

Tensor glu(Tensor x) {
  Tape& t = *x.tape;
  const auto& shp = x.shape();
  int m = shp.size() == 1 ? 1 : shp[0];
  int w = shp.size() == 1 ? shp[0] : shp[1];
  if (shp.size() > 2) throw ShapeError("glu supports rank 1 or 2");
  if (w % 2 != 0) throw ShapeError("glu needs an even last dimension");
  int k = w / 2;
  std::vector<int> oshape = shp.size() == 1 ? std::vector<int>{k}
                                            : std::vector<int>{m, k};
  bool ng = t.needs_grad(x.id);
  int xid = x.id;
  int oid = static_cast<int>(t.node_count());
  t.emit(std::move(oshape), static_cast<std::size_t>(m) * k, ng,
         !ng ? std::function<void(Tape&)>() : [=](Tape& tp) {
           const auto& g = tp.grad(oid);
           const auto& xv = tp.value(xid);
           auto& gx = tp.grad(xid);
           for (int i = 0; i < m; ++i)
             for (int j = 0; j < k; ++j) {
               double a = xv[i * w + j];
               double sb = sigmoid_stable(xv[i * w + k + j]);
               double go = g[i * k + j];
               gx[i * w + j] += go * sb;
               gx[i * w + k + j] += go * a * sb * (1.0 - sb);
             }
         });
  auto& out = t.value(oid);
  const auto& xv = t.value(xid);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < k; ++j)
      out[i * k + j] = xv[i * w + j] * sigmoid_stable(xv[i * w + k + j]);
  return Tensor{&t, oid};
}

Tensor simple_gate(Tensor x) {
  Tape& t = *x.tape;
  std::size_t n = x.size();
  bool ng = t.needs_grad(x.id);
  int xid = x.id;
  int oid = static_cast<int>(t.node_count());
  t.emit(x.shape(), n, ng,
         !ng ? std::function<void(Tape&)>() : [=](Tape& tp) {
           const auto& g = tp.grad(oid);
           const auto& xv = tp.value(xid);
           auto& gx = tp.grad(xid);
           for (std::size_t i = 0; i < n; ++i) gx[i] += 2.0 * xv[i] * g[i];
         });
  auto& out = t.value(oid);
  const auto& xv = t.value(xid);
  for (std::size_t i = 0; i < n; ++i) out[i] = xv[i] * xv[i];
  return Tensor{&t, oid};
}

Tensor dsconv1d(Tensor x, Tensor k_dw, Tensor k_pw, Tensor b) {
  Tape& t = same_tape(x, k_dw);
  same_tape(x, k_pw);
  same_tape(x, b);
  require_rank2(x, "dsconv1d input");
  require_rank2(k_dw, "dsconv1d depthwise kernel");
  require_rank2(k_pw, "dsconv1d pointwise kernel");
  require_rank1(b, "dsconv1d bias");
  int c = x.dim(0), l = x.dim(1), k = k_dw.dim(1), co = k_pw.dim(0);
  if (k_dw.dim(0) != c) throw ShapeError("depthwise kernel channel count mismatch");
  if (k_pw.dim(1) != c) throw ShapeError("pointwise kernel input channel mismatch");
  if (b.dim(0) != co) throw ShapeError("dsconv1d bias length mismatch");
  if (k % 2 == 0) throw ShapeError("dsconv1d kernel width must be odd");
  int pad = k / 2;

  // Depthwise intermediate, kept for the backward rule.
  std::vector<double> y(static_cast<std::size_t>(c) * l, 0.0);
  {
    const auto& xv = t.value(x.id);
    const auto& kv = t.value(k_dw.id);
    for (int ci = 0; ci < c; ++ci)
      for (int j = 0; j < l; ++j) {
        double acc = 0.0;
        for (int u = 0; u < k; ++u) {
          int src = j + u - pad;
          if (src >= 0 && src < l) acc += kv[ci * k + u] * xv[ci * l + src];
        }
        y[static_cast<std::size_t>(ci) * l + j] = acc;
      }
  }

  bool ng = t.needs_grad(x.id) || t.needs_grad(k_dw.id) || t.needs_grad(k_pw.id) ||
            t.needs_grad(b.id);
  int xid = x.id, kdid = k_dw.id, kpid = k_pw.id, bid = b.id;
  int oid = static_cast<int>(t.node_count());
  t.emit({co, l}, static_cast<std::size_t>(co) * l, ng,
         !ng ? std::function<void(Tape&)>() : [=](Tape& tp) {
           const auto& g = tp.grad(oid);
           const auto& xv = tp.value(xid);
           const auto& kdv = tp.value(kdid);
           const auto& kpv = tp.value(kpid);
           if (tp.needs_grad(bid)) {
             auto& gb = tp.grad(bid);
             for (int o = 0; o < co; ++o) {
               double acc = 0.0;
               for (int j = 0; j < l; ++j) acc += g[o * l + j];
               gb[o] += acc;
             }
           }
           if (tp.needs_grad(kpid)) {
             auto& gkp = tp.grad(kpid);
             for (int o = 0; o < co; ++o)
               for (int ci = 0; ci < c; ++ci) {
                 double acc = 0.0;
                 for (int j = 0; j < l; ++j)
                   acc += g[o * l + j] * y[static_cast<std::size_t>(ci) * l + j];
                 gkp[o * c + ci] += acc;
               }
           }
           if (tp.needs_grad(xid) || tp.needs_grad(kdid)) {
             std::vector<double> gy(static_cast<std::size_t>(c) * l, 0.0);
             for (int ci = 0; ci < c; ++ci)
               for (int j = 0; j < l; ++j) {
                 double acc = 0.0;
                 for (int o = 0; o < co; ++o) acc += kpv[o * c + ci] * g[o * l + j];
                 gy[static_cast<std::size_t>(ci) * l + j] = acc;
               }
             if (tp.needs_grad(kdid)) {
               auto& gkd = tp.grad(kdid);
               for (int ci = 0; ci < c; ++ci)
                 for (int u = 0; u < k; ++u) {
                   double acc = 0.0;
                   for (int j = 0; j < l; ++j) {
                     int src = j + u - pad;
                     if (src >= 0 && src < l)
                       acc += gy[static_cast<std::size_t>(ci) * l + j] *
                              xv[ci * l + src];
                   }
                   gkd[ci * k + u] += acc;
                 }
             }
             if (tp.needs_grad(xid)) {
               auto& gx = tp.grad(xid);
               for (int ci = 0; ci < c; ++ci)
                 for (int u = 0; u < k; ++u) {
                   double kw = kdv[ci * k + u];
                   for (int j = 0; j < l; ++j) {
                     int src = j + u - pad;
                     if (src >= 0 && src < l)
                       gx[ci * l + src] +=
                           kw * gy[static_cast<std::size_t>(ci) * l + j];
                   }
                 }
             }
           }
         });
  auto& out = t.value(oid);
  const auto& kpv = t.value(kpid);
  const auto& bv = t.value(bid);
  for (int o = 0; o < co; ++o)
    for (int j = 0; j < l; ++j) {
      double acc = bv[o];
      for (int ci = 0; ci < c; ++ci)
        acc += kpv[o * c + ci] * y[static_cast<std::size_t>(ci) * l + j];
      out[o * l + j] = acc;
    }
  return Tensor{&t, oid};
}

Tensor conv1d(Tensor x, Tensor w, Tensor b, int k) {
  Tape& t = same_tape(x, w);
  same_tape(x, b);
  require_rank2(x, "conv1d input");
  require_rank2(w, "conv1d weights");
  require_rank1(b, "conv1d bias");
  if (k % 2 == 0 || k < 1) throw ShapeError("conv1d kernel width must be odd");
  int ci = x.dim(0), l = x.dim(1), co = w.dim(0);
  if (w.dim(1) != ci * k) throw ShapeError("conv1d weight width must be C_in*k");
  if (b.dim(0) != co) throw ShapeError("conv1d bias length mismatch");
  int pad = k / 2;
  bool ng = t.needs_grad(x.id) || t.needs_grad(w.id) || t.needs_grad(b.id);
  int xid = x.id, wid = w.id, bid = b.id;
  int oid = static_cast<int>(t.node_count());
  t.emit({co, l}, static_cast<std::size_t>(co) * l, ng,
         !ng ? std::function<void(Tape&)>() : [=](Tape& tp) {
           const auto& g = tp.grad(oid);
           const auto& xv = tp.value(xid);
           const auto& wv = tp.value(wid);
           if (tp.needs_grad(bid)) {
             auto& gb = tp.grad(bid);
             for (int o = 0; o < co; ++o) {
               double acc = 0.0;
               for (int j = 0; j < l; ++j) acc += g[o * l + j];
               gb[o] += acc;
             }
           }
           if (tp.needs_grad(wid)) {
             auto& gw = tp.grad(wid);
             for (int o = 0; o < co; ++o)
               for (int c2 = 0; c2 < ci; ++c2)
                 for (int u = 0; u < k; ++u) {
                   double acc = 0.0;
                   for (int j = 0; j < l; ++j) {
                     int src = j + u - pad;
                     if (src >= 0 && src < l) acc += g[o * l + j] * xv[c2 * l + src];
                   }
                   gw[o * ci * k + c2 * k + u] += acc;
                 }
           }
           if (tp.needs_grad(xid)) {
             auto& gx = tp.grad(xid);
             for (int o = 0; o < co; ++o)
               for (int c2 = 0; c2 < ci; ++c2)
                 for (int u = 0; u < k; ++u) {
                   double wv2 = wv[o * ci * k + c2 * k + u];
                   for (int j = 0; j < l; ++j) {
                     int src = j + u - pad;
                     if (src >= 0 && src < l) gx[c2 * l + src] += wv2 * g[o * l + j];
                   }
                 }
           }
         });
  auto& out = t.value(oid);
  const auto& xv = t.value(xid);
  const auto& wv = t.value(wid);
  const auto& bv = t.value(bid);
  for (int o = 0; o < co; ++o)
    for (int j = 0; j < l; ++j) {
      double acc = bv[o];
      for (int c2 = 0; c2 < ci; ++c2)
        for (int u = 0; u < k; ++u) {
          int src = j + u - pad;
          if (src >= 0 && src < l) acc += wv[o * ci * k + c2 * k + u] * xv[c2 * l + src];
        }
      out[o * l + j] = acc;
    }
  return Tensor{&t, oid};
}

Tensor maxpool2(Tensor x) {
  Tape& t = *x.tape;
  require_rank2(x, "maxpool2 input");
  int c = x.dim(0), l = x.dim(1);
  if (l < 2) throw ShapeError("maxpool2 needs at least two elements per row");
  int lo = l / 2;
  // First-element wins ties so backward routing is unambiguous.
  std::vector<int> arg(static_cast<std::size_t>(c) * lo);
  {
    const auto& xv = t.value(x.id);
    for (int ci = 0; ci < c; ++ci)
      for (int j = 0; j < lo; ++j) {
        int i0 = ci * l + 2 * j;
        arg[static_cast<std::size_t>(ci) * lo + j] =
            xv[static_cast<std::size_t>(i0) + 1] > xv[static_cast<std::size_t>(i0)]
                ? i0 + 1
                : i0;
      }
  }
  bool ng = t.needs_grad(x.id);
  int xid = x.id;
  int oid = static_cast<int>(t.node_count());
  t.emit({c, lo}, static_cast<std::size_t>(c) * lo, ng,
         !ng ? std::function<void(Tape&)>() : [=](Tape& tp) {
           const auto& g = tp.grad(oid);
           auto& gx = tp.grad(xid);
           for (std::size_t i = 0; i < arg.size(); ++i)
             gx[static_cast<std::size_t>(arg[i])] += g[i];
         });
  auto& out = t.value(oid);
  const auto& xv = t.value(xid);
  for (std::size_t i = 0; i < arg.size(); ++i)
    out[i] = xv[static_cast<std::size_t>(arg[i])];
  return Tensor{&t, oid};
}

Tensor stab_softmax(Tensor x) {
  Tape& t = *x.tape;
  require_rank2(x, "stab_softmax input");
  int m = x.dim(0), n = x.dim(1);
  bool ng = t.needs_grad(x.id);
  int xid = x.id;
  int oid = static_cast<int>(t.node_count());
  t.emit({m, n}, static_cast<std::size_t>(m) * n, ng,
         !ng ? std::function<void(Tape&)>() : [=](Tape& tp) {
           const auto& g = tp.grad(oid);
           const auto& s = tp.value(oid);
           auto& gx = tp.grad(xid);
           for (int i = 0; i < m; ++i) {
             double dot = 0.0;
             for (int j = 0; j < n; ++j) dot += g[i * n + j] * s[i * n + j];
             for (int j = 0; j < n; ++j)
               gx[i * n + j] += s[i * n + j] * (g[i * n + j] - dot);
           }
         });
  auto& out = t.value(oid);
  const auto& xv = t.value(xid);
  for (int i = 0; i < m; ++i) {
    double mx = xv[i * n];
    for (int j = 1; j < n; ++j) mx = std::max(mx, xv[i * n + j]);
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
      double e = std::exp(xv[i * n + j] - mx);
      out[i * n + j] = e;
      total += e;
    }
    for (int j = 0; j < n; ++j) out[i * n + j] /= total;
  }
  return Tensor{&t, oid};
}

Tensor attention_layer(Tensor q, Tensor k, Tensor v) {
  require_rank2(q, "attention query");
  require_rank2(k, "attention key");
  require_rank2(v, "attention value");
  if (q.dim(1) != k.dim(1)) throw ShapeError("query/key feature dims differ");
  if (k.dim(0) != v.dim(0)) throw ShapeError("key/value row counts differ");
  double inv = 1.0 / std::sqrt(static_cast<double>(q.dim(1)));
  return matmul(stab_softmax(scale(matmul_nt(q, k), inv)), v);
}

Tensor ffn_block(Tensor x, Tensor ln_gamma, Tensor ln_beta, Tensor w1, Tensor b1,
                 Tensor w2, Tensor b2, double dropout_p) {
  Tensor h = gelu(linear(layer_norm(x, ln_gamma, ln_beta), w1, b1));
  if (dropout_p > 0.0) h = dropout(h, dropout_p);
  return add(linear(h, w2, b2), x);
}

Tensor dropout(Tensor x, double p) {
  Tape& t = *x.tape;
  if (p < 0.0 || p >= 1.0) throw ContractError("dropout rate must be in [0, 1)");
  if (!t.train_mode || p == 0.0) return x;
  std::uint64_t seed = t.dropout_seed, step = t.dropout_step;
  std::uint64_t site = t.next_dropout_site();
  std::size_t n = x.size();
  double keep_scale = 1.0 / (1.0 - p);
  bool ng = t.needs_grad(x.id);
  int xid = x.id;
  int oid = static_cast<int>(t.node_count());
  t.emit(x.shape(), n, ng,
         !ng ? std::function<void(Tape&)>() : [=](Tape& tp) {
           const auto& g = tp.grad(oid);
           auto& gx = tp.grad(xid);
           for (std::size_t i = 0; i < n; ++i) {
             double mask = unit_from_key(seed, step, site, i) >= p ? keep_scale : 0.0;
             gx[i] += mask * g[i];
           }
         });
  auto& out = t.value(oid);
  const auto& xv = t.value(xid);
  for (std::size_t i = 0; i < n; ++i) {
    double mask = unit_from_key(seed, step, site, i) >= p ? keep_scale : 0.0;
    out[i] = mask * xv[i];
  }
  return Tensor{&t, oid};
}

}  // namespace sspfield::diff
