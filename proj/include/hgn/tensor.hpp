#pragma once

// Dense 2-D tensors (64-bit, row-major) plus a reverse-mode gradient tape.
// The tape records one node per operation; backward() walks the nodes in
// reverse creation order, which is a reverse topological order because an
// operation's inputs always precede it.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hgn/rng.hpp"

namespace hgn {

struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
  bool requires_grad = false;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  static Tensor zeros(std::size_t r, std::size_t c) { return Tensor(r, c, 0.0); }

  static Tensor from(std::initializer_list<std::initializer_list<double>> rws) {
    Tensor t;
    t.rows = rws.size();
    t.cols = rws.begin()->size();
    t.data.reserve(t.rows * t.cols);
    for (const auto& row : rws) {
      if (row.size() != t.cols) throw std::invalid_argument("Tensor::from: ragged rows");
      for (double v : row) t.data.push_back(v);
    }
    return t;
  }

  static Tensor row_vector(const std::vector<double>& v) {
    Tensor t(1, v.size());
    t.data = v;
    return t;
  }

  static Tensor uniform(std::size_t r, std::size_t c, double lo, double hi, Rng& rng) {
    Tensor t(r, c);
    for (double& x : t.data) x = rng.uniform(lo, hi);
    return t;
  }

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::size_t size() const { return rows * cols; }

  bool finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline std::string shape_str(const Tensor& t) {
  return std::to_string(t.rows) + "x" + std::to_string(t.cols);
}

inline bool same_shape(const Tensor& a, const Tensor& b) {
  return a.rows == b.rows && a.cols == b.cols;
}

// Handle into a Tape. Default-constructed handles are invalid.
struct Var {
  std::uint32_t id = UINT32_MAX;
  bool valid() const { return id != UINT32_MAX; }
};

class Tape {
 public:
  Var leaf(Tensor t) {
    if (!t.finite()) throw std::invalid_argument("leaf: non-finite tensor");
    return push(Op::Leaf, t.requires_grad, {}, {}, std::move(t));
  }

  Var constant(Tensor t) {
    t.requires_grad = false;
    return leaf(std::move(t));
  }

  Var matmul(Var a, Var b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (A.cols != B.rows)
      throw std::invalid_argument("matmul: shape mismatch " + shape_str(A) + " * " + shape_str(B));
    Tensor C(A.rows, B.cols);
    for (std::size_t i = 0; i < A.rows; ++i)
      for (std::size_t k = 0; k < A.cols; ++k) {
        const double aik = A.data[i * A.cols + k];
        if (aik == 0.0) continue;
        const double* brow = &B.data[k * B.cols];
        double* crow = &C.data[i * C.cols];
        for (std::size_t j = 0; j < B.cols; ++j) crow[j] += aik * brow[j];
      }
    return push(Op::MatMul, needs(a) || needs(b), a, b, std::move(C));
  }

  Var add(Var a, Var b) { return binary_elementwise(Op::Add, a, b); }
  Var sub(Var a, Var b) { return binary_elementwise(Op::Sub, a, b); }
  Var mul(Var a, Var b) { return binary_elementwise(Op::Mul, a, b); }

  Var scale(Var a, double s) {
    Tensor out = val(a);
    for (double& v : out.data) v *= s;
    Var r = push(Op::Scale, needs(a), a, {}, std::move(out));
    node(r).aux = s;
    return r;
  }

  Var neg(Var a) { return scale(a, -1.0); }

  Var concat_cols(Var a, Var b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (A.rows != B.rows)
      throw std::invalid_argument("concat_cols: row mismatch " + shape_str(A) + " || " + shape_str(B));
    Tensor C(A.rows, A.cols + B.cols);
    for (std::size_t i = 0; i < A.rows; ++i) {
      for (std::size_t j = 0; j < A.cols; ++j) C.at(i, j) = A.at(i, j);
      for (std::size_t j = 0; j < B.cols; ++j) C.at(i, A.cols + j) = B.at(i, j);
    }
    return push(Op::ConcatCols, needs(a) || needs(b), a, b, std::move(C));
  }

  Var concat_rows(Var a, Var b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (A.cols != B.cols)
      throw std::invalid_argument("concat_rows: col mismatch " + shape_str(A) + " ; " + shape_str(B));
    Tensor C(A.rows + B.rows, A.cols);
    std::copy(A.data.begin(), A.data.end(), C.data.begin());
    std::copy(B.data.begin(), B.data.end(), C.data.begin() + A.size());
    return push(Op::ConcatRows, needs(a) || needs(b), a, b, std::move(C));
  }

  Var transpose(Var a) {
    const Tensor& A = val(a);
    Tensor C(A.cols, A.rows);
    for (std::size_t i = 0; i < A.rows; ++i)
      for (std::size_t j = 0; j < A.cols; ++j) C.at(j, i) = A.at(i, j);
    return push(Op::Transpose, needs(a), a, {}, std::move(C));
  }

  // mean over rows: r x c -> 1 x c
  Var mean_rows(Var a) {
    const Tensor& A = val(a);
    if (A.rows == 0) throw std::invalid_argument("mean_rows: empty tensor");
    Tensor C(1, A.cols);
    for (std::size_t i = 0; i < A.rows; ++i)
      for (std::size_t j = 0; j < A.cols; ++j) C.data[j] += A.at(i, j);
    for (double& v : C.data) v /= static_cast<double>(A.rows);
    return push(Op::MeanRows, needs(a), a, {}, std::move(C));
  }

  // weighted sum of rows: (1 x n) * (n x d) -> 1 x d
  Var weighted_sum(Var weights, Var rows) { return matmul(weights, rows); }

  // numerically stable softmax applied to each row independently
  Var softmax_row(Var a) {
    Tensor out = val(a);
    for (std::size_t i = 0; i < out.rows; ++i) {
      double* row = &out.data[i * out.cols];
      double mx = row[0];
      for (std::size_t j = 1; j < out.cols; ++j) mx = std::max(mx, row[j]);
      double sum = 0.0;
      for (std::size_t j = 0; j < out.cols; ++j) {
        row[j] = std::exp(row[j] - mx);
        sum += row[j];
      }
      for (std::size_t j = 0; j < out.cols; ++j) row[j] /= sum;
    }
    return push(Op::SoftmaxRow, needs(a), a, {}, std::move(out));
  }

  Var leaky_relu(Var a, double slope) {
    Tensor out = val(a);
    for (double& v : out.data) v = v > 0.0 ? v : slope * v;
    Var r = push(Op::LeakyRelu, needs(a), a, {}, std::move(out));
    node(r).aux = slope;
    return r;
  }

  Var tanh(Var a) {
    Tensor out = val(a);
    for (double& v : out.data) v = std::tanh(v);
    return push(Op::Tanh, needs(a), a, {}, std::move(out));
  }

  Var sigmoid(Var a) {
    Tensor out = val(a);
    for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    return push(Op::Sigmoid, needs(a), a, {}, std::move(out));
  }

  Var exp(Var a) {
    Tensor out = val(a);
    for (double& v : out.data) v = std::exp(v);
    return push(Op::Exp, needs(a), a, {}, std::move(out));
  }

  Var log(Var a) {
    Tensor out = val(a);
    for (double& v : out.data) v = std::log(v);
    return push(Op::Log, needs(a), a, {}, std::move(out));
  }

  // select rows by index; duplicates allowed, gradients scatter-add back
  Var gather_rows(Var a, std::vector<std::size_t> idx) {
    const Tensor& A = val(a);
    if (idx.empty()) throw std::invalid_argument("gather_rows: empty index list");
    for (std::size_t i : idx)
      if (i >= A.rows) throw std::invalid_argument("gather_rows: index out of range");
    Tensor C(idx.size(), A.cols);
    for (std::size_t r = 0; r < idx.size(); ++r)
      std::copy(&A.data[idx[r] * A.cols], &A.data[idx[r] * A.cols] + A.cols,
                &C.data[r * C.cols]);
    Var v = push(Op::GatherRows, needs(a), a, {}, std::move(C));
    node(v).idx = std::move(idx);
    return v;
  }

  Var row(Var a, std::size_t i) { return gather_rows(a, {i}); }

  Var stack_rows(const std::vector<Var>& vars) {
    if (vars.empty()) throw std::invalid_argument("stack_rows: no rows");
    Var acc = vars[0];
    for (std::size_t i = 1; i < vars.size(); ++i) acc = concat_rows(acc, vars[i]);
    return acc;
  }

  void backward(Var loss) {
    Node& l = node(loss);
    if (l.val.rows != 1 || l.val.cols != 1)
      throw std::invalid_argument("backward: loss must be scalar, got " + shape_str(l.val));
    if (!std::isfinite(l.val.data[0]))
      throw std::runtime_error("backward: loss is not finite");
    for (Node& n : nodes_)
      if (n.requires_grad) n.grad.assign(n.val.size(), 0.0);
    if (!l.requires_grad) return;
    l.grad[0] = 1.0;
    for (std::uint32_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || n.op == Op::Leaf) continue;
      propagate(n);
    }
  }

  const Tensor& value(Var v) const { return nodes_.at(v.id).val; }

  // gradient of the last backward() w.r.t. node v; zeros if v never
  // participated in the loss
  Tensor grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    Tensor g(n.val.rows, n.val.cols);
    if (n.requires_grad && n.grad.size() == g.data.size()) g.data = n.grad;
    return g;
  }

  std::size_t size() const { return nodes_.size(); }

  void reset() { nodes_.clear(); }

 private:
  enum class Op {
    Leaf, MatMul, Add, Sub, Mul, Scale, ConcatCols, ConcatRows, Transpose,
    MeanRows, SoftmaxRow, LeakyRelu, Tanh, Sigmoid, Exp, Log, GatherRows
  };

  struct Node {
    Op op;
    Var a, b;
    Tensor val;
    std::vector<double> grad;
    double aux = 0.0;
    std::vector<std::size_t> idx;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;

  Node& node(Var v) { return nodes_.at(v.id); }
  const Tensor& val(Var v) const { return nodes_.at(v.id).val; }
  bool needs(Var v) const { return v.valid() && nodes_.at(v.id).requires_grad; }

  Var push(Op op, bool rg, Var a, Var b, Tensor val) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.val = std::move(val);
    n.requires_grad = rg;
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  Var binary_elementwise(Op op, Var a, Var b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (!same_shape(A, B))
      throw std::invalid_argument("elementwise op: shape mismatch " + shape_str(A) + " vs " +
                                  shape_str(B));
    Tensor C(A.rows, A.cols);
    switch (op) {
      case Op::Add:
        for (std::size_t i = 0; i < C.size(); ++i) C.data[i] = A.data[i] + B.data[i];
        break;
      case Op::Sub:
        for (std::size_t i = 0; i < C.size(); ++i) C.data[i] = A.data[i] - B.data[i];
        break;
      case Op::Mul:
        for (std::size_t i = 0; i < C.size(); ++i) C.data[i] = A.data[i] * B.data[i];
        break;
      default:
        throw std::logic_error("binary_elementwise: bad op");
    }
    return push(op, needs(a) || needs(b), a, b, std::move(C));
  }

  void add_grad(Var v, std::size_t flat, double g) {
    Node& n = node(v);
    if (n.requires_grad) n.grad[flat] += g;
  }

  void propagate(Node& n) {
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::MatMul: {
        const Tensor& A = val(n.a);
        const Tensor& B = val(n.b);
        Node& na = node(n.a);
        Node& nb = node(n.b);
        // dA += dC * B^T ; dB += A^T * dC
        if (na.requires_grad) {
          for (std::size_t i = 0; i < A.rows; ++i)
            for (std::size_t j = 0; j < B.cols; ++j) {
              const double g = n.grad[i * B.cols + j];
              if (g == 0.0) continue;
              for (std::size_t k = 0; k < A.cols; ++k)
                na.grad[i * A.cols + k] += g * B.data[k * B.cols + j];
            }
        }
        if (nb.requires_grad) {
          for (std::size_t i = 0; i < A.rows; ++i)
            for (std::size_t k = 0; k < A.cols; ++k) {
              const double a = A.data[i * A.cols + k];
              if (a == 0.0) continue;
              for (std::size_t j = 0; j < B.cols; ++j)
                nb.grad[k * B.cols + j] += a * n.grad[i * B.cols + j];
            }
        }
        break;
      }
      case Op::Add:
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
          add_grad(n.a, i, n.grad[i]);
          add_grad(n.b, i, n.grad[i]);
        }
        break;
      case Op::Sub:
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
          add_grad(n.a, i, n.grad[i]);
          add_grad(n.b, i, -n.grad[i]);
        }
        break;
      case Op::Mul: {
        const Tensor& A = val(n.a);
        const Tensor& B = val(n.b);
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
          add_grad(n.a, i, n.grad[i] * B.data[i]);
          add_grad(n.b, i, n.grad[i] * A.data[i]);
        }
        break;
      }
      case Op::Scale:
        for (std::size_t i = 0; i < n.grad.size(); ++i) add_grad(n.a, i, n.grad[i] * n.aux);
        break;
      case Op::ConcatCols: {
        const Tensor& A = val(n.a);
        const Tensor& B = val(n.b);
        for (std::size_t i = 0; i < A.rows; ++i) {
          for (std::size_t j = 0; j < A.cols; ++j)
            add_grad(n.a, i * A.cols + j, n.grad[i * n.val.cols + j]);
          for (std::size_t j = 0; j < B.cols; ++j)
            add_grad(n.b, i * B.cols + j, n.grad[i * n.val.cols + A.cols + j]);
        }
        break;
      }
      case Op::ConcatRows: {
        const Tensor& A = val(n.a);
        for (std::size_t i = 0; i < A.size(); ++i) add_grad(n.a, i, n.grad[i]);
        for (std::size_t i = A.size(); i < n.grad.size(); ++i)
          add_grad(n.b, i - A.size(), n.grad[i]);
        break;
      }
      case Op::Transpose: {
        const Tensor& A = val(n.a);
        for (std::size_t i = 0; i < A.rows; ++i)
          for (std::size_t j = 0; j < A.cols; ++j)
            add_grad(n.a, i * A.cols + j, n.grad[j * A.rows + i]);
        break;
      }
      case Op::MeanRows: {
        const Tensor& A = val(n.a);
        const double inv = 1.0 / static_cast<double>(A.rows);
        for (std::size_t i = 0; i < A.rows; ++i)
          for (std::size_t j = 0; j < A.cols; ++j)
            add_grad(n.a, i * A.cols + j, n.grad[j] * inv);
        break;
      }
      case Op::SoftmaxRow: {
        // dx_j = y_j * (dy_j - sum_k dy_k y_k), per row
        const Tensor& Y = n.val;
        for (std::size_t i = 0; i < Y.rows; ++i) {
          double dot = 0.0;
          for (std::size_t j = 0; j < Y.cols; ++j)
            dot += n.grad[i * Y.cols + j] * Y.data[i * Y.cols + j];
          for (std::size_t j = 0; j < Y.cols; ++j) {
            const std::size_t f = i * Y.cols + j;
            add_grad(n.a, f, Y.data[f] * (n.grad[f] - dot));
          }
        }
        break;
      }
      case Op::LeakyRelu: {
        const Tensor& A = val(n.a);
        for (std::size_t i = 0; i < n.grad.size(); ++i)
          add_grad(n.a, i, n.grad[i] * (A.data[i] > 0.0 ? 1.0 : n.aux));
        break;
      }
      case Op::Tanh:
        for (std::size_t i = 0; i < n.grad.size(); ++i)
          add_grad(n.a, i, n.grad[i] * (1.0 - n.val.data[i] * n.val.data[i]));
        break;
      case Op::Sigmoid:
        for (std::size_t i = 0; i < n.grad.size(); ++i)
          add_grad(n.a, i, n.grad[i] * n.val.data[i] * (1.0 - n.val.data[i]));
        break;
      case Op::Exp:
        for (std::size_t i = 0; i < n.grad.size(); ++i)
          add_grad(n.a, i, n.grad[i] * n.val.data[i]);
        break;
      case Op::Log: {
        const Tensor& A = val(n.a);
        for (std::size_t i = 0; i < n.grad.size(); ++i)
          add_grad(n.a, i, n.grad[i] / A.data[i]);
        break;
      }
      case Op::GatherRows: {
        const std::size_t c = n.val.cols;
        for (std::size_t r = 0; r < n.idx.size(); ++r)
          for (std::size_t j = 0; j < c; ++j)
            add_grad(n.a, n.idx[r] * c + j, n.grad[r * c + j]);
        break;
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Finite-difference gradient checking.

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;
  double tol = 0.0;
  bool pass = false;
};

// Central differences (f(x+h) - f(x-h)) / 2h per coordinate, compared against
// the supplied analytic gradients. `eval_loss` must recompute the scalar loss
// from the current contents of `params` on every call.
inline GradCheckReport grad_check(const std::function<double()>& eval_loss,
                                  const std::vector<std::pair<std::string, Tensor*>>& params,
                                  const std::map<std::string, Tensor>& analytic,
                                  double h, double tol) {
  if (h <= 0.0) throw std::invalid_argument("grad_check: h must be positive");
  GradCheckReport report;
  report.tol = tol;
  for (const auto& [name, tensor] : params) {
    auto it = analytic.find(name);
    if (it == analytic.end())
      throw std::invalid_argument("grad_check: no analytic gradient for " + name);
    const Tensor& ana = it->second;
    if (!same_shape(ana, *tensor))
      throw std::invalid_argument("grad_check: gradient shape mismatch for " + name);
    GradCheckEntry entry;
    entry.name = name;
    for (std::size_t i = 0; i < tensor->data.size(); ++i) {
      const double saved = tensor->data[i];
      tensor->data[i] = saved + h;
      const double fp = eval_loss();
      tensor->data[i] = saved - h;
      const double fm = eval_loss();
      tensor->data[i] = saved;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = ana.data[i];
      const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-6);
      if (rel > entry.max_rel_err) {
        entry.max_rel_err = rel;
        entry.worst_index = i;
      }
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  report.pass = report.max_rel_err < tol;
  return report;
}

}  // namespace hgn
