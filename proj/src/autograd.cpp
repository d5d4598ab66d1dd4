#include "augsum/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

#include "augsum/simd/kernels.hpp"

namespace augsum::ag {
namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

constexpr double kProbabilityFloor = 1e-12;

}  // namespace

Var Graph::push(Matrix value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Matrix& Graph::grad_ref(Var v) {
  Node& node = nodes_[v.id];
  if (node.grad.size() != node.value.size() || node.grad.empty())
    node.grad = Matrix(node.value.rows(), node.value.cols());
  return node.grad;
}

Matrix Graph::grad(Var v) const {
  const Node& node = nodes_[v.id];
  if (node.grad.same_shape(node.value) && !node.grad.empty()) return node.grad;
  return Matrix(node.value.rows(), node.value.cols());
}

bool Graph::any_requires_grad(std::initializer_list<Var> vars) const {
  for (Var v : vars)
    if (nodes_[v.id].requires_grad) return true;
  return false;
}

Var Graph::constant(Matrix value) { return push(std::move(value), false); }

Var Graph::parameter(const Param& param) {
  Var v = push(param.value, record_gradients_ && !param.frozen);
  nodes_[v.id].param = &param;
  return v;
}

Var Graph::matmul(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (av.cols() != bv.rows()) throw std::invalid_argument("matmul: inner dims");
  Var out = push(augsum::matmul(av, bv), any_requires_grad({a, b}));
  if (!requires_grad(out)) return out;
  nodes_[out.id].backward = [this, a, b, out] {
    const Matrix& g = nodes_[out.id].grad;
    const Matrix& av = value(a);
    const Matrix& bv = value(b);
    const auto& k = simd::kernels();
    if (requires_grad(a))
      k.gemm_nt(av.rows(), av.cols(), g.cols(), g.data(), bv.data(),
                grad_ref(a).data());
    if (requires_grad(b))
      k.gemm_tn(bv.rows(), bv.cols(), av.rows(), av.data(), g.data(),
                grad_ref(b).data());
  };
  return out;
}

Var Graph::matmul_nt(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (av.cols() != bv.cols())
    throw std::invalid_argument("matmul_nt: inner dims");
  Var out = push(augsum::matmul_nt(av, bv), any_requires_grad({a, b}));
  if (!requires_grad(out)) return out;
  nodes_[out.id].backward = [this, a, b, out] {
    const Matrix& g = nodes_[out.id].grad;  // m x n
    const Matrix& av = value(a);            // m x k
    const Matrix& bv = value(b);            // n x k
    const auto& k = simd::kernels();
    if (requires_grad(a))
      k.gemm_nn(av.rows(), av.cols(), bv.rows(), g.data(), bv.data(),
                grad_ref(a).data());
    if (requires_grad(b))
      k.gemm_tn(bv.rows(), bv.cols(), av.rows(), g.data(), av.data(),
                grad_ref(b).data());
  };
  return out;
}

Var Graph::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  Matrix result = value(a);
  simd::kernels().axpy(1.0, value(b).data(), result.data(), result.size());
  Var out = push(std::move(result), any_requires_grad({a, b}));
  if (!requires_grad(out)) return out;
  nodes_[out.id].backward = [this, a, b, out] {
    const Matrix& g = nodes_[out.id].grad;
    const auto& k = simd::kernels();
    if (requires_grad(a)) k.axpy(1.0, g.data(), grad_ref(a).data(), g.size());
    if (requires_grad(b)) k.axpy(1.0, g.data(), grad_ref(b).data(), g.size());
  };
  return out;
}

Var Graph::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  Matrix result = value(a);
  simd::kernels().axpy(-1.0, value(b).data(), result.data(), result.size());
  Var out = push(std::move(result), any_requires_grad({a, b}));
  if (!requires_grad(out)) return out;
  nodes_[out.id].backward = [this, a, b, out] {
    const Matrix& g = nodes_[out.id].grad;
    const auto& k = simd::kernels();
    if (requires_grad(a)) k.axpy(1.0, g.data(), grad_ref(a).data(), g.size());
    if (requires_grad(b)) k.axpy(-1.0, g.data(), grad_ref(b).data(), g.size());
  };
  return out;
}

Var Graph::add_row(Var a, Var row) {
  const Matrix& av = value(a);
  const Matrix& rv = value(row);
  if (rv.rows() != 1 || rv.cols() != av.cols())
    throw std::invalid_argument("add_row: row shape");
  Matrix result = av;
  for (std::size_t r = 0; r < result.rows(); ++r)
    simd::kernels().axpy(1.0, rv.data(), result.row(r).data(), rv.cols());
  Var out = push(std::move(result), any_requires_grad({a, row}));
  if (!requires_grad(out)) return out;
  nodes_[out.id].backward = [this, a, row, out] {
    const Matrix& g = nodes_[out.id].grad;
    const auto& k = simd::kernels();
    if (requires_grad(a)) k.axpy(1.0, g.data(), grad_ref(a).data(), g.size());
    if (requires_grad(row)) {
      Matrix& gr = grad_ref(row);
      for (std::size_t r = 0; r < g.rows(); ++r)
        k.axpy(1.0, g.row(r).data(), gr.data(), g.cols());
    }
  };
  return out;
}

Var Graph::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  Matrix result = value(a);
  const Matrix& bv = value(b);
  for (std::size_t i = 0; i < result.size(); ++i) result.data()[i] *= bv.data()[i];
  Var out = push(std::move(result), any_requires_grad({a, b}));
  if (!requires_grad(out)) return out;
  nodes_[out.id].backward = [this, a, b, out] {
    const Matrix& g = nodes_[out.id].grad;
    const Matrix& av = value(a);
    const Matrix& bv = value(b);
    if (requires_grad(a)) {
      Matrix& ga = grad_ref(a);
      for (std::size_t i = 0; i < g.size(); ++i)
        ga.data()[i] += g.data()[i] * bv.data()[i];
    }
    if (requires_grad(b)) {
      Matrix& gb = grad_ref(b);
      for (std::size_t i = 0; i < g.size(); ++i)
        gb.data()[i] += g.data()[i] * av.data()[i];
    }
  };
  return out;
}

Var Graph::scale(Var a, double factor) { return affine(a, factor, 0.0); }

Var Graph::affine(Var a, double alpha, double beta) {
  Matrix result = value(a);
  for (double& x : result.values()) x = alpha * x + beta;
  Var out = push(std::move(result), requires_grad(a));
  if (!requires_grad(out)) return out;
  nodes_[out.id].backward = [this, a, out, alpha] {
    const Matrix& g = nodes_[out.id].grad;
    simd::kernels().axpy(alpha, g.data(), grad_ref(a).data(), g.size());
  };
  return out;
}

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
}  // namespace

Var Graph::gelu(Var a) {
  Matrix result = value(a);
  for (double& x : result.values())
    x = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
  Var out = push(std::move(result), requires_grad(a));
  if (!requires_grad(out)) return out;
  nodes_[out.id].backward = [this, a, out] {
    const Matrix& g = nodes_[out.id].grad;
    const Matrix& x = value(a);
    Matrix& ga = grad_ref(a);
    const double inv_sqrt_2pi = std::numbers::inv_sqrtpi * kInvSqrt2;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = x.data()[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
      ga.data()[i] += g.data()[i] * (cdf + v * pdf);
    }
  };
  return out;
}

Var Graph::sigmoid(Var a) {
  Matrix result = value(a);
  for (double& x : result.values()) x = 1.0 / (1.0 + std::exp(-x));
  Var out = push(std::move(result), requires_grad(a));
  if (!requires_grad(out)) return out;
  nodes_[out.id].backward = [this, a, out] {
    const Matrix& g = nodes_[out.id].grad;
    const Matrix& y = value(out);
    Matrix& ga = grad_ref(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double s = y.data()[i];
      ga.data()[i] += g.data()[i] * s * (1.0 - s);
    }
  };
  return out;
}

Var Graph::tanh(Var a) {
  Matrix result = value(a);
  for (double& x : result.values()) x = std::tanh(x);
  Var out = push(std::move(result), requires_grad(a));
  if (!requires_grad(out)) return out;
  nodes_[out.id].backward = [this, a, out] {
    const Matrix& g = nodes_[out.id].grad;
    const Matrix& y = value(out);
    Matrix& ga = grad_ref(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double t = y.data()[i];
      ga.data()[i] += g.data()[i] * (1.0 - t * t);
    }
  };
  return out;
}

Var Graph::layer_norm(Var x, Var gain, Var offset, double eps) {
  const Matrix& xv = value(x);
  const Matrix& gv = value(gain);
  const Matrix& bv = value(offset);
  const std::size_t n = xv.cols();
  if (gv.rows() != 1 || gv.cols() != n || !gv.same_shape(bv))
    throw std::invalid_argument("layer_norm: gain/offset shape");
  Matrix normalized(xv.rows(), n);
  std::vector<double> inv_std(xv.rows());
  Matrix result(xv.rows(), n);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    auto row = xv.row(r);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < n; ++c) {
      normalized(r, c) = (row[c] - mean) * inv_std[r];
      result(r, c) = gv(0, c) * normalized(r, c) + bv(0, c);
    }
  }
  Var out = push(std::move(result), any_requires_grad({x, gain, offset}));
  if (!requires_grad(out)) return out;
  nodes_[out.id].backward = [this, x, gain, offset, out,
                             normalized = std::move(normalized),
                             inv_std = std::move(inv_std)] {
    const Matrix& g = nodes_[out.id].grad;
    const Matrix& gv = value(gain);
    const std::size_t n = g.cols();
    if (requires_grad(gain) || requires_grad(offset)) {
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < n; ++c) {
          if (requires_grad(gain)) grad_ref(gain)(0, c) += g(r, c) * normalized(r, c);
          if (requires_grad(offset)) grad_ref(offset)(0, c) += g(r, c);
        }
      }
    }
    if (!requires_grad(x)) return;
    Matrix& gx = grad_ref(x);
    std::vector<double> dxhat(n);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      double mean_d = 0.0;
      double mean_dx = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        dxhat[c] = g(r, c) * gv(0, c);
        mean_d += dxhat[c];
        mean_dx += dxhat[c] * normalized(r, c);
      }
      mean_d /= static_cast<double>(n);
      mean_dx /= static_cast<double>(n);
      for (std::size_t c = 0; c < n; ++c)
        gx(r, c) += inv_std[r] * (dxhat[c] - mean_d - normalized(r, c) * mean_dx);
    }
  };
  return out;
}

Var Graph::softmax_rows(Var x, std::span<const std::uint8_t> key_valid) {
  const Matrix& xv = value(x);
  if (!key_valid.empty() && key_valid.size() != xv.cols())
    throw std::invalid_argument("softmax_rows: mask length");
  std::vector<bool> valid(xv.cols(), true);
  for (std::size_t c = 0; c < key_valid.size(); ++c) valid[c] = key_valid[c];
  Matrix result(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double max_v = -INFINITY;
    for (std::size_t c = 0; c < xv.cols(); ++c)
      if (valid[c]) max_v = std::max(max_v, xv(r, c));
    if (max_v == -INFINITY) continue;
    double total = 0.0;
    for (std::size_t c = 0; c < xv.cols(); ++c) {
      if (!valid[c]) continue;
      result(r, c) = std::exp(xv(r, c) - max_v);
      total += result(r, c);
    }
    for (std::size_t c = 0; c < xv.cols(); ++c) result(r, c) /= total;
  }
  Var out = push(std::move(result), requires_grad(x));
  if (!requires_grad(out)) return out;
  nodes_[out.id].backward = [this, x, out] {
    const Matrix& g = nodes_[out.id].grad;
    const Matrix& p = value(out);
    Matrix& gx = grad_ref(x);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      const double inner =
          simd::kernels().dot(p.row(r).data(), g.row(r).data(), g.cols());
      for (std::size_t c = 0; c < g.cols(); ++c)
        gx(r, c) += p(r, c) * (g(r, c) - inner);
    }
  };
  return out;
}

Var Graph::gather_rows(Var a, std::span<const std::size_t> rows) {
  const Matrix& av = value(a);
  Matrix result(rows.size(), av.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= av.rows()) throw std::out_of_range("gather_rows: row index");
    std::copy_n(av.row(rows[r]).data(), av.cols(), result.row(r).data());
  }
  Var out = push(std::move(result), requires_grad(a));
  if (!requires_grad(out)) return out;
  nodes_[out.id].backward = [this, a, out,
                             index = std::vector<std::size_t>(rows.begin(), rows.end())] {
    const Matrix& g = nodes_[out.id].grad;
    Matrix& ga = grad_ref(a);
    for (std::size_t r = 0; r < index.size(); ++r)
      simd::kernels().axpy(1.0, g.row(r).data(), ga.row(index[r]).data(), g.cols());
  };
  return out;
}

Var Graph::add_rows_at(Var x, std::span<const std::size_t> positions, Var src) {
  const Matrix& xv = value(x);
  const Matrix& sv = value(src);
  if (sv.rows() != positions.size() || sv.cols() != xv.cols())
    throw std::invalid_argument("add_rows_at: shape");
  Matrix result = xv;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] >= xv.rows()) throw std::out_of_range("add_rows_at: position");
    simd::kernels().axpy(1.0, sv.row(i).data(), result.row(positions[i]).data(),
                         xv.cols());
  }
  Var out = push(std::move(result), any_requires_grad({x, src}));
  if (!requires_grad(out)) return out;
  nodes_[out.id].backward =
      [this, x, src, out,
       index = std::vector<std::size_t>(positions.begin(), positions.end())] {
        const Matrix& g = nodes_[out.id].grad;
        const auto& k = simd::kernels();
        if (requires_grad(x)) k.axpy(1.0, g.data(), grad_ref(x).data(), g.size());
        if (requires_grad(src)) {
          Matrix& gs = grad_ref(src);
          for (std::size_t i = 0; i < index.size(); ++i)
            k.axpy(1.0, g.row(index[i]).data(), gs.row(i).data(), g.cols());
        }
      };
  return out;
}

Var Graph::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const std::size_t rows = value(parts[0]).rows();
  std::size_t cols = 0;
  bool needs_grad = false;
  for (Var p : parts) {
    if (value(p).rows() != rows) throw std::invalid_argument("concat_cols: rows");
    cols += value(p).cols();
    needs_grad = needs_grad || requires_grad(p);
  }
  Matrix result(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Matrix& pv = value(p);
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(pv.row(r).data(), pv.cols(), result.row(r).data() + offset);
    offset += pv.cols();
  }
  Var out = push(std::move(result), needs_grad);
  if (!needs_grad) return out;
  nodes_[out.id].backward = [this, out,
                             inputs = std::vector<Var>(parts.begin(), parts.end())] {
    const Matrix& g = nodes_[out.id].grad;
    std::size_t offset = 0;
    for (Var p : inputs) {
      const std::size_t width = value(p).cols();
      if (requires_grad(p)) {
        Matrix& gp = grad_ref(p);
        for (std::size_t r = 0; r < g.rows(); ++r)
          simd::kernels().axpy(1.0, g.row(r).data() + offset, gp.row(r).data(), width);
      }
      offset += width;
    }
  };
  return out;
}

Var Graph::concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const std::size_t cols = value(parts[0]).cols();
  std::size_t rows = 0;
  bool needs_grad = false;
  for (Var p : parts) {
    if (value(p).cols() != cols) throw std::invalid_argument("concat_rows: cols");
    rows += value(p).rows();
    needs_grad = needs_grad || requires_grad(p);
  }
  Matrix result(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Matrix& pv = value(p);
    std::copy_n(pv.data(), pv.size(), result.data() + offset);
    offset += pv.size();
  }
  Var out = push(std::move(result), needs_grad);
  if (!needs_grad) return out;
  nodes_[out.id].backward = [this, out,
                             inputs = std::vector<Var>(parts.begin(), parts.end())] {
    const Matrix& g = nodes_[out.id].grad;
    std::size_t offset = 0;
    for (Var p : inputs) {
      const std::size_t count = value(p).size();
      if (requires_grad(p))
        simd::kernels().axpy(1.0, g.data() + offset, grad_ref(p).data(), count);
      offset += count;
    }
  };
  return out;
}

Var Graph::slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Matrix& av = value(a);
  if (begin + count > av.cols()) throw std::out_of_range("slice_cols: range");
  Matrix result(av.rows(), count);
  for (std::size_t r = 0; r < av.rows(); ++r)
    std::copy_n(av.row(r).data() + begin, count, result.row(r).data());
  Var out = push(std::move(result), requires_grad(a));
  if (!requires_grad(out)) return out;
  nodes_[out.id].backward = [this, a, out, begin, count] {
    const Matrix& g = nodes_[out.id].grad;
    Matrix& ga = grad_ref(a);
    for (std::size_t r = 0; r < g.rows(); ++r)
      simd::kernels().axpy(1.0, g.row(r).data(), ga.row(r).data() + begin, count);
  };
  return out;
}

Var Graph::sum(Var a) {
  double total = 0.0;
  for (double v : value(a).values()) total += v;
  Var out = push(Matrix(1, 1, total), requires_grad(a));
  if (!requires_grad(out)) return out;
  nodes_[out.id].backward = [this, a, out] {
    const double g = nodes_[out.id].grad(0, 0);
    for (double& v : grad_ref(a).values()) v += g;
  };
  return out;
}

Var Graph::softmax_cross_entropy(Var logits, std::span<const std::size_t> targets) {
  const Matrix& lv = value(logits);
  if (targets.size() != lv.rows())
    throw std::invalid_argument("softmax_cross_entropy: target count");
  if (lv.rows() == 0) return constant(Matrix(1, 1, 0.0));
  Matrix probs(lv.rows(), lv.cols());
  double loss = 0.0;
  for (std::size_t r = 0; r < lv.rows(); ++r) {
    if (targets[r] >= lv.cols())
      throw std::out_of_range("softmax_cross_entropy: target id");
    double max_v = -INFINITY;
    for (double v : lv.row(r)) max_v = std::max(max_v, v);
    double total = 0.0;
    for (std::size_t c = 0; c < lv.cols(); ++c) {
      probs(r, c) = std::exp(lv(r, c) - max_v);
      total += probs(r, c);
    }
    for (std::size_t c = 0; c < lv.cols(); ++c) probs(r, c) /= total;
    loss -= (lv(r, targets[r]) - max_v) - std::log(total);
  }
  const double rows = static_cast<double>(lv.rows());
  Var out = push(Matrix(1, 1, loss / rows), requires_grad(logits));
  if (!requires_grad(out)) return out;
  nodes_[out.id].backward =
      [this, logits, out, probs = std::move(probs),
       target = std::vector<std::size_t>(targets.begin(), targets.end()), rows] {
        const double g = nodes_[out.id].grad(0, 0) / rows;
        Matrix& gl = grad_ref(logits);
        for (std::size_t r = 0; r < probs.rows(); ++r) {
          for (std::size_t c = 0; c < probs.cols(); ++c) gl(r, c) += g * probs(r, c);
          gl(r, target[r]) -= g;
        }
      };
  return out;
}

Var Graph::bce_with_logits(Var logits, std::span<const double> labels,
                           std::span<const std::uint8_t> include) {
  const Matrix& lv = value(logits);
  if (lv.cols() != 1 || labels.size() != lv.rows() || include.size() != lv.rows())
    throw std::invalid_argument("bce_with_logits: length mismatch");
  std::size_t count = 0;
  double loss = 0.0;
  std::vector<double> dlogit(lv.rows(), 0.0);
  for (std::size_t r = 0; r < lv.rows(); ++r) {
    if (!include[r]) continue;
    ++count;
    const double raw = 1.0 / (1.0 + std::exp(-lv(r, 0)));
    const double p = std::clamp(raw, kProbabilityFloor, 1.0 - kProbabilityFloor);
    const double y = labels[r];
    loss -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    // The clamp has zero slope outside its interval.
    if (raw == p) dlogit[r] = p - y;
  }
  if (count == 0) return constant(Matrix(1, 1, 0.0));
  const double n = static_cast<double>(count);
  Var out = push(Matrix(1, 1, loss / n), requires_grad(logits));
  if (!requires_grad(out)) return out;
  nodes_[out.id].backward = [this, logits, out, dlogit = std::move(dlogit), n] {
    const double g = nodes_[out.id].grad(0, 0) / n;
    Matrix& gl = grad_ref(logits);
    for (std::size_t r = 0; r < dlogit.size(); ++r) gl(r, 0) += g * dlogit[r];
  };
  return out;
}

void Graph::backward(Var root) {
  if (!value(root).same_shape(Matrix(1, 1)))
    throw std::invalid_argument("backward: root must be 1 x 1");
  for (Node& node : nodes_) node.grad = Matrix();
  if (!requires_grad(root)) return;
  grad_ref(root)(0, 0) = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.backward) node.backward();
  }
}

void Graph::accumulate_param_grads(std::span<Param* const> params) const {
  std::unordered_map<const Param*, Param*> sink;
  for (Param* p : params) sink.emplace(p, p);
  for (const Node& node : nodes_) {
    if (node.param == nullptr || node.grad.empty()) continue;
    auto it = sink.find(node.param);
    if (it == sink.end()) continue;
    Matrix& target = it->second->grad;
    if (!target.same_shape(node.value)) target = Matrix(node.value.rows(), node.value.cols());
    simd::kernels().axpy(1.0, node.grad.data(), target.data(), node.grad.size());
  }
}

}  // namespace ag
