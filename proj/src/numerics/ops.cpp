#include "privi/numerics/ops.hpp"

#include <cmath>
#include <numbers>

#include "privi/common/error.hpp"

namespace privi::nn {
namespace {

// Parent gradient buffer, or nullptr when that input does not track gradients.
std::vector<double>* parent_grad(Node& self, std::size_t i) {
  auto& p = self.parents[i];
  return p->requires_grad ? &p->ensure_grad() : nullptr;
}

const std::vector<double>& parent_value(const Node& self, std::size_t i) { return self.parents[i]->value; }

Shape with_last(const Shape& s, std::size_t last) {
  Shape out = s;
  if (out.empty()) out.push_back(last);
  else out.back() = last;
  return out;
}

// c[m x n] += a[m x k] * b[k x n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

// c[m x k] += a[m x n] * b[k x n]^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += ai[j] * bp[j];
      c[i * k + p] += acc;
    }
  }
}

// c[k x n] += a[m x k]^T * b[m x n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += aip * bi[j];
    }
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.shape() == b.shape(),
          std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

template <typename F, typename D>
Tensor unary(const Tensor& x, F f, D dfdx) {
  std::vector<double> out(x.size());
  const auto xv = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
  return Tensor::make_result(x.shape(), std::move(out), {x}, [dfdx](Node& self) {
    auto* gx = parent_grad(self, 0);
    if (!gx) return;
    const auto& xv = parent_value(self, 0);
    for (std::size_t i = 0; i < xv.size(); ++i) (*gx)[i] += self.grad[i] * dfdx(xv[i], self.value[i]);
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(b.dim() == 2, "matmul: right operand must be 2-D, got " + shape_string(b.shape()));
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  require(b.shape()[0] == k,
          "matmul: inner dimensions differ " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  std::vector<double> out(m * n, 0.0);
  gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
  return Tensor::make_result(with_last(a.shape(), n), std::move(out), {a, b}, [m, k, n](Node& self) {
    const auto& av = parent_value(self, 0);
    const auto& bv = parent_value(self, 1);
    if (auto* ga = parent_grad(self, 0)) gemm_nt(self.grad.data(), bv.data(), ga->data(), m, n, k);
    if (auto* gb = parent_grad(self, 1)) gemm_tn(av.data(), self.grad.data(), gb->data(), m, k, n);
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require(bias.size() == weight.cols(), "linear: bias length " + std::to_string(bias.size()) +
                                            " does not match output width " + std::to_string(weight.cols()));
  return add_row(matmul(x, weight), bias);
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (std::size_t p = 0; p < 2; ++p)
      if (auto* g = parent_grad(self, p))
        for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i];
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    if (auto* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i];
    if (auto* g = parent_grad(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] -= self.grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    const auto& av = parent_value(self, 0);
    const auto& bv = parent_value(self, 1);
    if (auto* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i] * bv[i];
    if (auto* g = parent_grad(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i] * av[i];
  });
}

Tensor add_row(const Tensor& x, const Tensor& b) {
  const std::size_t m = x.rows(), n = x.cols();
  require(b.size() == n, "add_row: bias length " + std::to_string(b.size()) + " vs row width " + std::to_string(n));
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x[i * n + j] + b[j];
  return Tensor::make_result(x.shape(), std::move(out), {x, b}, [m, n](Node& self) {
    if (auto* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i];
    if (auto* g = parent_grad(self, 1))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*g)[j] += self.grad[i * n + j];
  });
}

Tensor scale(const Tensor& x, double factor) {
  return unary(
      x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const std::size_t m = x.rows(), n = x.cols();
  require(n >= 1, "layer_norm: empty last axis");
  require(gamma.size() == n && beta.size() == n, "layer_norm: affine parameters must match last axis " +
                                                     std::to_string(n));
  std::vector<double> out(x.size()), xhat(x.size()), inv_std(m);
  const auto xv = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.data() + i * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (row[j] - mu) * inv_std[i];
      out[i * n + j] = gamma[j] * xhat[i * n + j] + beta[j];
    }
  }
  return Tensor::make_result(
      x.shape(), std::move(out), {x, gamma, beta},
      [m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
        const auto& gv = parent_value(self, 1);
        auto* gx = parent_grad(self, 0);
        auto* gg = parent_grad(self, 1);
        auto* gb = parent_grad(self, 2);
        std::vector<double> dxhat(n);
        for (std::size_t i = 0; i < m; ++i) {
          const double* dy = self.grad.data() + i * n;
          const double* xh = xhat.data() + i * n;
          double mean_d = 0.0, mean_dx = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            if (gg) (*gg)[j] += dy[j] * xh[j];
            if (gb) (*gb)[j] += dy[j];
            dxhat[j] = dy[j] * gv[j];
            mean_d += dxhat[j];
            mean_dx += dxhat[j] * xh[j];
          }
          if (!gx) continue;
          mean_d /= static_cast<double>(n);
          mean_dx /= static_cast<double>(n);
          for (std::size_t j = 0; j < n; ++j) (*gx)[i * n + j] += inv_std[i] * (dxhat[j] - mean_d - xh[j] * mean_dx);
        }
      });
}

Tensor gelu(const Tensor& x) {
  return unary(
      x, [](double v) { return 0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2)); },
      [](double v, double) {
        const double cdf = 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2));
        const double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi);
        return cdf + v * pdf;
      });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x,
      [](double v) { return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor softmax_rows(const Tensor& x) {
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = x.data().data() + i * n;
    double mx = row[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (out[i * n + j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= z;
  }
  return Tensor::make_result(x.shape(), std::move(out), {x}, [m, n](Node& self) {
    auto* gx = parent_grad(self, 0);
    if (!gx) return;
    for (std::size_t i = 0; i < m; ++i) {
      const double* y = self.value.data() + i * n;
      const double* dy = self.grad.data() + i * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += dy[j] * y[j];
      for (std::size_t j = 0; j < n; ++j) (*gx)[i * n + j] += y[j] * (dy[j] - dot);
    }
  });
}

Tensor dropout(const Tensor& x, double p, Rng& rng, bool training) {
  require(p >= 0.0 && p < 1.0, "dropout: p must be in [0, 1)");
  if (!training || p == 0.0) return x;
  std::vector<double> mask(x.size());
  const double keep = 1.0 / (1.0 - p);
  for (auto& m : mask) m = rng.bernoulli(p) ? 0.0 : keep;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * mask[i];
  return Tensor::make_result(x.shape(), std::move(out), {x}, [mask = std::move(mask)](Node& self) {
    if (auto* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < mask.size(); ++i) (*g)[i] += self.grad[i] * mask[i];
  });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count) {
  const std::size_t n = x.cols();
  require(count > 0 && begin + count <= x.rows(), "slice_rows: range out of bounds");
  std::vector<double> out(x.data().begin() + static_cast<std::ptrdiff_t>(begin * n),
                          x.data().begin() + static_cast<std::ptrdiff_t>((begin + count) * n));
  return Tensor::make_result({count, n}, std::move(out), {x}, [begin, n](Node& self) {
    if (auto* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[begin * n + i] += self.grad[i];
  });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  const std::size_t n = x.cols();
  require(!rows.empty(), "gather_rows: empty index list");
  std::vector<double> out(rows.size() * n);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] < x.rows(), "gather_rows: row index out of range");
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = x[rows[r] * n + j];
  }
  return Tensor::make_result({rows.size(), n}, std::move(out), {x},
                             [idx = std::vector<std::size_t>(rows.begin(), rows.end()), n](Node& self) {
                               if (auto* g = parent_grad(self, 0))
                                 for (std::size_t r = 0; r < idx.size(); ++r)
                                   for (std::size_t j = 0; j < n; ++j) (*g)[idx[r] * n + j] += self.grad[r * n + j];
                             });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  const std::size_t n = parts[0].cols();
  std::vector<double> out;
  std::vector<std::size_t> offsets;
  std::size_t rows = 0;
  for (const auto& p : parts) {
    require(p.cols() == n, "concat_rows: row widths differ");
    offsets.push_back(out.size());
    out.insert(out.end(), p.data().begin(), p.data().end());
    rows += p.rows();
  }
  return Tensor::make_result({rows, n}, std::move(out), std::vector<Tensor>(parts.begin(), parts.end()),
                             [offsets = std::move(offsets)](Node& self) {
                               for (std::size_t p = 0; p < offsets.size(); ++p)
                                 if (auto* g = parent_grad(self, p))
                                   for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[offsets[p] + i];
                             });
}

Tensor reshape(const Tensor& x, Shape shape) {
  require(shape_size(shape) == x.size(), "reshape: element count mismatch");
  std::vector<double> out(x.data().begin(), x.data().end());
  return Tensor::make_result(std::move(shape), std::move(out), {x}, [](Node& self) {
    if (auto* g = parent_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
  });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return Tensor::make_result({1}, {s}, {x}, [](Node& self) {
    if (auto* g = parent_grad(self, 0))
      for (auto& gi : *g) gi += self.grad[0];
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

Tensor rowwise_dot(const Tensor& x, const Tensor& v, const Tensor& c) {
  const std::size_t rows = x.rows(), n = x.cols();
  require(v.rows() == rows && v.cols() == n, "rowwise_dot: head matrix must match token rows");
  require(c.size() == rows, "rowwise_dot: bias count must equal row count");
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = c[r];
    for (std::size_t j = 0; j < n; ++j) acc += x[r * n + j] * v[r * n + j];
    out[r] = acc;
  }
  return Tensor::make_result({rows}, std::move(out), {x, v, c}, [rows, n](Node& self) {
    const auto& xv = parent_value(self, 0);
    const auto& vv = parent_value(self, 1);
    auto* gx = parent_grad(self, 0);
    auto* gv = parent_grad(self, 1);
    auto* gc = parent_grad(self, 2);
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = self.grad[r];
      if (gc) (*gc)[r] += d;
      for (std::size_t j = 0; j < n; ++j) {
        if (gx) (*gx)[r * n + j] += d * vv[r * n + j];
        if (gv) (*gv)[r * n + j] += d * xv[r * n + j];
      }
    }
  });
}

Tensor multi_head_attention(const Tensor& x, const Tensor& w_qkv, const Tensor& b_qkv, const Tensor& w_out,
                            const Tensor& b_out, std::size_t heads) {
  const std::size_t t = x.rows(), d = x.cols();
  require(heads > 0 && d % heads == 0,
          "attention: width " + std::to_string(d) + " not divisible by " + std::to_string(heads) + " heads");
  require(w_qkv.dim() == 2 && w_qkv.shape()[0] == d && w_qkv.shape()[1] == 3 * d, "attention: w_qkv must be Dx3D");
  require(b_qkv.size() == 3 * d, "attention: b_qkv must have 3D entries");
  require(w_out.dim() == 2 && w_out.shape()[0] == d && w_out.shape()[1] == d, "attention: w_out must be DxD");
  require(b_out.size() == d, "attention: b_out must have D entries");

  const std::size_t hd = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
  const std::size_t qkv_w = 3 * d;

  std::vector<double> qkv(t * qkv_w, 0.0);
  gemm_nn(x.data().data(), w_qkv.data().data(), qkv.data(), t, d, qkv_w);
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < qkv_w; ++j) qkv[i * qkv_w + j] += b_qkv[j];

  std::vector<double> probs(heads * t * t);
  std::vector<double> ctx(t * d, 0.0);
  for (std::size_t h = 0; h < heads; ++h) {
    double* p = probs.data() + h * t * t;
    for (std::size_t i = 0; i < t; ++i) {
      const double* q = qkv.data() + i * qkv_w + h * hd;
      double mx = -INFINITY;
      for (std::size_t j = 0; j < t; ++j) {
        const double* k = qkv.data() + j * qkv_w + d + h * hd;
        double s = 0.0;
        for (std::size_t e = 0; e < hd; ++e) s += q[e] * k[e];
        p[i * t + j] = s * inv_sqrt;
        mx = std::max(mx, p[i * t + j]);
      }
      double z = 0.0;
      for (std::size_t j = 0; j < t; ++j) z += (p[i * t + j] = std::exp(p[i * t + j] - mx));
      for (std::size_t j = 0; j < t; ++j) p[i * t + j] /= z;
      double* c = ctx.data() + i * d + h * hd;
      for (std::size_t j = 0; j < t; ++j) {
        const double pij = p[i * t + j];
        const double* v = qkv.data() + j * qkv_w + 2 * d + h * hd;
        for (std::size_t e = 0; e < hd; ++e) c[e] += pij * v[e];
      }
    }
  }

  std::vector<double> out(t * d, 0.0);
  gemm_nn(ctx.data(), w_out.data().data(), out.data(), t, d, d);
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] += b_out[j];

  auto backward = [t, d, heads, hd, inv_sqrt, qkv_w, qkv = std::move(qkv), probs = std::move(probs),
                   ctx = std::move(ctx)](Node& self) {
    const auto& xv = parent_value(self, 0);
    const auto& wqkv = parent_value(self, 1);
    const auto& wo = parent_value(self, 3);
    const double* dout = self.grad.data();

    if (auto* g = parent_grad(self, 3)) gemm_tn(ctx.data(), dout, g->data(), t, d, d);
    if (auto* g = parent_grad(self, 4))
      for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < d; ++j) (*g)[j] += dout[i * d + j];

    const bool need_qkv = self.parents[0]->requires_grad || self.parents[1]->requires_grad ||
                          self.parents[2]->requires_grad;
    if (!need_qkv) return;

    std::vector<double> dctx(t * d, 0.0);
    gemm_nt(dout, wo.data(), dctx.data(), t, d, d);

    std::vector<double> dqkv(t * qkv_w, 0.0);
    std::vector<double> dp(t);
    for (std::size_t h = 0; h < heads; ++h) {
      const double* p = probs.data() + h * t * t;
      for (std::size_t i = 0; i < t; ++i) {
        const double* dc = dctx.data() + i * d + h * hd;
        // dP[i, j] = dctx_i . v_j ; dV_j += P[i, j] * dctx_i
        double dot = 0.0;
        for (std::size_t j = 0; j < t; ++j) {
          const double* v = qkv.data() + j * qkv_w + 2 * d + h * hd;
          double* dv = dqkv.data() + j * qkv_w + 2 * d + h * hd;
          double acc = 0.0;
          const double pij = p[i * t + j];
          for (std::size_t e = 0; e < hd; ++e) {
            acc += dc[e] * v[e];
            dv[e] += pij * dc[e];
          }
          dp[j] = acc;
          dot += acc * pij;
        }
        const double* q = qkv.data() + i * qkv_w + h * hd;
        double* dq = dqkv.data() + i * qkv_w + h * hd;
        for (std::size_t j = 0; j < t; ++j) {
          const double ds = p[i * t + j] * (dp[j] - dot) * inv_sqrt;
          if (ds == 0.0) continue;
          const double* k = qkv.data() + j * qkv_w + d + h * hd;
          double* dk = dqkv.data() + j * qkv_w + d + h * hd;
          for (std::size_t e = 0; e < hd; ++e) {
            dq[e] += ds * k[e];
            dk[e] += ds * q[e];
          }
        }
      }
    }

    if (auto* g = parent_grad(self, 0)) gemm_nt(dqkv.data(), wqkv.data(), g->data(), t, qkv_w, d);
    if (auto* g = parent_grad(self, 1)) gemm_tn(xv.data(), dqkv.data(), g->data(), t, d, qkv_w);
    if (auto* g = parent_grad(self, 2))
      for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < qkv_w; ++j) (*g)[j] += dqkv[i * qkv_w + j];
  };

  return Tensor::make_result(x.shape(), std::move(out), {x, w_qkv, b_qkv, w_out, b_out}, std::move(backward));
}

}  // namespace privi::nn
