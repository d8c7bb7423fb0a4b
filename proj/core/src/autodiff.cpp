#include "dip/autodiff.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

namespace dip::ad {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double norm_cdf(double x) { return 0.5 * (1.0 + std::erf(x * kInvSqrt2)); }
double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

}  // namespace

Var Tape::push(Matrix value, bool requires_grad,
               std::function<void(Tape&)> back) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) {
    n.grad = Matrix(n.value.rows(), n.value.cols());
  }
  n.backprop = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Matrix value) {
  return push(std::move(value), false, nullptr);
}

Var Tape::param(Matrix value) { return push(std::move(value), true, nullptr); }

const Matrix& Tape::grad(Var v) const {
  const Node& n = node(v);
  if (!n.requires_grad) {
    throw Error("Tape::grad: node does not track gradients");
  }
  return n.grad;
}

void Tape::accumulate(std::size_t index, const Matrix& delta) {
  Node& n = nodes_[index];
  if (!n.requires_grad) return;
  n.grad += delta;
}

void Tape::backward(Var scalar_root) {
  if (swept_) {
    throw Error("Tape::backward: tape already swept");
  }
  const Node& root = node(scalar_root);
  if (root.value.rows() != 1 || root.value.cols() != 1) {
    throw ShapeError("Tape::backward: root must be 1x1, got " +
                     shape_string(root.value));
  }
  if (!root.requires_grad) {
    throw Error("Tape::backward: root does not depend on any param");
  }
  swept_ = true;
  nodes_[scalar_root.index].grad(0, 0) = 1.0;
  for (std::size_t i = scalar_root.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.backprop) n.backprop(*this);
  }
}

Var Tape::add(Var a, Var b) {
  ensure_same_shape(value(a), value(b), "ad::add");
  Matrix out = value(a) + value(b);
  const bool rg = requires_grad(a) || requires_grad(b);
  const std::size_t ai = a.index, bi = b.index;
  Var v{nodes_.size()};
  return push(std::move(out), rg, [ai, bi, v](Tape& t) {
    const Matrix& g = t.nodes_[v.index].grad;
    t.accumulate(ai, g);
    t.accumulate(bi, g);
  });
}

Var Tape::sub(Var a, Var b) {
  ensure_same_shape(value(a), value(b), "ad::sub");
  Matrix out = value(a) - value(b);
  const bool rg = requires_grad(a) || requires_grad(b);
  const std::size_t ai = a.index, bi = b.index;
  Var v{nodes_.size()};
  return push(std::move(out), rg, [ai, bi, v](Tape& t) {
    const Matrix& g = t.nodes_[v.index].grad;
    t.accumulate(ai, g);
    if (t.nodes_[bi].requires_grad) {
      Matrix neg = g;
      neg *= -1.0;
      t.accumulate(bi, neg);
    }
  });
}

Var Tape::scale(Var a, double s) {
  Matrix out = value(a);
  out *= s;
  const std::size_t ai = a.index;
  Var v{nodes_.size()};
  return push(std::move(out), requires_grad(a), [ai, s, v](Tape& t) {
    Matrix g = t.nodes_[v.index].grad;
    g *= s;
    t.accumulate(ai, g);
  });
}

Var Tape::matmul(Var a, Var b) {
  Matrix out = dip::matmul(value(a), value(b));
  const bool rg = requires_grad(a) || requires_grad(b);
  const std::size_t ai = a.index, bi = b.index;
  Var v{nodes_.size()};
  return push(std::move(out), rg, [ai, bi, v](Tape& t) {
    const Matrix& g = t.nodes_[v.index].grad;
    if (t.nodes_[ai].requires_grad) {
      t.accumulate(ai, dip::matmul(g, t.nodes_[bi].value.transposed()));
    }
    if (t.nodes_[bi].requires_grad) {
      t.accumulate(bi, dip::matmul(t.nodes_[ai].value.transposed(), g));
    }
  });
}

Var Tape::hadamard(Var a, Var b) {
  Matrix out = dip::hadamard(value(a), value(b));
  const bool rg = requires_grad(a) || requires_grad(b);
  const std::size_t ai = a.index, bi = b.index;
  Var v{nodes_.size()};
  return push(std::move(out), rg, [ai, bi, v](Tape& t) {
    const Matrix& g = t.nodes_[v.index].grad;
    if (t.nodes_[ai].requires_grad) {
      t.accumulate(ai, dip::hadamard(g, t.nodes_[bi].value));
    }
    if (t.nodes_[bi].requires_grad) {
      t.accumulate(bi, dip::hadamard(g, t.nodes_[ai].value));
    }
  });
}

Var Tape::transpose(Var a) {
  Matrix out = value(a).transposed();
  const std::size_t ai = a.index;
  Var v{nodes_.size()};
  return push(std::move(out), requires_grad(a), [ai, v](Tape& t) {
    t.accumulate(ai, t.nodes_[v.index].grad.transposed());
  });
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) {
    throw ShapeError("ad::concat_rows: no parts");
  }
  const std::size_t cols = value(parts[0]).cols();
  std::size_t rows = 0;
  bool rg = false;
  for (Var p : parts) {
    if (value(p).cols() != cols) {
      throw ShapeError("ad::concat_rows: column mismatch");
    }
    rows += value(p).rows();
    rg = rg || requires_grad(p);
  }
  Matrix out(rows, cols);
  std::size_t at = 0;
  for (Var p : parts) {
    const Matrix& m = value(p);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < cols; ++c) out(at + r, c) = m(r, c);
    }
    at += m.rows();
  }
  std::vector<std::size_t> idx;
  std::vector<std::size_t> sizes;
  for (Var p : parts) {
    idx.push_back(p.index);
    sizes.push_back(value(p).rows());
  }
  Var v{nodes_.size()};
  return push(std::move(out), rg, [idx, sizes, cols, v](Tape& t) {
    const Matrix& g = t.nodes_[v.index].grad;
    std::size_t at = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (t.nodes_[idx[k]].requires_grad) {
        Matrix part(sizes[k], cols);
        for (std::size_t r = 0; r < sizes[k]; ++r) {
          for (std::size_t c = 0; c < cols; ++c) part(r, c) = g(at + r, c);
        }
        t.accumulate(idx[k], part);
      }
      at += sizes[k];
    }
  });
}

Var Tape::slice_rows(Var a, std::size_t begin, std::size_t end) {
  const Matrix& m = value(a);
  if (begin > end || end > m.rows()) {
    throw ShapeError("ad::slice_rows: window [" + std::to_string(begin) +
                     ", " + std::to_string(end) + ") outside " +
                     shape_string(m));
  }
  Matrix out(end - begin, m.cols());
  for (std::size_t r = begin; r < end; ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out(r - begin, c) = m(r, c);
  }
  const std::size_t ai = a.index;
  const std::size_t rows = m.rows(), cols = m.cols();
  Var v{nodes_.size()};
  return push(std::move(out), requires_grad(a),
              [ai, begin, end, rows, cols, v](Tape& t) {
                const Matrix& g = t.nodes_[v.index].grad;
                Matrix full(rows, cols);
                for (std::size_t r = begin; r < end; ++r) {
                  for (std::size_t c = 0; c < cols; ++c) {
                    full(r, c) = g(r - begin, c);
                  }
                }
                t.accumulate(ai, full);
              });
}

Var Tape::add_row_broadcast(Var x, Var bias) {
  const Matrix& xm = value(x);
  const Matrix& bm = value(bias);
  if (bm.rows() != 1 || bm.cols() != xm.cols()) {
    throw ShapeError("ad::add_row_broadcast: bias must be 1x" +
                     std::to_string(xm.cols()));
  }
  Matrix out = xm;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bm(0, c);
  }
  const bool rg = requires_grad(x) || requires_grad(bias);
  const std::size_t xi = x.index, bi = bias.index;
  Var v{nodes_.size()};
  return push(std::move(out), rg, [xi, bi, v](Tape& t) {
    const Matrix& g = t.nodes_[v.index].grad;
    t.accumulate(xi, g);
    if (t.nodes_[bi].requires_grad) {
      Matrix colsum(1, g.cols());
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) colsum(0, c) += g(r, c);
      }
      t.accumulate(bi, colsum);
    }
  });
}

Var Tape::softmax_rows(Var a) {
  Matrix out = value(a);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    double mx = out(r, 0);
    for (std::size_t c = 1; c < out.cols(); ++c) mx = std::max(mx, out(r, c));
    double sum = 0.0;
    for (std::size_t c = 0; c < out.cols(); ++c) {
      out(r, c) = std::exp(out(r, c) - mx);
      sum += out(r, c);
    }
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) /= sum;
  }
  const std::size_t ai = a.index;
  Var v{nodes_.size()};
  return push(std::move(out), requires_grad(a), [ai, v](Tape& t) {
    const Matrix& y = t.nodes_[v.index].value;
    const Matrix& g = t.nodes_[v.index].grad;
    Matrix dx(y.rows(), y.cols());
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) {
        dx(r, c) = y(r, c) * (g(r, c) - dot);
      }
    }
    t.accumulate(ai, dx);
  });
}

Var Tape::layer_norm_rows(Var a, double eps) {
  const Matrix& x = value(a);
  const std::size_t rows = x.rows(), cols = x.cols();
  Matrix out(rows, cols);
  std::vector<double> inv_std(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mean += x(r, c);
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = x(r, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) {
      out(r, c) = (x(r, c) - mean) * inv_std[r];
    }
  }
  const std::size_t ai = a.index;
  Var v{nodes_.size()};
  return push(std::move(out), requires_grad(a),
              [ai, inv_std = std::move(inv_std), v](Tape& t) {
                const Matrix& y = t.nodes_[v.index].value;
                const Matrix& g = t.nodes_[v.index].grad;
                const std::size_t cols = y.cols();
                Matrix dx(y.rows(), cols);
                for (std::size_t r = 0; r < y.rows(); ++r) {
                  double mean_g = 0.0, mean_gy = 0.0;
                  for (std::size_t c = 0; c < cols; ++c) {
                    mean_g += g(r, c);
                    mean_gy += g(r, c) * y(r, c);
                  }
                  mean_g /= static_cast<double>(cols);
                  mean_gy /= static_cast<double>(cols);
                  for (std::size_t c = 0; c < cols; ++c) {
                    dx(r, c) = inv_std[r] *
                               (g(r, c) - mean_g - y(r, c) * mean_gy);
                  }
                }
                t.accumulate(ai, dx);
              });
}

Var Tape::gelu(Var a) {
  const Matrix& x = value(a);
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.data().size(); ++i) {
    const double xi = x.data()[i];
    out.data()[i] = xi * norm_cdf(xi);
  }
  const std::size_t ai = a.index;
  Var v{nodes_.size()};
  return push(std::move(out), requires_grad(a), [ai, v](Tape& t) {
    const Matrix& x = t.nodes_[ai].value;
    const Matrix& g = t.nodes_[v.index].grad;
    Matrix dx(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.data().size(); ++i) {
      const double xi = x.data()[i];
      dx.data()[i] = g.data()[i] * (norm_cdf(xi) + xi * norm_pdf(xi));
    }
    t.accumulate(ai, dx);
  });
}

Var Tape::normalize_rows(Var a) {
  const Matrix& x = value(a);
  const std::size_t rows = x.rows(), cols = x.cols();
  Matrix out(rows, cols);
  std::vector<double> norms(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += x(r, c) * x(r, c);
    const double norm = std::sqrt(s);
    if (norm == 0.0) {
      throw DomainError("ad::normalize_rows: zero-norm row");
    }
    norms[r] = norm;
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = x(r, c) / norm;
  }
  const std::size_t ai = a.index;
  Var v{nodes_.size()};
  return push(std::move(out), requires_grad(a),
              [ai, norms = std::move(norms), v](Tape& t) {
                const Matrix& y = t.nodes_[v.index].value;
                const Matrix& g = t.nodes_[v.index].grad;
                const std::size_t cols = y.cols();
                Matrix dx(y.rows(), cols);
                for (std::size_t r = 0; r < y.rows(); ++r) {
                  double dot = 0.0;
                  for (std::size_t c = 0; c < cols; ++c) {
                    dot += g(r, c) * y(r, c);
                  }
                  for (std::size_t c = 0; c < cols; ++c) {
                    dx(r, c) = (g(r, c) - y(r, c) * dot) / norms[r];
                  }
                }
                t.accumulate(ai, dx);
              });
}

Var Tape::cross_entropy_logits(Var logits, int label) {
  const Matrix& z = value(logits);
  if (z.rows() != 1) {
    throw ShapeError("ad::cross_entropy_logits: logits must be a single row");
  }
  const int c_total = static_cast<int>(z.cols());
  if (label < 0 || label >= c_total) {
    throw RangeError("ad::cross_entropy_logits: label " +
                     std::to_string(label) + " outside [0, " +
                     std::to_string(c_total) + ")");
  }
  double mx = z(0, 0);
  for (std::size_t c = 1; c < z.cols(); ++c) mx = std::max(mx, z(0, c));
  double sum = 0.0;
  for (std::size_t c = 0; c < z.cols(); ++c) sum += std::exp(z(0, c) - mx);
  const double lse = mx + std::log(sum);
  Matrix out(1, 1);
  out(0, 0) = lse - z(0, static_cast<std::size_t>(label));

  Matrix softmax(1, z.cols());
  for (std::size_t c = 0; c < z.cols(); ++c) {
    softmax(0, c) = std::exp(z(0, c) - lse);
  }
  const std::size_t zi = logits.index;
  Var v{nodes_.size()};
  return push(std::move(out), requires_grad(logits),
              [zi, label, softmax = std::move(softmax), v](Tape& t) {
                const double g = t.nodes_[v.index].grad(0, 0);
                Matrix dz = softmax;
                dz(0, static_cast<std::size_t>(label)) -= 1.0;
                dz *= g;
                t.accumulate(zi, dz);
              });
}

}  // namespace dip::ad
