#include "prodemb/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace prodemb {

namespace {

// ---- raw kernels -----------------------------------------------------

// C[m x n] += A[m x k] * B[k x n]
void gemm_acc(double* c, const double* a, const double* b, std::size_t m,
              std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        const double* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m x k] += A[m x n] * B[k x n]^T   (shared dim n)
// B is transposed into a scratch buffer first so the inner loop is a
// contiguous fma instead of a scalar reduction.
void gemm_abt_acc(double* c, const double* a, const double* b, std::size_t m,
                  std::size_t n, std::size_t k) {
    std::vector<double> bt(n * k);
    for (std::size_t p = 0; p < k; ++p) {
        for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
    }
    gemm_acc(c, a, bt.data(), m, n, k);
}

// C[k x n] += A[m x k]^T * B[m x n]
void gemm_atb_acc(double* c, const double* a, const double* b, std::size_t m,
                  std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        const double* brow = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            double* crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void softmax_inplace(double* x, std::size_t n) {
    double mx = x[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::exp(x[i] - mx);
        sum += x[i];
    }
    for (std::size_t i = 0; i < n; ++i) x[i] /= sum;
}

// dX = Y .* (dY - dot(dY, Y)) for one softmax row, accumulated into gx.
void softmax_backward_row_acc(double* gx, const double* y, const double* gy,
                              std::size_t n) {
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) d += gy[i] * y[i];
    for (std::size_t i = 0; i < n; ++i) gx[i] += y[i] * (gy[i] - d);
}

bool want_grad(std::initializer_list<const Tensor*> ins) {
    if (!active_tape()) return false;
    for (const Tensor* t : ins) {
        if (t->requires_grad()) return true;
    }
    return false;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw_runtime(std::string(op) + ": shape mismatch " +
                      shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
}

void acc(std::span<double> dst, std::span<const double> src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    Tensor out = Tensor::zeros(a.shape());
    auto ov = out.mutable_value();
    auto av = a.value();
    auto bv = b.value();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
    if (want_grad({&a, &b})) {
        out.set_requires_grad(true);
        auto ad = a.data_ptr();
        auto bd = b.data_ptr();
        auto od = out.data_ptr();
        active_tape()->record("add", {a.id(), b.id()}, out.id(),
                              [ad, bd, od](GradTape& t) {
            auto go = t.grad_if_any(*od);
            if (go.empty()) return;
            if (ad->requires_grad) acc(t.grad_buffer(*ad), go);
            if (bd->requires_grad) acc(t.grad_buffer(*bd), go);
        });
    }
    return out;
}

Tensor add_bias_rows(const Tensor& m, const Tensor& bias) {
    if (m.rank() != 2 || bias.rank() != 1 || m.dim(1) != bias.dim(0)) {
        throw_runtime("add_bias_rows: shape mismatch " + shape_str(m.shape()) +
                      " vs " + shape_str(bias.shape()));
    }
    const std::size_t rows = m.dim(0), cols = m.dim(1);
    Tensor out = Tensor::zeros(m.shape());
    auto ov = out.mutable_value();
    auto mv = m.value();
    auto bv = bias.value();
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            ov[i * cols + j] = mv[i * cols + j] + bv[j];
        }
    }
    if (want_grad({&m, &bias})) {
        out.set_requires_grad(true);
        auto md = m.data_ptr();
        auto bd = bias.data_ptr();
        auto od = out.data_ptr();
        active_tape()->record("add_bias_rows", {m.id(), bias.id()}, out.id(),
                              [md, bd, od, rows, cols](GradTape& t) {
            auto go = t.grad_if_any(*od);
            if (go.empty()) return;
            if (md->requires_grad) acc(t.grad_buffer(*md), go);
            if (bd->requires_grad) {
                auto gb = t.grad_buffer(*bd);
                for (std::size_t i = 0; i < rows; ++i) {
                    for (std::size_t j = 0; j < cols; ++j) {
                        gb[j] += go[i * cols + j];
                    }
                }
            }
        });
    }
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    Tensor out = Tensor::zeros(a.shape());
    auto ov = out.mutable_value();
    auto av = a.value();
    auto bv = b.value();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
    if (want_grad({&a, &b})) {
        out.set_requires_grad(true);
        auto ad = a.data_ptr();
        auto bd = b.data_ptr();
        auto od = out.data_ptr();
        active_tape()->record("mul", {a.id(), b.id()}, out.id(),
                              [ad, bd, od](GradTape& t) {
            auto go = t.grad_if_any(*od);
            if (go.empty()) return;
            if (ad->requires_grad) {
                auto ga = t.grad_buffer(*ad);
                for (std::size_t i = 0; i < go.size(); ++i) {
                    ga[i] += go[i] * bd->value[i];
                }
            }
            if (bd->requires_grad) {
                auto gb = t.grad_buffer(*bd);
                for (std::size_t i = 0; i < go.size(); ++i) {
                    gb[i] += go[i] * ad->value[i];
                }
            }
        });
    }
    return out;
}

Tensor scale(const Tensor& a, double c) {
    Tensor out = Tensor::zeros(a.shape());
    auto ov = out.mutable_value();
    auto av = a.value();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * c;
    if (want_grad({&a})) {
        out.set_requires_grad(true);
        auto ad = a.data_ptr();
        auto od = out.data_ptr();
        active_tape()->record("scale", {a.id()}, out.id(),
                              [ad, od, c](GradTape& t) {
            auto go = t.grad_if_any(*od);
            if (go.empty()) return;
            auto ga = t.grad_buffer(*ad);
            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * c;
        });
    }
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw_runtime("matmul: shape mismatch " + shape_str(a.shape()) +
                      " vs " + shape_str(b.shape()));
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out = Tensor::zeros({m, n});
    gemm_acc(out.mutable_value().data(), a.value().data(), b.value().data(), m,
             k, n);
    if (want_grad({&a, &b})) {
        out.set_requires_grad(true);
        auto ad = a.data_ptr();
        auto bd = b.data_ptr();
        auto od = out.data_ptr();
        active_tape()->record("matmul", {a.id(), b.id()}, out.id(),
                              [ad, bd, od, m, k, n](GradTape& t) {
            auto go = t.grad_if_any(*od);
            if (go.empty()) return;
            if (ad->requires_grad) {
                // dA = dY * B^T
                gemm_abt_acc(t.grad_buffer(*ad).data(), go.data(),
                             bd->value.data(), m, n, k);
            }
            if (bd->requires_grad) {
                // dB = A^T * dY
                gemm_atb_acc(t.grad_buffer(*bd).data(), ad->value.data(),
                             go.data(), m, k, n);
            }
        });
    }
    return out;
}

Tensor affine(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    return add_bias_rows(matmul(x, weight), bias);
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps) {
    if (eps <= 0.0) throw_runtime("layer_norm: eps must be > 0");
    const std::size_t rows = x.rank() == 2 ? x.dim(0) : 1;
    const std::size_t cols = x.rank() == 2 ? x.dim(1) : x.dim(0);
    if (gamma.numel() != cols || beta.numel() != cols) {
        throw_runtime("layer_norm: length mismatch, x cols " +
                      std::to_string(cols) + " gamma " +
                      std::to_string(gamma.numel()) + " beta " +
                      std::to_string(beta.numel()));
    }
    Tensor out = Tensor::zeros(x.shape());
    auto normed = std::make_shared<std::vector<double>>(rows * cols);
    auto inv_std = std::make_shared<std::vector<double>>(rows);
    auto ov = out.mutable_value();
    auto xv = x.value();
    auto gv = gamma.value();
    auto bv = beta.value();
    for (std::size_t i = 0; i < rows; ++i) {
        const double* row = xv.data() + i * cols;
        double mean = 0.0;
        for (std::size_t j = 0; j < cols; ++j) mean += row[j];
        mean /= static_cast<double>(cols);
        double var = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            const double c = row[j] - mean;
            var += c * c;
        }
        var /= static_cast<double>(cols);
        const double inv = 1.0 / std::sqrt(var + eps);
        (*inv_std)[i] = inv;
        for (std::size_t j = 0; j < cols; ++j) {
            const double xh = (row[j] - mean) * inv;
            (*normed)[i * cols + j] = xh;
            ov[i * cols + j] = xh * gv[j] + bv[j];
        }
    }
    if (want_grad({&x, &gamma, &beta})) {
        out.set_requires_grad(true);
        auto xd = x.data_ptr();
        auto gd = gamma.data_ptr();
        auto bd = beta.data_ptr();
        auto od = out.data_ptr();
        active_tape()->record("layer_norm",
                              {x.id(), gamma.id(), beta.id()}, out.id(),
                              [xd, gd, bd, od, normed, inv_std, rows,
                               cols](GradTape& t) {
            auto go = t.grad_if_any(*od);
            if (go.empty()) return;
            if (bd->requires_grad) {
                auto gb = t.grad_buffer(*bd);
                for (std::size_t i = 0; i < rows; ++i) {
                    for (std::size_t j = 0; j < cols; ++j) {
                        gb[j] += go[i * cols + j];
                    }
                }
            }
            if (gd->requires_grad) {
                auto gg = t.grad_buffer(*gd);
                for (std::size_t i = 0; i < rows; ++i) {
                    for (std::size_t j = 0; j < cols; ++j) {
                        gg[j] += go[i * cols + j] * (*normed)[i * cols + j];
                    }
                }
            }
            if (xd->requires_grad) {
                auto gx = t.grad_buffer(*xd);
                const double invc = 1.0 / static_cast<double>(cols);
                for (std::size_t i = 0; i < rows; ++i) {
                    const double* xh = normed->data() + i * cols;
                    const double* g = go.data() + i * cols;
                    double sum_dxh = 0.0, sum_dxh_xh = 0.0;
                    for (std::size_t j = 0; j < cols; ++j) {
                        const double dxh = g[j] * gd->value[j];
                        sum_dxh += dxh;
                        sum_dxh_xh += dxh * xh[j];
                    }
                    const double inv = (*inv_std)[i];
                    for (std::size_t j = 0; j < cols; ++j) {
                        const double dxh = g[j] * gd->value[j];
                        gx[i * cols + j] +=
                            inv * (dxh - invc * sum_dxh -
                                   xh[j] * invc * sum_dxh_xh);
                    }
                }
            }
        });
    }
    return out;
}

Tensor softmax(const Tensor& v) {
    if (v.numel() == 0) throw_runtime("softmax: empty-vector");
    if (v.rank() != 1) {
        throw_runtime("softmax: expected a vector, got " +
                      shape_str(v.shape()));
    }
    if (!v.all_finite()) throw_runtime("softmax: non-finite input");
    Tensor out = Tensor::zeros(v.shape());
    auto ov = out.mutable_value();
    std::copy(v.value().begin(), v.value().end(), ov.begin());
    softmax_inplace(ov.data(), ov.size());
    if (want_grad({&v})) {
        out.set_requires_grad(true);
        auto vd = v.data_ptr();
        auto od = out.data_ptr();
        active_tape()->record("softmax", {v.id()}, out.id(),
                              [vd, od](GradTape& t) {
            auto go = t.grad_if_any(*od);
            if (go.empty()) return;
            softmax_backward_row_acc(t.grad_buffer(*vd).data(),
                                     od->value.data(), go.data(), go.size());
        });
    }
    return out;
}

Tensor masked_softmax_rows(const Tensor& x,
                           const std::vector<std::uint8_t>* mask) {
    if (x.rank() != 2) {
        throw_runtime("masked_softmax_rows: expected a matrix, got " +
                      shape_str(x.shape()));
    }
    const std::size_t rows = x.dim(0), cols = x.dim(1);
    if (mask && mask->size() != rows * cols) {
        throw_runtime("masked_softmax_rows: mask size mismatch");
    }
    Tensor out = Tensor::zeros(x.shape());
    auto ov = out.mutable_value();
    auto xv = x.value();
    for (std::size_t i = 0; i < rows; ++i) {
        const double* row = xv.data() + i * cols;
        const std::uint8_t* mrow = mask ? mask->data() + i * cols : nullptr;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < cols; ++j) {
            if (!mrow || mrow[j]) mx = std::max(mx, row[j]);
        }
        if (!std::isfinite(mx)) {
            throw_runtime("masked_softmax_rows: row " + std::to_string(i) +
                          " has no allowed entries");
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            double e = 0.0;
            if (!mrow || mrow[j]) e = std::exp(row[j] - mx);
            ov[i * cols + j] = e;
            sum += e;
        }
        for (std::size_t j = 0; j < cols; ++j) ov[i * cols + j] /= sum;
    }
    if (want_grad({&x})) {
        out.set_requires_grad(true);
        auto xd = x.data_ptr();
        auto od = out.data_ptr();
        active_tape()->record("masked_softmax_rows", {x.id()}, out.id(),
                              [xd, od, rows, cols](GradTape& t) {
            auto go = t.grad_if_any(*od);
            if (go.empty()) return;
            auto gx = t.grad_buffer(*xd);
            for (std::size_t i = 0; i < rows; ++i) {
                softmax_backward_row_acc(gx.data() + i * cols,
                                         od->value.data() + i * cols,
                                         go.data() + i * cols, cols);
            }
        });
    }
    return out;
}

Tensor gelu(const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape());
    auto ov = out.mutable_value();
    auto xv = x.value();
    constexpr double inv_sqrt2 = 0.7071067811865475244;
    const bool rg = want_grad({&x});
    // derivative cdf + x*pdf, filled during forward so backward is
    // arithmetic only
    std::shared_ptr<std::vector<double>> deriv;
    if (rg) deriv = std::make_shared<std::vector<double>>(ov.size());
    constexpr double inv_sqrt2pi = 0.3989422804014326779;
    for (std::size_t i = 0; i < ov.size(); ++i) {
        const double v = xv[i];
        const double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
        ov[i] = v * cdf;
        if (rg) {
            const double pdf = inv_sqrt2pi * std::exp(-0.5 * v * v);
            (*deriv)[i] = cdf + v * pdf;
        }
    }
    if (rg) {
        out.set_requires_grad(true);
        auto xd = x.data_ptr();
        auto od = out.data_ptr();
        active_tape()->record("gelu", {x.id()}, out.id(),
                              [xd, od, deriv](GradTape& t) {
            auto go = t.grad_if_any(*od);
            if (go.empty()) return;
            auto gx = t.grad_buffer(*xd);
            for (std::size_t i = 0; i < go.size(); ++i) {
                gx[i] += go[i] * (*deriv)[i];
            }
        });
    }
    return out;
}

Tensor scale_rows(const Tensor& m, const Tensor& w) {
    if (m.rank() != 2 || w.rank() != 1 || w.dim(0) != m.dim(0)) {
        throw_runtime("scale_rows: shape mismatch " + shape_str(m.shape()) +
                      " vs " + shape_str(w.shape()));
    }
    const std::size_t rows = m.dim(0), cols = m.dim(1);
    Tensor out = Tensor::zeros(m.shape());
    auto ov = out.mutable_value();
    auto mv = m.value();
    auto wv = w.value();
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            ov[i * cols + j] = mv[i * cols + j] * wv[i];
        }
    }
    if (want_grad({&m, &w})) {
        out.set_requires_grad(true);
        auto md = m.data_ptr();
        auto wd = w.data_ptr();
        auto od = out.data_ptr();
        active_tape()->record("scale_rows", {m.id(), w.id()}, out.id(),
                              [md, wd, od, rows, cols](GradTape& t) {
            auto go = t.grad_if_any(*od);
            if (go.empty()) return;
            if (md->requires_grad) {
                auto gm = t.grad_buffer(*md);
                for (std::size_t i = 0; i < rows; ++i) {
                    for (std::size_t j = 0; j < cols; ++j) {
                        gm[i * cols + j] += go[i * cols + j] * wd->value[i];
                    }
                }
            }
            if (wd->requires_grad) {
                auto gw = t.grad_buffer(*wd);
                for (std::size_t i = 0; i < rows; ++i) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < cols; ++j) {
                        s += go[i * cols + j] * md->value[i * cols + j];
                    }
                    gw[i] += s;
                }
            }
        });
    }
    return out;
}

Tensor column(const Tensor& m, std::size_t j) {
    if (m.rank() != 2 || j >= m.dim(1)) {
        throw_runtime("column: index " + std::to_string(j) +
                      " out of range for " + shape_str(m.shape()));
    }
    const std::size_t rows = m.dim(0), cols = m.dim(1);
    Tensor out = Tensor::zeros({rows});
    auto ov = out.mutable_value();
    auto mv = m.value();
    for (std::size_t i = 0; i < rows; ++i) ov[i] = mv[i * cols + j];
    if (want_grad({&m})) {
        out.set_requires_grad(true);
        auto md = m.data_ptr();
        auto od = out.data_ptr();
        active_tape()->record("column", {m.id()}, out.id(),
                              [md, od, rows, cols, j](GradTape& t) {
            auto go = t.grad_if_any(*od);
            if (go.empty()) return;
            auto gm = t.grad_buffer(*md);
            for (std::size_t i = 0; i < rows; ++i) {
                gm[i * cols + j] += go[i];
            }
        });
    }
    return out;
}

Tensor take_rows(const Tensor& m, std::vector<std::size_t> idx) {
    if (m.rank() != 2) {
        throw_runtime("take_rows: expected a matrix, got " +
                      shape_str(m.shape()));
    }
    const std::size_t cols = m.dim(1);
    for (std::size_t r : idx) {
        if (r >= m.dim(0)) {
            throw_runtime("take_rows: row " + std::to_string(r) +
                          " out of range for " + shape_str(m.shape()));
        }
    }
    Tensor out = Tensor::zeros({idx.size(), cols});
    auto ov = out.mutable_value();
    auto mv = m.value();
    for (std::size_t r = 0; r < idx.size(); ++r) {
        std::copy_n(mv.data() + idx[r] * cols, cols, ov.data() + r * cols);
    }
    if (want_grad({&m})) {
        out.set_requires_grad(true);
        auto md = m.data_ptr();
        auto od = out.data_ptr();
        auto ix = std::make_shared<std::vector<std::size_t>>(std::move(idx));
        active_tape()->record("take_rows", {m.id()}, out.id(),
                              [md, od, ix, cols](GradTape& t) {
            auto go = t.grad_if_any(*od);
            if (go.empty()) return;
            auto gm = t.grad_buffer(*md);
            for (std::size_t r = 0; r < ix->size(); ++r) {
                const double* src = go.data() + r * cols;
                double* dst = gm.data() + (*ix)[r] * cols;
                for (std::size_t j = 0; j < cols; ++j) dst[j] += src[j];
            }
        });
    }
    return out;
}

Tensor take_elems(const Tensor& v, std::vector<std::size_t> idx) {
    if (v.rank() != 1) {
        throw_runtime("take_elems: expected a vector, got " +
                      shape_str(v.shape()));
    }
    for (std::size_t r : idx) {
        if (r >= v.dim(0)) {
            throw_runtime("take_elems: index out of range");
        }
    }
    Tensor out = Tensor::zeros({idx.size()});
    auto ov = out.mutable_value();
    auto vv = v.value();
    for (std::size_t r = 0; r < idx.size(); ++r) ov[r] = vv[idx[r]];
    if (want_grad({&v})) {
        out.set_requires_grad(true);
        auto vd = v.data_ptr();
        auto od = out.data_ptr();
        auto ix = std::make_shared<std::vector<std::size_t>>(std::move(idx));
        active_tape()->record("take_elems", {v.id()}, out.id(),
                              [vd, od, ix](GradTape& t) {
            auto go = t.grad_if_any(*od);
            if (go.empty()) return;
            auto gv = t.grad_buffer(*vd);
            for (std::size_t r = 0; r < ix->size(); ++r) {
                gv[(*ix)[r]] += go[r];
            }
        });
    }
    return out;
}

Tensor scatter_add_rows(const Tensor& base, const Tensor& rows,
                        std::vector<std::size_t> idx) {
    if (base.rank() != 2 || rows.rank() != 2 || base.dim(1) != rows.dim(1) ||
        rows.dim(0) != idx.size()) {
        throw_runtime("scatter_add_rows: shape mismatch");
    }
    const std::size_t cols = base.dim(1);
    for (std::size_t r : idx) {
        if (r >= base.dim(0)) {
            throw_runtime("scatter_add_rows: row index out of range");
        }
    }
    Tensor out = Tensor::from(base.shape(),
                              {base.value().begin(), base.value().end()});
    auto ov = out.mutable_value();
    auto rv = rows.value();
    for (std::size_t r = 0; r < idx.size(); ++r) {
        double* dst = ov.data() + idx[r] * cols;
        const double* src = rv.data() + r * cols;
        for (std::size_t j = 0; j < cols; ++j) dst[j] += src[j];
    }
    if (want_grad({&base, &rows})) {
        out.set_requires_grad(true);
        auto bd = base.data_ptr();
        auto rd = rows.data_ptr();
        auto od = out.data_ptr();
        auto ix = std::make_shared<std::vector<std::size_t>>(std::move(idx));
        active_tape()->record("scatter_add_rows", {base.id(), rows.id()},
                              out.id(), [bd, rd, od, ix, cols](GradTape& t) {
            auto go = t.grad_if_any(*od);
            if (go.empty()) return;
            if (bd->requires_grad) acc(t.grad_buffer(*bd), go);
            if (rd->requires_grad) {
                auto gr = t.grad_buffer(*rd);
                for (std::size_t r = 0; r < ix->size(); ++r) {
                    const double* src = go.data() + (*ix)[r] * cols;
                    double* dst = gr.data() + r * cols;
                    for (std::size_t j = 0; j < cols; ++j) dst[j] += src[j];
                }
            }
        });
    }
    return out;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw_runtime("concat_rows: no parts");
    const std::size_t cols = parts[0].dim(1);
    std::size_t rows = 0;
    for (const Tensor& p : parts) {
        if (p.rank() != 2 || p.dim(1) != cols) {
            throw_runtime("concat_rows: column mismatch");
        }
        rows += p.dim(0);
    }
    Tensor out = Tensor::zeros({rows, cols});
    auto ov = out.mutable_value();
    std::size_t at = 0;
    for (const Tensor& p : parts) {
        auto pv = p.value();
        std::copy(pv.begin(), pv.end(), ov.begin() + at);
        at += pv.size();
    }
    bool rg = false;
    for (const Tensor& p : parts) rg = rg || p.requires_grad();
    if (active_tape() && rg) {
        out.set_requires_grad(true);
        std::vector<std::shared_ptr<TensorData>> pds;
        std::vector<std::uint64_t> ids;
        for (const Tensor& p : parts) {
            pds.push_back(p.data_ptr());
            ids.push_back(p.id());
        }
        auto od = out.data_ptr();
        active_tape()->record("concat_rows", std::move(ids), out.id(),
                              [pds, od](GradTape& t) {
            auto go = t.grad_if_any(*od);
            if (go.empty()) return;
            std::size_t at = 0;
            for (const auto& pd : pds) {
                const std::size_t n = pd->value.size();
                if (pd->requires_grad) {
                    auto gp = t.grad_buffer(*pd);
                    for (std::size_t i = 0; i < n; ++i) gp[i] += go[at + i];
                }
                at += n;
            }
        });
    }
    return out;
}

Tensor mean_rows(const Tensor& m) {
    if (m.rank() != 2 || m.dim(0) == 0) {
        throw_runtime("mean_rows: expected a non-empty matrix, got " +
                      shape_str(m.shape()));
    }
    const std::size_t rows = m.dim(0), cols = m.dim(1);
    Tensor out = Tensor::zeros({cols});
    auto ov = out.mutable_value();
    auto mv = m.value();
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) ov[j] += mv[i * cols + j];
    }
    const double inv = 1.0 / static_cast<double>(rows);
    for (std::size_t j = 0; j < cols; ++j) ov[j] *= inv;
    if (want_grad({&m})) {
        out.set_requires_grad(true);
        auto md = m.data_ptr();
        auto od = out.data_ptr();
        active_tape()->record("mean_rows", {m.id()}, out.id(),
                              [md, od, rows, cols, inv](GradTape& t) {
            auto go = t.grad_if_any(*od);
            if (go.empty()) return;
            auto gm = t.grad_buffer(*md);
            for (std::size_t i = 0; i < rows; ++i) {
                for (std::size_t j = 0; j < cols; ++j) {
                    gm[i * cols + j] += go[j] * inv;
                }
            }
        });
    }
    return out;
}

Tensor l2_normalize(const Tensor& v) {
    if (v.rank() != 1) {
        throw_runtime("l2_normalize: expected a vector, got " +
                      shape_str(v.shape()));
    }
    auto vv = v.value();
    double n2 = 0.0;
    for (double x : vv) n2 += x * x;
    const double norm = std::sqrt(n2);
    if (norm == 0.0) throw_runtime("l2_normalize: zero-norm vector");
    Tensor out = Tensor::zeros(v.shape());
    auto ov = out.mutable_value();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = vv[i] / norm;
    if (want_grad({&v})) {
        out.set_requires_grad(true);
        auto vd = v.data_ptr();
        auto od = out.data_ptr();
        active_tape()->record("l2_normalize", {v.id()}, out.id(),
                              [vd, od, norm](GradTape& t) {
            auto go = t.grad_if_any(*od);
            if (go.empty()) return;
            auto gv = t.grad_buffer(*vd);
            double d = 0.0;
            for (std::size_t i = 0; i < go.size(); ++i) {
                d += go[i] * od->value[i];
            }
            for (std::size_t i = 0; i < go.size(); ++i) {
                gv[i] += (go[i] - od->value[i] * d) / norm;
            }
        });
    }
    return out;
}

Tensor dot(const Tensor& a, const Tensor& b) {
    if (a.numel() != b.numel()) {
        throw_runtime("dot: dimension mismatch " + shape_str(a.shape()) +
                      " vs " + shape_str(b.shape()));
    }
    auto av = a.value();
    auto bv = b.value();
    double s = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
    Tensor out = Tensor::scalar(s);
    if (want_grad({&a, &b})) {
        out.set_requires_grad(true);
        auto ad = a.data_ptr();
        auto bd = b.data_ptr();
        auto od = out.data_ptr();
        active_tape()->record("dot", {a.id(), b.id()}, out.id(),
                              [ad, bd, od](GradTape& t) {
            auto go = t.grad_if_any(*od);
            if (go.empty()) return;
            const double g = go[0];
            if (ad->requires_grad) {
                auto ga = t.grad_buffer(*ad);
                for (std::size_t i = 0; i < ga.size(); ++i) {
                    ga[i] += g * bd->value[i];
                }
            }
            if (bd->requires_grad) {
                auto gb = t.grad_buffer(*bd);
                for (std::size_t i = 0; i < gb.size(); ++i) {
                    gb[i] += g * ad->value[i];
                }
            }
        });
    }
    return out;
}

Tensor pick(const Tensor& v, std::size_t i) {
    if (i >= v.numel()) throw_runtime("pick: index out of range");
    Tensor out = Tensor::scalar(v.value()[i]);
    if (want_grad({&v})) {
        out.set_requires_grad(true);
        auto vd = v.data_ptr();
        auto od = out.data_ptr();
        active_tape()->record("pick", {v.id()}, out.id(),
                              [vd, od, i](GradTape& t) {
            auto go = t.grad_if_any(*od);
            if (go.empty()) return;
            t.grad_buffer(*vd)[i] += go[0];
        });
    }
    return out;
}

Tensor sum(const Tensor& v) {
    auto vv = v.value();
    double s = 0.0;
    for (double x : vv) s += x;
    Tensor out = Tensor::scalar(s);
    if (want_grad({&v})) {
        out.set_requires_grad(true);
        auto vd = v.data_ptr();
        auto od = out.data_ptr();
        active_tape()->record("sum", {v.id()}, out.id(),
                              [vd, od](GradTape& t) {
            auto go = t.grad_if_any(*od);
            if (go.empty()) return;
            auto gv = t.grad_buffer(*vd);
            for (std::size_t i = 0; i < gv.size(); ++i) gv[i] += go[0];
        });
    }
    return out;
}

Tensor attention_core(const Tensor& q, const Tensor& k, const Tensor& v,
                      std::size_t heads, AttentionTrace* trace) {
    if (q.rank() != 2 || q.shape() != k.shape() || q.shape() != v.shape()) {
        throw_runtime("attention_core: Q/K/V shape mismatch");
    }
    const std::size_t tokens = q.dim(0), width = q.dim(1);
    if (heads == 0 || width % heads != 0) {
        throw_runtime("attention_core: width " + std::to_string(width) +
                      " not divisible by " + std::to_string(heads) + " heads");
    }
    const std::size_t dh = width / heads;
    const double sc = 1.0 / std::sqrt(static_cast<double>(dh));

    Tensor out = Tensor::zeros(q.shape());
    auto ov = out.mutable_value();
    const double* qv = q.value().data();
    const double* kv = k.value().data();
    const double* vv = v.value().data();
    // Attention weights per head, kept for backward (and inspection).
    auto attn = std::make_shared<std::vector<double>>(heads * tokens * tokens);
    for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t off = h * dh;
        double* a = attn->data() + h * tokens * tokens;
        for (std::size_t i = 0; i < tokens; ++i) {
            const double* qrow = qv + i * width + off;
            double* arow = a + i * tokens;
            for (std::size_t j = 0; j < tokens; ++j) {
                const double* krow = kv + j * width + off;
                double s = 0.0;
                for (std::size_t d = 0; d < dh; ++d) s += qrow[d] * krow[d];
                arow[j] = s * sc;
            }
            softmax_inplace(arow, tokens);
            double* orow = ov.data() + i * width + off;
            for (std::size_t j = 0; j < tokens; ++j) {
                const double w = arow[j];
                const double* vrow = vv + j * width + off;
                for (std::size_t d = 0; d < dh; ++d) orow[d] += w * vrow[d];
            }
        }
    }
    if (trace) {
        trace->tokens = tokens;
        trace->weights.assign(heads, std::vector<double>(tokens * tokens));
        for (std::size_t h = 0; h < heads; ++h) {
            std::copy_n(attn->data() + h * tokens * tokens, tokens * tokens,
                        trace->weights[h].begin());
        }
    }
    if (want_grad({&q, &k, &v})) {
        out.set_requires_grad(true);
        auto qd = q.data_ptr();
        auto kd = k.data_ptr();
        auto vd = v.data_ptr();
        auto od = out.data_ptr();
        active_tape()->record("attention_core", {q.id(), k.id(), v.id()},
                              out.id(),
                              [qd, kd, vd, od, attn, heads, tokens, dh,
                               sc](GradTape& t) {
            auto go = t.grad_if_any(*od);
            if (go.empty()) return;
            const std::size_t width = heads * dh;
            auto gq = t.grad_buffer(*qd);
            auto gk = t.grad_buffer(*kd);
            auto gv = t.grad_buffer(*vd);
            std::vector<double> ga(tokens * tokens);
            std::vector<double> gs(tokens * tokens);
            for (std::size_t h = 0; h < heads; ++h) {
                const std::size_t off = h * dh;
                const double* a = attn->data() + h * tokens * tokens;
                // dA = dO * V^T ;  dV += A^T * dO   (per-head column block)
                for (std::size_t i = 0; i < tokens; ++i) {
                    const double* grow = go.data() + i * width + off;
                    double* garow = ga.data() + i * tokens;
                    for (std::size_t j = 0; j < tokens; ++j) {
                        const double* vrow = vd->value.data() + j * width + off;
                        double s = 0.0;
                        for (std::size_t d = 0; d < dh; ++d) {
                            s += grow[d] * vrow[d];
                        }
                        garow[j] = s;
                    }
                }
                for (std::size_t j = 0; j < tokens; ++j) {
                    double* gvrow = gv.data() + j * width + off;
                    for (std::size_t i = 0; i < tokens; ++i) {
                        const double w = a[i * tokens + j];
                        const double* grow = go.data() + i * width + off;
                        for (std::size_t d = 0; d < dh; ++d) {
                            gvrow[d] += w * grow[d];
                        }
                    }
                }
                std::fill(gs.begin(), gs.end(), 0.0);
                for (std::size_t i = 0; i < tokens; ++i) {
                    softmax_backward_row_acc(gs.data() + i * tokens,
                                             a + i * tokens,
                                             ga.data() + i * tokens, tokens);
                }
                // dQ += sc * dS * K ;  dK += sc * dS^T * Q
                for (std::size_t i = 0; i < tokens; ++i) {
                    double* gqrow = gq.data() + i * width + off;
                    const double* gsrow = gs.data() + i * tokens;
                    for (std::size_t j = 0; j < tokens; ++j) {
                        const double w = gsrow[j] * sc;
                        const double* krow = kd->value.data() + j * width + off;
                        for (std::size_t d = 0; d < dh; ++d) {
                            gqrow[d] += w * krow[d];
                        }
                        double* gkrow = gk.data() + j * width + off;
                        const double* qrow = qd->value.data() + i * width + off;
                        for (std::size_t d = 0; d < dh; ++d) {
                            gkrow[d] += w * qrow[d];
                        }
                    }
                }
            }
        });
    }
    return out;
}

Tensor info_nce_loss(const Tensor& q, const Tensor& p,
                     std::span<const std::span<const double>> negatives,
                     double tau) {
    if (tau <= 0.0) throw_runtime("info_nce: temperature must be > 0");
    if (negatives.empty()) throw_runtime("info_nce: empty negatives");
    const std::size_t dim = q.numel();
    if (p.numel() != dim) throw_runtime("info_nce: dimension mismatch");
    for (const auto& n : negatives) {
        if (n.size() != dim) throw_runtime("info_nce: dimension mismatch");
    }
    const std::size_t cands = 1 + negatives.size();
    auto logits = std::make_shared<std::vector<double>>(cands);
    const double* qv = q.value().data();
    {
        const double* pv = p.value().data();
        double s = 0.0;
        for (std::size_t i = 0; i < dim; ++i) s += qv[i] * pv[i];
        (*logits)[0] = s / tau;
    }
    for (std::size_t c = 1; c < cands; ++c) {
        const double* nv = negatives[c - 1].data();
        double s = 0.0;
        for (std::size_t i = 0; i < dim; ++i) s += qv[i] * nv[i];
        (*logits)[c] = s / tau;
    }
    // loss = LSE(logits) - logits[0]
    double mx = (*logits)[0];
    for (double l : *logits) mx = std::max(mx, l);
    double sum = 0.0;
    for (double l : *logits) sum += std::exp(l - mx);
    const double loss = mx + std::log(sum) - (*logits)[0];
    Tensor out = Tensor::scalar(loss);

    if (want_grad({&q, &p})) {
        out.set_requires_grad(true);
        // softmax over logits, reused by backward
        auto w = std::make_shared<std::vector<double>>(cands);
        for (std::size_t c = 0; c < cands; ++c) {
            (*w)[c] = std::exp((*logits)[c] - mx) / sum;
        }
        auto qd = q.data_ptr();
        auto pd = p.data_ptr();
        auto od = out.data_ptr();
        std::vector<std::span<const double>> negs(negatives.begin(),
                                                  negatives.end());
        active_tape()->record("info_nce", {q.id(), p.id()}, out.id(),
                              [qd, pd, od, w, negs = std::move(negs), tau,
                               dim](GradTape& t) {
            auto go = t.grad_if_any(*od);
            if (go.empty()) return;
            const double g = go[0] / tau;
            const double w0 = ((*w)[0] - 1.0) * g;
            if (qd->requires_grad) {
                auto gq = t.grad_buffer(*qd);
                const double* pv = pd->value.data();
                for (std::size_t i = 0; i < dim; ++i) gq[i] += w0 * pv[i];
                for (std::size_t c = 0; c < negs.size(); ++c) {
                    const double wc = (*w)[c + 1] * g;
                    const double* nv = negs[c].data();
                    for (std::size_t i = 0; i < dim; ++i) {
                        gq[i] += wc * nv[i];
                    }
                }
            }
            if (pd->requires_grad) {
                auto gp = t.grad_buffer(*pd);
                const double* qv = qd->value.data();
                for (std::size_t i = 0; i < dim; ++i) gp[i] += w0 * qv[i];
            }
        });
    }
    return out;
}

} // namespace prodemb
