#include "gsformer/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "gsformer/errors.hpp"
#include "gsformer/flops.hpp"

namespace gsf {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

bool should_record(std::initializer_list<const Tensor*> inputs) {
    if (Tape::current() == nullptr) return false;
    return std::any_of(inputs.begin(), inputs.end(), [](const Tensor* t) { return t->requires_grad(); });
}

bool should_record(const std::vector<Tensor>& inputs) {
    if (Tape::current() == nullptr) return false;
    return std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
    if (t.rank() != rank) {
        throw dimension_error(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                              shape_str(t.shape()));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw dimension_error(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                              shape_str(b.shape()));
    }
}

std::vector<double>* grad_of(const Tensor& t) { return t.requires_grad() ? &t.impl()->ensure_grad() : nullptr; }

// Applies f elementwise; df(x, y) gives dy/dx from input and output values.
template <typename F, typename DF>
Tensor unary(const Tensor& x, F f, DF df) {
    std::vector<double> out(x.size());
    const auto in = x.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
    count_aux(out.size());
    Tensor y(x.shape(), std::move(out));
    if (should_record({&x})) {
        Tape::current()->record(y, {x}, [x, y, df](const std::vector<double>& gy) {
            auto* gx = grad_of(x);
            if (!gx) return;
            const auto xv = x.values();
            const auto yv = y.values();
            for (std::size_t i = 0; i < gy.size(); ++i) (*gx)[i] += gy[i] * df(xv[i], yv[i]);
        });
    }
    return y;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    const auto m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw dimension_error("matmul: inner extents differ " + shape_str(a.shape()) + " . " + shape_str(b.shape()));
    }
    std::vector<double> out(m * n);
    MutMap(out.data(), m, n).noalias() = ConstMap(a.values().data(), m, k) * ConstMap(b.values().data(), k, n);
    count_macs(static_cast<std::uint64_t>(m) * k * n);
    Tensor c({m, n}, std::move(out));
    if (should_record({&a, &b})) {
        Tape::current()->record(c, {a, b}, [a, b, m, k, n](const std::vector<double>& gc) {
            ConstMap dc(gc.data(), m, n);
            if (auto* ga = grad_of(a)) {
                MutMap(ga->data(), m, k).noalias() += dc * ConstMap(b.values().data(), k, n).transpose();
            }
            if (auto* gb = grad_of(b)) {
                MutMap(gb->data(), k, n).noalias() += ConstMap(a.values().data(), m, k).transpose() * dc;
            }
        });
    }
    return c;
}

Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b) {
    require_rank(a, 3, "bmm");
    require_rank(b, 3, "bmm");
    const auto batch = a.dim(0), p = a.dim(1), k = a.dim(2);
    const auto q = transpose_b ? b.dim(1) : b.dim(2);
    const auto bk = transpose_b ? b.dim(2) : b.dim(1);
    if (b.dim(0) != batch || bk != k) {
        throw dimension_error("bmm: incompatible " + shape_str(a.shape()) + " . " + shape_str(b.shape()) +
                              (transpose_b ? "^T" : ""));
    }
    std::vector<double> out(batch * p * q);
    const double* av = a.values().data();
    const double* bv = b.values().data();
    for (std::size_t i = 0; i < batch; ++i) {
        ConstMap ai(av + i * p * k, p, k);
        MutMap ci(out.data() + i * p * q, p, q);
        if (transpose_b) {
            ci.noalias() = ai * ConstMap(bv + i * q * k, q, k).transpose();
        } else {
            ci.noalias() = ai * ConstMap(bv + i * k * q, k, q);
        }
    }
    count_macs(static_cast<std::uint64_t>(batch) * p * k * q);
    Tensor c({batch, p, q}, std::move(out));
    if (should_record({&a, &b})) {
        Tape::current()->record(c, {a, b}, [a, b, batch, p, k, q, transpose_b](const std::vector<double>& gc) {
            auto* ga = grad_of(a);
            auto* gb = grad_of(b);
            const double* av = a.values().data();
            const double* bv = b.values().data();
            for (std::size_t i = 0; i < batch; ++i) {
                ConstMap dc(gc.data() + i * p * q, p, q);
                if (transpose_b) {
                    ConstMap bi(bv + i * q * k, q, k);
                    if (ga) MutMap(ga->data() + i * p * k, p, k).noalias() += dc * bi;
                    if (gb) MutMap(gb->data() + i * q * k, q, k).noalias() += dc.transpose() * ConstMap(av + i * p * k, p, k);
                } else {
                    ConstMap bi(bv + i * k * q, k, q);
                    if (ga) MutMap(ga->data() + i * p * k, p, k).noalias() += dc * bi.transpose();
                    if (gb) MutMap(gb->data() + i * k * q, k, q).noalias() += ConstMap(av + i * p * k, p, k).transpose() * dc;
                }
            }
        });
    }
    return c;
}

namespace {
template <typename F>
Tensor binary(const Tensor& a, const Tensor& b, const char* name, F f) {
    require_same_shape(a, b, name);
    std::vector<double> out(a.size());
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i], bv[i]);
    count_aux(out.size());
    return Tensor(a.shape(), std::move(out));
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    Tensor c = binary(a, b, "add", [](double x, double y) { return x + y; });
    if (should_record({&a, &b})) {
        Tape::current()->record(c, {a, b}, [a, b](const std::vector<double>& gc) {
            for (const Tensor* t : {&a, &b}) {
                if (auto* g = grad_of(*t)) {
                    for (std::size_t i = 0; i < gc.size(); ++i) (*g)[i] += gc[i];
                }
            }
        });
    }
    return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    Tensor c = binary(a, b, "sub", [](double x, double y) { return x - y; });
    if (should_record({&a, &b})) {
        Tape::current()->record(c, {a, b}, [a, b](const std::vector<double>& gc) {
            if (auto* g = grad_of(a)) {
                for (std::size_t i = 0; i < gc.size(); ++i) (*g)[i] += gc[i];
            }
            if (auto* g = grad_of(b)) {
                for (std::size_t i = 0; i < gc.size(); ++i) (*g)[i] -= gc[i];
            }
        });
    }
    return c;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    Tensor c = binary(a, b, "mul", [](double x, double y) { return x * y; });
    if (should_record({&a, &b})) {
        Tape::current()->record(c, {a, b}, [a, b](const std::vector<double>& gc) {
            const auto av = a.values();
            const auto bv = b.values();
            if (auto* g = grad_of(a)) {
                for (std::size_t i = 0; i < gc.size(); ++i) (*g)[i] += gc[i] * bv[i];
            }
            if (auto* g = grad_of(b)) {
                for (std::size_t i = 0; i < gc.size(); ++i) (*g)[i] += gc[i] * av[i];
            }
        });
    }
    return c;
}

Tensor scale(const Tensor& x, double factor) {
    return unary(x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Tensor add_rows(const Tensor& x, const Tensor& b) {
    require_rank(x, 2, "add_rows");
    const auto rows = x.dim(0), cols = x.dim(1);
    const std::size_t period = b.rank() == 1 ? 1 : b.dim(0);
    const std::size_t bcols = b.rank() == 1 ? b.dim(0) : b.dim(1);
    if (b.rank() > 2 || bcols != cols || rows % period != 0) {
        throw dimension_error("add_rows: cannot broadcast " + shape_str(b.shape()) + " over " + shape_str(x.shape()));
    }
    std::vector<double> out(x.values().begin(), x.values().end());
    const auto bv = b.values();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* brow = bv.data() + (r % period) * cols;
        double* orow = out.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) orow[c] += brow[c];
    }
    count_aux(out.size());
    Tensor y(x.shape(), std::move(out));
    if (should_record({&x, &b})) {
        Tape::current()->record(y, {x, b}, [x, b, rows, cols, period](const std::vector<double>& gy) {
            if (auto* g = grad_of(x)) {
                for (std::size_t i = 0; i < gy.size(); ++i) (*g)[i] += gy[i];
            }
            if (auto* g = grad_of(b)) {
                for (std::size_t r = 0; r < rows; ++r) {
                    double* grow = g->data() + (r % period) * cols;
                    const double* src = gy.data() + r * cols;
                    for (std::size_t c = 0; c < cols; ++c) grow[c] += src[c];
                }
            }
        });
    }
    return y;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) { return add_rows(matmul(x, w), bias); }

Tensor sigmoid(const Tensor& x) {
    return unary(
        x,
        [](double v) {
            // Branches keep exp() from overflowing for large |v|.
            if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
            const double e = std::exp(v);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor gelu(const Tensor& x) {
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    return unary(
        x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * inv_sqrt2)); },
        [inv_sqrt2pi](double v, double) {
            const double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
            return cdf + v * inv_sqrt2pi * std::exp(-0.5 * v * v);
        });
}

Tensor relu(const Tensor& x) {
    return unary(x, [](double v) { return v > 0 ? v : 0.0; }, [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Tensor abs(const Tensor& x) {
    return unary(
        x, [](double v) { return std::fabs(v); },
        [](double v, double) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
    if (axis >= x.rank()) throw dimension_error("softmax: axis out of range for " + shape_str(x.shape()));
    const auto& shape = x.shape();
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
    const std::size_t len = shape[axis];

    std::vector<double> out(x.size());
    const auto xv = x.values();
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
            const std::size_t base = o * len * inner + in;
            double peak = xv[base];
            for (std::size_t j = 1; j < len; ++j) peak = std::max(peak, xv[base + j * inner]);
            double total = 0.0;
            for (std::size_t j = 0; j < len; ++j) {
                const double e = std::exp(xv[base + j * inner] - peak);
                out[base + j * inner] = e;
                total += e;
            }
            for (std::size_t j = 0; j < len; ++j) out[base + j * inner] /= total;
        }
    }
    count_aux(3 * out.size());
    Tensor y(shape, std::move(out));
    if (should_record({&x})) {
        Tape::current()->record(y, {x}, [x, y, outer, inner, len](const std::vector<double>& gy) {
            auto* gx = grad_of(x);
            if (!gx) return;
            const auto yv = y.values();
            for (std::size_t o = 0; o < outer; ++o) {
                for (std::size_t in = 0; in < inner; ++in) {
                    const std::size_t base = o * len * inner + in;
                    double dot = 0.0;
                    for (std::size_t j = 0; j < len; ++j) dot += gy[base + j * inner] * yv[base + j * inner];
                    for (std::size_t j = 0; j < len; ++j) {
                        const auto idx = base + j * inner;
                        (*gx)[idx] += yv[idx] * (gy[idx] - dot);
                    }
                }
            }
        });
    }
    return y;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias) {
    const std::size_t width = x.shape().back();
    if (gain.size() != width || bias.size() != width) {
        throw dimension_error("layer_norm: gain/bias must match last extent of " + shape_str(x.shape()));
    }
    const std::size_t rows = x.size() / width;
    std::vector<double> out(x.size());
    auto xhat = std::make_shared<std::vector<double>>(x.size());
    auto rstd = std::make_shared<std::vector<double>>(rows);
    const auto xv = x.values();
    const auto gv = gain.values();
    const auto bv = bias.values();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = xv.data() + r * width;
        double mu = 0.0;
        for (std::size_t c = 0; c < width; ++c) mu += row[c];
        mu /= static_cast<double>(width);
        double var = 0.0;
        for (std::size_t c = 0; c < width; ++c) var += (row[c] - mu) * (row[c] - mu);
        var /= static_cast<double>(width);
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        (*rstd)[r] = inv;
        for (std::size_t c = 0; c < width; ++c) {
            const double h = (row[c] - mu) * inv;
            (*xhat)[r * width + c] = h;
            out[r * width + c] = h * gv[c] + bv[c];
        }
    }
    count_aux(5 * out.size());
    Tensor y(x.shape(), std::move(out));
    if (should_record({&x, &gain, &bias})) {
        Tape::current()->record(y, {x, gain, bias}, [x, gain, bias, xhat, rstd, rows, width](const std::vector<double>& gy) {
            auto* gx = grad_of(x);
            auto* gg = grad_of(gain);
            auto* gb = grad_of(bias);
            const auto gv = gain.values();
            std::vector<double> dxhat(width);
            for (std::size_t r = 0; r < rows; ++r) {
                const double* dy = gy.data() + r * width;
                const double* h = xhat->data() + r * width;
                double mean_d = 0.0, mean_dh = 0.0;
                for (std::size_t c = 0; c < width; ++c) {
                    dxhat[c] = dy[c] * gv[c];
                    mean_d += dxhat[c];
                    mean_dh += dxhat[c] * h[c];
                    if (gg) (*gg)[c] += dy[c] * h[c];
                    if (gb) (*gb)[c] += dy[c];
                }
                if (!gx) continue;
                mean_d /= static_cast<double>(width);
                mean_dh /= static_cast<double>(width);
                for (std::size_t c = 0; c < width; ++c) {
                    (*gx)[r * width + c] += (*rstd)[r] * (dxhat[c] - mean_d - h[c] * mean_dh);
                }
            }
        });
    }
    return y;
}

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& indices) {
    require_rank(x, 2, "gather_rows");
    const auto rows = x.dim(0), cols = x.dim(1);
    if (indices.empty()) throw dimension_error("gather_rows: empty index list");
    std::vector<double> out(indices.size() * cols);
    const auto xv = x.values();
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (indices[k] >= rows) {
            throw dimension_error("gather_rows: index " + std::to_string(indices[k]) + " out of range [0, " +
                                  std::to_string(rows) + ")");
        }
        std::copy_n(xv.data() + indices[k] * cols, cols, out.data() + k * cols);
    }
    Tensor y({indices.size(), cols}, std::move(out));
    if (should_record({&x})) {
        Tape::current()->record(y, {x}, [x, indices, cols](const std::vector<double>& gy) {
            auto* gx = grad_of(x);
            if (!gx) return;
            for (std::size_t k = 0; k < indices.size(); ++k) {
                double* dst = gx->data() + indices[k] * cols;
                const double* src = gy.data() + k * cols;
                for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
            }
        });
    }
    return y;
}

Tensor scatter_rows(const Tensor& x, const std::vector<std::size_t>& indices, std::size_t rows) {
    require_rank(x, 2, "scatter_rows");
    const auto cols = x.dim(1);
    if (indices.size() != x.dim(0)) throw dimension_error("scatter_rows: one index per input row required");
    std::vector<char> seen(rows, 0);
    std::vector<double> out(rows * cols, 0.0);
    const auto xv = x.values();
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const auto target = indices[k];
        if (target >= rows) throw dimension_error("scatter_rows: index out of range");
        if (seen[target]) throw dimension_error("scatter_rows: duplicate target row " + std::to_string(target));
        seen[target] = 1;
        std::copy_n(xv.data() + k * cols, cols, out.data() + target * cols);
    }
    Tensor y({rows, cols}, std::move(out));
    if (should_record({&x})) {
        Tape::current()->record(y, {x}, [x, indices, cols](const std::vector<double>& gy) {
            auto* gx = grad_of(x);
            if (!gx) return;
            for (std::size_t k = 0; k < indices.size(); ++k) {
                const double* src = gy.data() + indices[k] * cols;
                double* dst = gx->data() + k * cols;
                for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
            }
        });
    }
    return y;
}

Tensor strided_gather(const Tensor& x, const std::vector<std::size_t>& indices) { return gather_rows(x, indices); }

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw dimension_error("concat_cols: nothing to concatenate");
    const auto rows = parts.front().dim(0);
    std::size_t total = 0;
    for (const auto& p : parts) {
        require_rank(p, 2, "concat_cols");
        if (p.dim(0) != rows) throw dimension_error("concat_cols: row counts differ");
        total += p.dim(1);
    }
    std::vector<double> out(rows * total);
    std::size_t offset = 0;
    for (const auto& p : parts) {
        const auto w = p.dim(1);
        const auto pv = p.values();
        for (std::size_t r = 0; r < rows; ++r) std::copy_n(pv.data() + r * w, w, out.data() + r * total + offset);
        offset += w;
    }
    Tensor y({rows, total}, std::move(out));
    if (should_record(parts)) {
        Tape::current()->record(y, parts, [parts, rows, total](const std::vector<double>& gy) {
            std::size_t offset = 0;
            for (const auto& p : parts) {
                const auto w = p.dim(1);
                if (auto* g = grad_of(p)) {
                    for (std::size_t r = 0; r < rows; ++r) {
                        for (std::size_t c = 0; c < w; ++c) (*g)[r * w + c] += gy[r * total + offset + c];
                    }
                }
                offset += w;
            }
        });
    }
    return y;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw dimension_error("concat_rows: nothing to concatenate");
    const auto cols = parts.front().dim(1);
    std::size_t rows = 0;
    for (const auto& p : parts) {
        require_rank(p, 2, "concat_rows");
        if (p.dim(1) != cols) throw dimension_error("concat_rows: column counts differ");
        rows += p.dim(0);
    }
    std::vector<double> out;
    out.reserve(rows * cols);
    for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
    Tensor y({rows, cols}, std::move(out));
    if (should_record(parts)) {
        Tape::current()->record(y, parts, [parts](const std::vector<double>& gy) {
            std::size_t offset = 0;
            for (const auto& p : parts) {
                if (auto* g = grad_of(p)) {
                    for (std::size_t i = 0; i < p.size(); ++i) (*g)[i] += gy[offset + i];
                }
                offset += p.size();
            }
        });
    }
    return y;
}

Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t width) {
    require_rank(x, 2, "slice_cols");
    const auto rows = x.dim(0), cols = x.dim(1);
    if (width == 0 || start + width > cols) throw dimension_error("slice_cols: range out of bounds");
    std::vector<double> out(rows * width);
    const auto xv = x.values();
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(xv.data() + r * cols + start, width, out.data() + r * width);
    Tensor y({rows, width}, std::move(out));
    if (should_record({&x})) {
        Tape::current()->record(y, {x}, [x, rows, cols, start, width](const std::vector<double>& gy) {
            auto* gx = grad_of(x);
            if (!gx) return;
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < width; ++c) (*gx)[r * cols + start + c] += gy[r * width + c];
            }
        });
    }
    return y;
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (numel(shape) != x.size()) {
        throw dimension_error("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape) + " changes size");
    }
    Tensor y(std::move(shape), std::vector<double>(x.values().begin(), x.values().end()));
    if (should_record({&x})) {
        Tape::current()->record(y, {x}, [x](const std::vector<double>& gy) {
            auto* gx = grad_of(x);
            if (!gx) return;
            for (std::size_t i = 0; i < gy.size(); ++i) (*gx)[i] += gy[i];
        });
    }
    return y;
}

Tensor unfold_rows(const Tensor& x, std::size_t groups, std::size_t kernel, std::size_t stride, std::size_t pad) {
    require_rank(x, 2, "unfold_rows");
    if (groups == 0 || x.dim(0) % groups != 0) throw dimension_error("unfold_rows: rows not divisible by groups");
    if (kernel == 0 || stride == 0) throw dimension_error("unfold_rows: kernel and stride must be positive");
    const auto len = x.dim(0) / groups;
    const auto cols = x.dim(1);
    if (len + 2 * pad < kernel) throw dimension_error("unfold_rows: sequence shorter than kernel");
    const auto out_len = (len + 2 * pad - kernel) / stride + 1;
    const auto out_cols = kernel * cols;
    std::vector<double> out(groups * out_len * out_cols, 0.0);
    const auto xv = x.values();
    // Source row for (group, output step, tap), or -1 for padding.
    auto source = [=](std::size_t g, std::size_t t, std::size_t j) -> std::ptrdiff_t {
        const auto pos = static_cast<std::ptrdiff_t>(t * stride + j) - static_cast<std::ptrdiff_t>(pad);
        if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(len)) return -1;
        return static_cast<std::ptrdiff_t>(g * len) + pos;
    };
    for (std::size_t g = 0; g < groups; ++g) {
        for (std::size_t t = 0; t < out_len; ++t) {
            for (std::size_t j = 0; j < kernel; ++j) {
                const auto src = source(g, t, j);
                if (src < 0) continue;
                std::copy_n(xv.data() + src * cols, cols, out.data() + ((g * out_len + t) * kernel + j) * cols);
            }
        }
    }
    Tensor y({groups * out_len, out_cols}, std::move(out));
    if (should_record({&x})) {
        Tape::current()->record(y, {x}, [x, source, groups, out_len, kernel, cols](const std::vector<double>& gy) {
            auto* gx = grad_of(x);
            if (!gx) return;
            for (std::size_t g = 0; g < groups; ++g) {
                for (std::size_t t = 0; t < out_len; ++t) {
                    for (std::size_t j = 0; j < kernel; ++j) {
                        const auto src = source(g, t, j);
                        if (src < 0) continue;
                        const double* from = gy.data() + ((g * out_len + t) * kernel + j) * cols;
                        double* to = gx->data() + src * cols;
                        for (std::size_t c = 0; c < cols; ++c) to[c] += from[c];
                    }
                }
            }
        });
    }
    return y;
}

Tensor sum(const Tensor& x) {
    double total = 0.0;
    for (double v : x.values()) total += v;
    Tensor y({1}, std::vector<double>{total});
    if (should_record({&x})) {
        Tape::current()->record(y, {x}, [x](const std::vector<double>& gy) {
            auto* gx = grad_of(x);
            if (!gx) return;
            for (auto& g : *gx) g += gy[0];
        });
    }
    return y;
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

Tensor row_norm(const Tensor& x) {
    require_rank(x, 2, "row_norm");
    const auto rows = x.dim(0), cols = x.dim(1);
    std::vector<double> out(rows);
    const auto xv = x.values();
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += xv[r * cols + c] * xv[r * cols + c];
        out[r] = std::sqrt(s);
    }
    count_aux(2 * x.size());
    Tensor y({rows}, std::move(out));
    if (should_record({&x})) {
        Tape::current()->record(y, {x}, [x, y, rows, cols](const std::vector<double>& gy) {
            auto* gx = grad_of(x);
            if (!gx) return;
            const auto xv = x.values();
            const auto yv = y.values();
            for (std::size_t r = 0; r < rows; ++r) {
                // Subgradient 0 at the origin.
                if (yv[r] == 0.0) continue;
                const double f = gy[r] / yv[r];
                for (std::size_t c = 0; c < cols; ++c) (*gx)[r * cols + c] += f * xv[r * cols + c];
            }
        });
    }
    return y;
}

}  // namespace gsf
