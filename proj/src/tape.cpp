#include "demn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "demn/error.hpp"
#include "demn/kernels.hpp"

namespace demn::ad {

namespace {

const kernels::KernelTable& K() { return kernels::active(); }

void require(bool ok, const char* op, const std::string& detail) {
    if (!ok) throw Error(ErrorKind::dimension_mismatch, std::string(op) + ": " + detail);
}

std::string dims(const Tensor& a, const Tensor& b) { return a.shape_string() + " vs " + b.shape_string(); }

void accumulate(Tensor& dst, const Tensor& src) { K().axpy(dst.size(), 1.0, src.data(), dst.data()); }

}  // namespace

Var Tape::constant(Tensor value) { return record("constant", std::move(value), {}, nullptr); }

Var Tape::leaf(Tensor value) {
    if (!value.all_finite()) throw Error(ErrorKind::non_finite, "leaf");
    Node n;
    n.value = std::move(value);
    n.needs_grad = recording_;
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
    for (const auto& [ptr, id] : param_nodes_)
        if (ptr == &p) return Var(this, id);
    if (!p.value.all_finite()) throw Error(ErrorKind::non_finite, "parameter " + p.name);
    Node n;
    n.param = &p;
    n.needs_grad = recording_;
    nodes_.push_back(std::move(n));
    param_nodes_.emplace_back(&p, nodes_.size() - 1);
    return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.param ? n.param->value : n.value;
}

Tensor Tape::grad(std::size_t id) const {
    const Node& n = nodes_[id];
    if (n.param) return n.param->grad;
    if (n.has_grad) return n.grad;
    return Tensor::zeros_like(value(id));
}

Tensor& Tape::grad_ref(std::size_t id) {
    Node& n = nodes_[id];
    if (n.param) {
        if (!n.param->grad.same_shape(n.param->value)) n.param->grad = Tensor::zeros_like(n.param->value);
        n.has_grad = true;
        return n.param->grad;
    }
    if (!n.has_grad) {
        n.grad = Tensor::zeros_like(n.value);
        n.has_grad = true;
    }
    return n.grad;
}

void Tape::backward(Var loss, double seed) {
    if (!recording_) throw Error(ErrorKind::invalid_argument, "backward on a tape built without recording");
    if (loss.value().size() != 1)
        throw Error(ErrorKind::not_scalar, "loss has shape " + loss.value().shape_string());
    grad_ref(loss.id())[0] += seed;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.has_grad && n.backward) n.backward(*this, i);
    }
}

Var Tape::record(const char* op, Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
    return record(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
}

Var Tape::record(const char* op, Tensor value, std::span<const Var> inputs, BackwardFn fn) {
    if (!value.all_finite()) throw Error(ErrorKind::non_finite, std::string(op) + " produced NaN/Inf");
    Node n;
    n.value = std::move(value);
    if (recording_ && fn) {
        n.needs_grad = std::any_of(inputs.begin(), inputs.end(), [this](const Var& v) { return needs_grad(v.id()); });
        if (n.needs_grad) n.backward = std::move(fn);
    }
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
}

Var matmul(Var a, Var b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
    require(B.rows() == k, "matmul", dims(A, B));
    Tensor out(m, n);
    K().gemm_nn(m, n, k, A.data(), B.data(), out.data());
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape()->record("matmul", std::move(out), {a, b}, [ia, ib, m, n, k](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_ref(self);
        if (t.needs_grad(ia)) K().gemm_nt(m, k, n, g.data(), t.value(ib).data(), t.grad_ref(ia).data());
        if (t.needs_grad(ib)) K().gemm_tn(k, n, m, t.value(ia).data(), g.data(), t.grad_ref(ib).data());
    });
}

Var matmul_nt(Var a, Var b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    const std::size_t m = A.rows(), k = A.cols(), n = B.rows();
    require(B.cols() == k, "matmul_nt", dims(A, B));
    Tensor out(m, n);
    K().gemm_nt(m, n, k, A.data(), B.data(), out.data());
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape()->record("matmul_nt", std::move(out), {a, b}, [ia, ib, m, n, k](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_ref(self);
        if (t.needs_grad(ia)) K().gemm_nn(m, k, n, g.data(), t.value(ib).data(), t.grad_ref(ia).data());
        if (t.needs_grad(ib)) K().gemm_tn(n, k, m, g.data(), t.value(ia).data(), t.grad_ref(ib).data());
    });
}

Var add(Var a, Var b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    require(A.same_shape(B), "add", dims(A, B));
    Tensor out = Tensor::zeros_like(A);
    K().add(A.size(), A.data(), B.data(), out.data());
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape()->record("add", std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_ref(self);
        if (t.needs_grad(ia)) accumulate(t.grad_ref(ia), g);
        if (t.needs_grad(ib)) accumulate(t.grad_ref(ib), g);
    });
}

Var sub(Var a, Var b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    require(A.same_shape(B), "sub", dims(A, B));
    Tensor out = Tensor::zeros_like(A);
    K().sub(A.size(), A.data(), B.data(), out.data());
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape()->record("sub", std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_ref(self);
        if (t.needs_grad(ia)) accumulate(t.grad_ref(ia), g);
        if (t.needs_grad(ib)) {
            Tensor& gb = t.grad_ref(ib);
            K().axpy(gb.size(), -1.0, g.data(), gb.data());
        }
    });
}

Var mul(Var a, Var b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    require(A.same_shape(B), "mul", dims(A, B));
    Tensor out = Tensor::zeros_like(A);
    K().mul(A.size(), A.data(), B.data(), out.data());
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape()->record("mul", std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_ref(self);
        if (t.needs_grad(ia)) K().mul_acc(g.size(), g.data(), t.value(ib).data(), t.grad_ref(ia).data());
        if (t.needs_grad(ib)) K().mul_acc(g.size(), g.data(), t.value(ia).data(), t.grad_ref(ib).data());
    });
}

Var add_row(Var a, Var row) {
    const Tensor& A = a.value();
    const Tensor& R = row.value();
    require(R.rows() == 1 && R.cols() == A.cols(), "add_row", dims(A, R));
    const std::size_t m = A.rows(), n = A.cols();
    Tensor out = Tensor::zeros_like(A);
    for (std::size_t i = 0; i < m; ++i) K().add(n, A.data() + i * n, R.data(), out.data() + i * n);
    const std::size_t ia = a.id(), ir = row.id();
    return a.tape()->record("add_row", std::move(out), {a, row}, [ia, ir, m, n](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_ref(self);
        if (t.needs_grad(ia)) accumulate(t.grad_ref(ia), g);
        if (t.needs_grad(ir)) {
            Tensor& gr = t.grad_ref(ir);
            for (std::size_t i = 0; i < m; ++i) K().axpy(n, 1.0, g.data() + i * n, gr.data());
        }
    });
}

Var scale(Var a, double factor) {
    const Tensor& A = a.value();
    Tensor out = Tensor::zeros_like(A);
    K().axpy(A.size(), factor, A.data(), out.data());
    const std::size_t ia = a.id();
    return a.tape()->record("scale", std::move(out), {a}, [ia, factor](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_ref(self);
        Tensor& ga = t.grad_ref(ia);
        K().axpy(ga.size(), factor, g.data(), ga.data());
    });
}

Var one_minus(Var a) {
    Tensor out = a.value();
    for (double& x : out.values()) x = 1.0 - x;
    const std::size_t ia = a.id();
    return a.tape()->record("one_minus", std::move(out), {a}, [ia](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_ref(self);
        Tensor& ga = t.grad_ref(ia);
        K().axpy(ga.size(), -1.0, g.data(), ga.data());
    });
}

Var mask_mul(Var a, const Tensor& mask) {
    const Tensor& A = a.value();
    require(A.same_shape(mask), "mask_mul", dims(A, mask));
    Tensor out = Tensor::zeros_like(A);
    K().mul(A.size(), A.data(), mask.data(), out.data());
    const std::size_t ia = a.id();
    return a.tape()->record("mask_mul", std::move(out), {a}, [ia, mask](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_ref(self);
        K().mul_acc(g.size(), g.data(), mask.data(), t.grad_ref(ia).data());
    });
}

Var concat_cols(std::initializer_list<Var> parts) {
    return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

Var concat_cols(std::span<const Var> parts) {
    require(!parts.empty(), "concat_cols", "no inputs");
    const std::size_t m = parts[0].rows();
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    for (const Var& p : parts) {
        require(p.rows() == m, "concat_cols", dims(parts[0].value(), p.value()));
        widths.push_back(p.cols());
        total += p.cols();
    }
    Tensor out(m, total);
    std::size_t off = 0;
    for (const Var& p : parts) {
        const Tensor& v = p.value();
        for (std::size_t i = 0; i < m; ++i) std::copy_n(v.data() + i * v.cols(), v.cols(), out.data() + i * total + off);
        off += v.cols();
    }
    std::vector<std::size_t> ids;
    for (const Var& p : parts) ids.push_back(p.id());
    return parts[0].tape()->record(
        "concat_cols", std::move(out), parts, [ids, widths, m, total](Tape& t, std::size_t self) {
            const Tensor& g = t.grad_ref(self);
            std::size_t off = 0;
            for (std::size_t p = 0; p < ids.size(); ++p) {
                if (t.needs_grad(ids[p])) {
                    Tensor& gp = t.grad_ref(ids[p]);
                    for (std::size_t i = 0; i < m; ++i)
                        K().axpy(widths[p], 1.0, g.data() + i * total + off, gp.data() + i * widths[p]);
                }
                off += widths[p];
            }
        });
}

Var concat_rows(std::span<const Var> parts) {
    require(!parts.empty(), "concat_rows", "no inputs");
    const std::size_t n = parts[0].cols();
    std::size_t total = 0;
    for (const Var& p : parts) {
        require(p.cols() == n, "concat_rows", dims(parts[0].value(), p.value()));
        total += p.rows();
    }
    std::vector<double> data;
    data.reserve(total * n);
    std::vector<std::size_t> ids, sizes;
    for (const Var& p : parts) {
        const Tensor& v = p.value();
        data.insert(data.end(), v.data(), v.data() + v.size());
        ids.push_back(p.id());
        sizes.push_back(v.size());
    }
    return parts[0].tape()->record("concat_rows", Tensor({total, n}, std::move(data)), parts,
                                   [ids, sizes](Tape& t, std::size_t self) {
                                       const Tensor& g = t.grad_ref(self);
                                       std::size_t off = 0;
                                       for (std::size_t p = 0; p < ids.size(); ++p) {
                                           if (t.needs_grad(ids[p]))
                                               K().axpy(sizes[p], 1.0, g.data() + off, t.grad_ref(ids[p]).data());
                                           off += sizes[p];
                                       }
                                   });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
    const Tensor& A = a.value();
    const std::size_t m = A.rows(), n = A.cols();
    require(begin + count <= n && count > 0, "slice_cols", "range outside " + A.shape_string());
    Tensor out(m, count);
    for (std::size_t i = 0; i < m; ++i) std::copy_n(A.data() + i * n + begin, count, out.data() + i * count);
    const std::size_t ia = a.id();
    return a.tape()->record("slice_cols", std::move(out), {a}, [ia, m, n, begin, count](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_ref(self);
        Tensor& ga = t.grad_ref(ia);
        for (std::size_t i = 0; i < m; ++i) K().axpy(count, 1.0, g.data() + i * count, ga.data() + i * n + begin);
    });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
    const Tensor& A = a.value();
    const std::size_t n = A.cols();
    require(begin + count <= A.rows() && count > 0, "slice_rows", "range outside " + A.shape_string());
    Tensor out({count, n}, std::vector<double>(A.data() + begin * n, A.data() + (begin + count) * n));
    const std::size_t ia = a.id();
    return a.tape()->record("slice_rows", std::move(out), {a}, [ia, n, begin, count](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_ref(self);
        K().axpy(count * n, 1.0, g.data(), t.grad_ref(ia).data() + begin * n);
    });
}

namespace {

template <typename F, typename D>
Var unary(const char* op, Var a, F f, D derivative_from_output_and_input) {
    const Tensor& A = a.value();
    Tensor out = Tensor::zeros_like(A);
    for (std::size_t i = 0; i < A.size(); ++i) out[i] = f(A[i]);
    const std::size_t ia = a.id();
    return a.tape()->record(op, std::move(out), {a}, [ia, derivative_from_output_and_input](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_ref(self);
        const Tensor& y = t.value(self);
        const Tensor& x = t.value(ia);
        Tensor& ga = t.grad_ref(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * derivative_from_output_and_input(y[i], x[i]);
    });
}

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Var relu(Var a) {
    return unary(
        "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double, double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh(Var a) {
    return unary(
        "tanh", a, [](double x) { return std::tanh(x); }, [](double y, double) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
    return unary("sigmoid", a, stable_sigmoid, [](double y, double) { return y * (1.0 - y); });
}

Var softmax_rows(Var a) {
    const Tensor& A = a.value();
    const std::size_t m = A.rows(), n = A.cols();
    require(n >= 1, "softmax_rows", "zero-width input");
    Tensor out = Tensor::zeros_like(A);
    for (std::size_t i = 0; i < m; ++i) {
        const double* x = A.data() + i * n;
        double* y = out.data() + i * n;
        const double mx = *std::max_element(x, x + n);
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) z += (y[j] = std::exp(x[j] - mx));
        for (std::size_t j = 0; j < n; ++j) y[j] /= z;
    }
    const std::size_t ia = a.id();
    return a.tape()->record("softmax_rows", std::move(out), {a}, [ia, m, n](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_ref(self);
        const Tensor& y = t.value(self);
        Tensor& ga = t.grad_ref(ia);
        for (std::size_t i = 0; i < m; ++i) {
            const double* gi = g.data() + i * n;
            const double* yi = y.data() + i * n;
            const double s = K().dot(n, gi, yi);
            for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += yi[j] * (gi[j] - s);
        }
    });
}

Var log_softmax_rows(Var a) {
    const Tensor& A = a.value();
    const std::size_t m = A.rows(), n = A.cols();
    require(n >= 1, "log_softmax_rows", "zero-width input");
    Tensor out = Tensor::zeros_like(A);
    for (std::size_t i = 0; i < m; ++i) {
        const double* x = A.data() + i * n;
        const double mx = *std::max_element(x, x + n);
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) z += std::exp(x[j] - mx);
        const double lse = mx + std::log(z);
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x[j] - lse;
    }
    const std::size_t ia = a.id();
    return a.tape()->record("log_softmax_rows", std::move(out), {a}, [ia, m, n](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_ref(self);
        const Tensor& y = t.value(self);
        Tensor& ga = t.grad_ref(ia);
        for (std::size_t i = 0; i < m; ++i) {
            double gs = 0.0;
            for (std::size_t j = 0; j < n; ++j) gs += g[i * n + j];
            for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[i * n + j] - std::exp(y[i * n + j]) * gs;
        }
    });
}

Var max_pool_rows(Var a) {
    const Tensor& A = a.value();
    const std::size_t m = A.rows(), n = A.cols();
    require(m >= 1, "max_pool_rows", "no rows");
    Tensor out(1, n);
    std::vector<std::size_t> argmax(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
        double best = A(0, j);
        for (std::size_t i = 1; i < m; ++i)
            if (A(i, j) > best) {
                best = A(i, j);
                argmax[j] = i;
            }
        out[j] = best;
    }
    const std::size_t ia = a.id();
    return a.tape()->record("max_pool_rows", std::move(out), {a}, [ia, n, argmax](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_ref(self);
        Tensor& ga = t.grad_ref(ia);
        for (std::size_t j = 0; j < n; ++j) ga[argmax[j] * n + j] += g[j];
    });
}

Var mean_pool_rows(Var a) {
    const Tensor& A = a.value();
    const std::size_t m = A.rows(), n = A.cols();
    require(m >= 1, "mean_pool_rows", "no rows");
    Tensor out(1, n);
    for (std::size_t i = 0; i < m; ++i) K().axpy(n, 1.0, A.data() + i * n, out.data());
    const double inv = 1.0 / static_cast<double>(m);
    for (double& x : out.values()) x *= inv;
    const std::size_t ia = a.id();
    return a.tape()->record("mean_pool_rows", std::move(out), {a}, [ia, m, n, inv](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_ref(self);
        Tensor& ga = t.grad_ref(ia);
        for (std::size_t i = 0; i < m; ++i) K().axpy(n, inv, g.data(), ga.data() + i * n);
    });
}

Var sum(Var a) {
    const Tensor& A = a.value();
    double s = 0.0;
    for (double x : A.values()) s += x;
    const std::size_t ia = a.id();
    return a.tape()->record("sum", Tensor::scalar(s), {a}, [ia](Tape& t, std::size_t self) {
        const double g = t.grad_ref(self)[0];
        for (double& x : t.grad_ref(ia).values()) x += g;
    });
}

Var pick(Var a, std::size_t r, std::size_t c) {
    const Tensor& A = a.value();
    require(r < A.rows() && c < A.cols(), "pick", "index outside " + A.shape_string());
    const std::size_t ia = a.id(), n = A.cols();
    return a.tape()->record("pick", Tensor::scalar(A(r, c)), {a}, [ia, r, c, n](Tape& t, std::size_t self) {
        t.grad_ref(ia)[r * n + c] += t.grad_ref(self)[0];
    });
}

Var gather_rows(Tape& tape, Parameter& table, std::span<const std::size_t> indices) {
    const std::size_t n = table.value.cols();
    const std::size_t rows = table.value.rows();
    Tensor out(indices.size(), n);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= rows)
            throw Error(ErrorKind::dimension_mismatch,
                        "row " + std::to_string(indices[i]) + " outside table " + table.name);
        std::copy_n(table.value.data() + indices[i] * n, n, out.data() + i * n);
    }
    Var src = tape.param(table);
    const std::size_t is = src.id();
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    return tape.record("gather_rows", std::move(out), {src}, [is, idx, n](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_ref(self);
        const Parameter* p = t.parameter(is);
        Tensor& gt = t.grad_ref(is);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (p && p->row_frozen(idx[i])) continue;
            K().axpy(n, 1.0, g.data() + i * n, gt.data() + idx[i] * n);
        }
    });
}

}  // namespace demn::ad
