#include "cgarom/tape.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "cgarom/errors.hpp"

namespace cgarom {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<EMat>;
using CMap = Eigen::Map<const EMat>;

CMap emap(const Tensor& t) { return CMap(t.data(), Eigen::Index(t.rows()), Eigen::Index(t.cols())); }
Map emap(Tensor& t) { return Map(t.data(), Eigen::Index(t.rows()), Eigen::Index(t.cols())); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()));
}

} // namespace

double apply_act(Act f, double x) {
    switch (f) {
        case Act::identity: return x;
        case Act::tanh: return std::tanh(x);
        case Act::elu: return x > 0.0 ? x : std::expm1(x);
    }
    return x;
}

int Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return int(nodes_.size()) - 1;
}

int Tape::constant(Tensor v) {
    Node n;
    n.val = std::move(v);
    return push(std::move(n));
}

int Tape::constant_ref(const Tensor* v) {
    Node n;
    n.ext = v;
    return push(std::move(n));
}

int Tape::param(const Tensor* v) {
    Node n;
    n.ext = v;
    n.needs_grad = true;
    return push(std::move(n));
}

int Tape::matmul(int a, int b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.cols() != B.rows())
        throw DimensionError("matmul: inner dimensions " + std::to_string(A.cols()) + " vs " +
                             std::to_string(B.rows()));
    Node n;
    n.op = Op::matmul;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[std::size_t(a)].needs_grad || nodes_[std::size_t(b)].needs_grad;
    n.val = Tensor(A.rows(), B.cols());
    emap(n.val).noalias() = emap(A) * emap(B);
    return push(std::move(n));
}

int Tape::matmul_tn(int a, int b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.rows() != B.rows())
        throw DimensionError("matmul_tn: row counts " + std::to_string(A.rows()) + " vs " +
                             std::to_string(B.rows()));
    Node n;
    n.op = Op::matmul_tn;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[std::size_t(a)].needs_grad || nodes_[std::size_t(b)].needs_grad;
    n.val = Tensor(A.cols(), B.cols());
    emap(n.val).noalias() = emap(A).transpose() * emap(B);
    return push(std::move(n));
}

int Tape::add(int a, int b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    require_same_shape(A, B, "add");
    Node n;
    n.op = Op::add;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[std::size_t(a)].needs_grad || nodes_[std::size_t(b)].needs_grad;
    n.val = Tensor(A.rows(), A.cols());
    for (std::size_t i = 0; i < A.size(); ++i) n.val[i] = A[i] + B[i];
    return push(std::move(n));
}

int Tape::sub(int a, int b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    require_same_shape(A, B, "sub");
    Node n;
    n.op = Op::sub;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[std::size_t(a)].needs_grad || nodes_[std::size_t(b)].needs_grad;
    n.val = Tensor(A.rows(), A.cols());
    for (std::size_t i = 0; i < A.size(); ++i) n.val[i] = A[i] - B[i];
    return push(std::move(n));
}

int Tape::add_row(int x, int b) {
    const Tensor& X = value(x);
    const Tensor& B = value(b);
    if (B.rows() != 1 || B.cols() != X.cols())
        throw DimensionError("add_row: bias must be 1x" + std::to_string(X.cols()));
    Node n;
    n.op = Op::add_row;
    n.a = x;
    n.b = b;
    n.needs_grad = nodes_[std::size_t(x)].needs_grad || nodes_[std::size_t(b)].needs_grad;
    n.val = Tensor(X.rows(), X.cols());
    for (std::size_t i = 0; i < X.rows(); ++i)
        for (std::size_t j = 0; j < X.cols(); ++j) n.val(i, j) = X(i, j) + B(0, j);
    return push(std::move(n));
}

int Tape::activation(int x, Act f) {
    const Tensor& X = value(x);
    Node n;
    n.op = Op::act;
    n.a = x;
    n.f = f;
    n.needs_grad = nodes_[std::size_t(x)].needs_grad;
    n.val = Tensor(X.rows(), X.cols());
    for (std::size_t i = 0; i < X.size(); ++i) n.val[i] = apply_act(f, X[i]);
    return push(std::move(n));
}

int Tape::mul(int a, int b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    require_same_shape(A, B, "mul");
    Node n;
    n.op = Op::mul;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[std::size_t(a)].needs_grad || nodes_[std::size_t(b)].needs_grad;
    n.val = Tensor(A.rows(), A.cols());
    for (std::size_t i = 0; i < A.size(); ++i) n.val[i] = A[i] * B[i];
    return push(std::move(n));
}

int Tape::mul_elem(int x, const Tensor* k) {
    const Tensor& X = value(x);
    require_same_shape(X, *k, "mul_elem");
    Node n;
    n.op = Op::mul_elem;
    n.a = x;
    n.k = k;
    n.needs_grad = nodes_[std::size_t(x)].needs_grad;
    n.val = Tensor(X.rows(), X.cols());
    for (std::size_t i = 0; i < X.size(); ++i) n.val[i] = X[i] * (*k)[i];
    return push(std::move(n));
}

int Tape::scale_rows(int x, const Tensor* w) {
    const Tensor& X = value(x);
    if (w->rows() != X.rows() || w->cols() != 1)
        throw DimensionError("scale_rows: weights must be " + std::to_string(X.rows()) + "x1");
    Node n;
    n.op = Op::scale_rows;
    n.a = x;
    n.k = w;
    n.needs_grad = nodes_[std::size_t(x)].needs_grad;
    n.val = Tensor(X.rows(), X.cols());
    for (std::size_t i = 0; i < X.rows(); ++i) {
        double wi = (*w)(i, 0);
        for (std::size_t j = 0; j < X.cols(); ++j) n.val(i, j) = X(i, j) * wi;
    }
    return push(std::move(n));
}

int Tape::col_sum(int x) {
    const Tensor& X = value(x);
    Node n;
    n.op = Op::col_sum;
    n.a = x;
    n.needs_grad = nodes_[std::size_t(x)].needs_grad;
    n.val = Tensor(1, X.cols());
    for (std::size_t i = 0; i < X.rows(); ++i)
        for (std::size_t j = 0; j < X.cols(); ++j) n.val(0, j) += X(i, j);
    return push(std::move(n));
}

int Tape::block_col_sum(int x, std::size_t group) {
    const Tensor& X = value(x);
    if (group == 0 || X.cols() % group != 0)
        throw DimensionError("block_col_sum: columns " + std::to_string(X.cols()) +
                             " not divisible by group " + std::to_string(group));
    std::size_t out_cols = X.cols() / group;
    Node n;
    n.op = Op::block_col_sum;
    n.a = x;
    n.aux = group;
    n.needs_grad = nodes_[std::size_t(x)].needs_grad;
    n.val = Tensor(X.rows(), out_cols);
    for (std::size_t i = 0; i < X.rows(); ++i)
        for (std::size_t c = 0; c < out_cols; ++c) {
            double s = 0.0;
            for (std::size_t g = 0; g < group; ++g) s += X(i, c * group + g);
            n.val(i, c) = s;
        }
    return push(std::move(n));
}

int Tape::broadcast_row(int x, std::size_t m) {
    const Tensor& X = value(x);
    if (X.rows() != 1) throw DimensionError("broadcast_row: input must have one row");
    Node n;
    n.op = Op::broadcast_row;
    n.a = x;
    n.aux = m;
    n.needs_grad = nodes_[std::size_t(x)].needs_grad;
    n.val = Tensor(m, X.cols());
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < X.cols(); ++j) n.val(i, j) = X(0, j);
    return push(std::move(n));
}

int Tape::square(int x) {
    const Tensor& X = value(x);
    Node n;
    n.op = Op::square;
    n.a = x;
    n.needs_grad = nodes_[std::size_t(x)].needs_grad;
    n.val = Tensor(X.rows(), X.cols());
    for (std::size_t i = 0; i < X.size(); ++i) n.val[i] = X[i] * X[i];
    return push(std::move(n));
}

int Tape::sum_all(int x) {
    const Tensor& X = value(x);
    Node n;
    n.op = Op::sum_all;
    n.a = x;
    n.needs_grad = nodes_[std::size_t(x)].needs_grad;
    double s = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) s += X[i];
    n.val = Tensor::scalar(s);
    return push(std::move(n));
}

int Tape::scale(int x, double c) {
    const Tensor& X = value(x);
    Node n;
    n.op = Op::scale;
    n.a = x;
    n.c = c;
    n.needs_grad = nodes_[std::size_t(x)].needs_grad;
    n.val = Tensor(X.rows(), X.cols());
    for (std::size_t i = 0; i < X.size(); ++i) n.val[i] = c * X[i];
    return push(std::move(n));
}

Tensor& Tape::grad_buf(int id) {
    Node& n = nodes_[std::size_t(id)];
    if (!n.grad_alloc) {
        const Tensor& v = val_of(n);
        n.grad = Tensor(v.rows(), v.cols());
        n.grad_alloc = true;
    }
    return n.grad;
}

const Tensor& Tape::grad(int id) const {
    const Node& n = nodes_[std::size_t(id)];
    if (n.grad_alloc) return n.grad;
    return zero_;
}

void Tape::backward(int root) {
    Node& r = nodes_[std::size_t(root)];
    const Tensor& rv = val_of(r);
    if (rv.rows() != 1 || rv.cols() != 1)
        throw DimensionError("backward: root must be scalar, got " + std::to_string(rv.rows()) +
                             "x" + std::to_string(rv.cols()));
    grad_buf(root).fill(0.0);
    grad_buf(root)(0, 0) = 1.0;

    for (int id = root; id >= 0; --id) {
        Node& n = nodes_[std::size_t(id)];
        if (!n.needs_grad || !n.grad_alloc || n.op == Op::leaf) continue;
        const Tensor& g = n.grad;
        Node& na = nodes_[std::size_t(n.a)];
        bool wa = na.needs_grad;
        switch (n.op) {
            case Op::matmul: {
                Node& nb = nodes_[std::size_t(n.b)];
                if (wa) emap(grad_buf(n.a)).noalias() += emap(g) * emap(val_of(nb)).transpose();
                if (nb.needs_grad) emap(grad_buf(n.b)).noalias() += emap(val_of(na)).transpose() * emap(g);
                break;
            }
            case Op::matmul_tn: {
                Node& nb = nodes_[std::size_t(n.b)];
                if (wa) emap(grad_buf(n.a)).noalias() += emap(val_of(nb)) * emap(g).transpose();
                if (nb.needs_grad) emap(grad_buf(n.b)).noalias() += emap(val_of(na)) * emap(g);
                break;
            }
            case Op::add: {
                Node& nb = nodes_[std::size_t(n.b)];
                if (wa) {
                    Tensor& ga = grad_buf(n.a);
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                }
                if (nb.needs_grad) {
                    Tensor& gb = grad_buf(n.b);
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
                }
                break;
            }
            case Op::sub: {
                Node& nb = nodes_[std::size_t(n.b)];
                if (wa) {
                    Tensor& ga = grad_buf(n.a);
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                }
                if (nb.needs_grad) {
                    Tensor& gb = grad_buf(n.b);
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                }
                break;
            }
            case Op::add_row: {
                Node& nb = nodes_[std::size_t(n.b)];
                if (wa) {
                    Tensor& ga = grad_buf(n.a);
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                }
                if (nb.needs_grad) {
                    Tensor& gb = grad_buf(n.b);
                    for (std::size_t i = 0; i < g.rows(); ++i)
                        for (std::size_t j = 0; j < g.cols(); ++j) gb(0, j) += g(i, j);
                }
                break;
            }
            case Op::act: {
                if (!wa) break;
                Tensor& ga = grad_buf(n.a);
                const Tensor& y = n.val;
                switch (n.f) {
                    case Act::identity:
                        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                        break;
                    case Act::tanh:
                        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
                        break;
                    case Act::elu:
                        // d/dx elu = 1 for x > 0, exp(x) = y + 1 otherwise
                        for (std::size_t i = 0; i < g.size(); ++i)
                            ga[i] += g[i] * (y[i] > 0.0 ? 1.0 : y[i] + 1.0);
                        break;
                }
                break;
            }
            case Op::mul: {
                Node& nb = nodes_[std::size_t(n.b)];
                const Tensor& av = val_of(na);
                const Tensor& bv = val_of(nb);
                if (wa) {
                    Tensor& ga = grad_buf(n.a);
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
                }
                if (nb.needs_grad) {
                    Tensor& gb = grad_buf(n.b);
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
                }
                break;
            }
            case Op::mul_elem: {
                if (!wa) break;
                Tensor& ga = grad_buf(n.a);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (*n.k)[i];
                break;
            }
            case Op::scale_rows: {
                if (!wa) break;
                Tensor& ga = grad_buf(n.a);
                for (std::size_t i = 0; i < g.rows(); ++i) {
                    double wi = (*n.k)(i, 0);
                    for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) += g(i, j) * wi;
                }
                break;
            }
            case Op::col_sum: {
                if (!wa) break;
                Tensor& ga = grad_buf(n.a);
                for (std::size_t i = 0; i < ga.rows(); ++i)
                    for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += g(0, j);
                break;
            }
            case Op::block_col_sum: {
                if (!wa) break;
                Tensor& ga = grad_buf(n.a);
                std::size_t group = n.aux;
                for (std::size_t i = 0; i < ga.rows(); ++i)
                    for (std::size_t c = 0; c < g.cols(); ++c)
                        for (std::size_t k = 0; k < group; ++k) ga(i, c * group + k) += g(i, c);
                break;
            }
            case Op::broadcast_row: {
                if (!wa) break;
                Tensor& ga = grad_buf(n.a);
                for (std::size_t i = 0; i < g.rows(); ++i)
                    for (std::size_t j = 0; j < g.cols(); ++j) ga(0, j) += g(i, j);
                break;
            }
            case Op::square: {
                if (!wa) break;
                Tensor& ga = grad_buf(n.a);
                const Tensor& xv = val_of(na);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += 2.0 * xv[i] * g[i];
                break;
            }
            case Op::sum_all: {
                if (!wa) break;
                Tensor& ga = grad_buf(n.a);
                double gs = g(0, 0);
                for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gs;
                break;
            }
            case Op::scale: {
                if (!wa) break;
                Tensor& ga = grad_buf(n.a);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.c * g[i];
                break;
            }
            case Op::leaf: break;
        }
    }
}

} // namespace cgarom
