#pragma once

#include <cstddef>
#include <vector>

#include "cgarom/tensor.hpp"

namespace cgarom {

enum class Act { identity, tanh, elu };

double apply_act(Act f, double x);

// Reverse-mode autodiff over a small fixed set of matrix operations. A Tape is
// built per loss evaluation, holds values (and after backward() gradients) for
// every node, and is discarded afterwards. Leaves created with param() keep a
// pointer into external storage; that storage must stay alive and unchanged
// until the tape is dropped.
class Tape {
public:
    // Leaf that owns a copy of v; never receives a gradient.
    int constant(Tensor v);
    // Leaf referencing external storage; never receives a gradient.
    int constant_ref(const Tensor* v);
    // Leaf referencing a parameter tensor; gradient is tracked.
    int param(const Tensor* v);

    int matmul(int a, int b);                  // A(mxk) * B(kxn)
    int matmul_tn(int a, int b);               // A^T(kxm) * B(kxn) -> mxn
    int add(int a, int b);                     // same shape
    int sub(int a, int b);                     // same shape
    int add_row(int x, int b);                 // X(mxn) + row b(1xn) broadcast
    int activation(int x, Act f);              // elementwise
    int mul(int a, int b);                     // A .* B, same shape
    int mul_elem(int x, const Tensor* k);      // X .* K, K constant, same shape
    int scale_rows(int x, const Tensor* w);    // row i scaled by w(i,0), w Nx1 constant
    int col_sum(int x);                        // MxN -> 1xN
    int block_col_sum(int x, std::size_t group); // Mx(C*group) -> MxC, consecutive groups
    int broadcast_row(int x, std::size_t m);   // 1xN -> MxN
    int square(int x);                         // elementwise x^2
    int sum_all(int x);                        // -> 1x1
    int scale(int x, double c);                // c * X

    const Tensor& value(int id) const { return nodes_[std::size_t(id)].ext ? *nodes_[std::size_t(id)].ext : nodes_[std::size_t(id)].val; }

    // Gradient of the last backward() root w.r.t. node id; zero tensor if the
    // node was not reached.
    const Tensor& grad(int id) const;

    // Root must be 1x1; seeds d(root)/d(root) = 1 and sweeps the tape in
    // reverse. Throws DimensionError on a non-scalar root.
    void backward(int root);

    std::size_t node_count() const { return nodes_.size(); }

private:
    enum class Op {
        leaf, matmul, matmul_tn, add, sub, add_row, act, mul, mul_elem,
        scale_rows, col_sum, block_col_sum, broadcast_row, square, sum_all, scale
    };

    struct Node {
        Op op = Op::leaf;
        int a = -1, b = -1;
        Act f = Act::identity;
        double c = 0.0;
        std::size_t aux = 0;
        const Tensor* ext = nullptr;  // external value (leaves, constants)
        const Tensor* k = nullptr;    // constant operand (mul_elem, scale_rows)
        Tensor val;
        Tensor grad;
        bool needs_grad = false;
        bool grad_alloc = false;
    };

    int push(Node n);
    const Tensor& val_of(const Node& n) const { return n.ext ? *n.ext : n.val; }
    Tensor& grad_buf(int id);

    std::vector<Node> nodes_;
    Tensor zero_;
};

} // namespace cgarom
