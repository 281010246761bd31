#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace nssnn::autodiff {

using Matrix = Eigen::MatrixXd;

class Tape;

/// Handle to a matrix-valued node recorded on a Tape.
class Var {
public:
    Var() = default;

    const Matrix& value() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    Tape* tape() const noexcept { return tape_; }
    std::size_t id() const noexcept { return id_; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

enum class Op : std::uint8_t {
    Leaf,
    MatMul,          // A B
    MatMulNT,        // A B^T
    MatMulTN,        // A^T B
    AddRow,          // A + 1 b, b a 1 x c row
    BroadcastRows,   // 1 x c row repeated to r x c
    ColSum,          // r x c -> 1 x c
    Sigmoid,
    Mul,             // elementwise
    Add,
    Sub,
    Affine,          // a * A + c
    MulConst,        // A (.) M, M same shape or a broadcast row, no gradient to M
    ScalarMulConst,  // s * M for a 1 x 1 s
    Sum,             // -> 1 x 1
    AbsSum,          // sum |A| -> 1 x 1
    SliceCols,
    PadCols,
    ConcatCols,
};

/// Reverse-mode tape over dense matrices.
///
/// Backward rules are themselves expressed with tape operations, so a gradient
/// returned by grad() is an ordinary node that can be differentiated again
/// (reverse-over-reverse). This is what lets a loss on an integrator rollout
/// whose updates call dH/d(input) be differentiated with respect to the
/// network parameters.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Matrix value, bool requires_grad = true);
    Var constant(Matrix value) { return leaf(std::move(value), false); }

    Var matmul(Var a, Var b);
    Var matmul_nt(Var a, Var b);
    Var matmul_tn(Var a, Var b);
    Var add_row(Var a, Var row);
    Var broadcast_rows(Var row, Eigen::Index rows);
    Var col_sum(Var a);
    Var sigmoid(Var a);
    Var mul(Var a, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var affine(Var a, double scale, double shift = 0.0);
    Var mul_const(Var a, std::shared_ptr<const Matrix> m);
    Var scalar_mul_const(Var s, std::shared_ptr<const Matrix> m);
    Var sum(Var a);
    Var abs_sum(Var a);
    Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
    Var pad_cols(Var a, Eigen::Index start, Eigen::Index total);
    Var concat_cols(Var a, Var b);

    /// Gradients of a 1 x 1 output with respect to each node in wrt. Nodes in
    /// wrt need not be leaves; a node the output does not depend on gets a zero
    /// constant of matching shape.
    std::vector<Var> grad(Var output, std::span<const Var> wrt);

    /// Recomputes every non-leaf node from the stored leaves and reports whether
    /// all values came out bit-identical.
    bool replay_matches() const;

    std::size_t size() const noexcept { return nodes_.size(); }
    bool requires_grad(Var v) const { return nodes_[v.id_].requires_grad; }
    const Matrix& value(Var v) const { return nodes_[v.id_].value; }

private:
    struct Node {
        Op op = Op::Leaf;
        std::array<std::size_t, 2> in{};
        int arity = 0;
        double a = 0.0;
        double c = 0.0;
        Eigen::Index i0 = 0;
        Eigen::Index i1 = 0;
        std::shared_ptr<const Matrix> constant;
        Matrix value;
        bool requires_grad = false;
    };

    Var push(Node node);
    Node make(Op op, std::initializer_list<Var> inputs) const;
    Matrix evaluate(const Node& n) const;
    void backward(std::size_t id, Var g, std::array<bool, 2> need, std::array<Var, 2>& out);
    void check(Var v) const;

    std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const
{
    return tape_->value(*this);
}

}  // namespace nssnn::autodiff
