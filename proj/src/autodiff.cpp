#include "nssnn/autodiff.hpp"

#include <cstring>
#include <stdexcept>

#include "nssnn/core.hpp"

namespace nssnn::autodiff {

namespace {

void require(bool ok, const char* what)
{
    if (!ok)
        throw Error(ErrorKind::DimensionMismatch, what);
}

Matrix sigmoid_of(const Matrix& z)
{
    // exp overflows to inf for very negative z, which still yields exactly 0.
    return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Matrix times_const(const Matrix& a, const Matrix& m)
{
    if (m.rows() == a.rows())
        return a.cwiseProduct(m);
    return a.array().rowwise() * m.row(0).array();
}

}  // namespace

void Tape::check(Var v) const
{
    if (v.tape_ != this || v.id_ >= nodes_.size())
        throw std::logic_error("variable belongs to a different tape");
}

Var Tape::push(Node node)
{
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Tape::Node Tape::make(Op op, std::initializer_list<Var> inputs) const
{
    Node n;
    n.op = op;
    for (Var v : inputs) {
        check(v);
        n.in[n.arity++] = v.id_;
        n.requires_grad = n.requires_grad || nodes_[v.id_].requires_grad;
    }
    return n;
}

Var Tape::leaf(Matrix value, bool requires_grad)
{
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    return push(std::move(n));
}

Matrix Tape::evaluate(const Node& n) const
{
    const Matrix* a = n.arity > 0 ? &nodes_[n.in[0]].value : nullptr;
    const Matrix* b = n.arity > 1 ? &nodes_[n.in[1]].value : nullptr;
    switch (n.op) {
    case Op::Leaf: return n.value;
    case Op::MatMul: return (*a) * (*b);
    case Op::MatMulNT: return (*a) * b->transpose();
    case Op::MatMulTN: return a->transpose() * (*b);
    case Op::AddRow: return a->rowwise() + b->row(0);
    case Op::BroadcastRows: return a->row(0).replicate(n.i0, 1);
    case Op::ColSum: return a->colwise().sum();
    case Op::Sigmoid: return sigmoid_of(*a);
    case Op::Mul: return a->cwiseProduct(*b);
    case Op::Add: return (*a) + (*b);
    case Op::Sub: return (*a) - (*b);
    case Op::Affine: return (n.a * a->array() + n.c).matrix();
    case Op::MulConst: return times_const(*a, *n.constant);
    case Op::ScalarMulConst: return (*a)(0, 0) * (*n.constant);
    case Op::Sum: return Matrix::Constant(1, 1, a->sum());
    case Op::AbsSum: return Matrix::Constant(1, 1, a->cwiseAbs().sum());
    case Op::SliceCols: return a->middleCols(n.i0, n.i1);
    case Op::PadCols: {
        Matrix out = Matrix::Zero(a->rows(), n.i1);
        out.middleCols(n.i0, a->cols()) = *a;
        return out;
    }
    case Op::ConcatCols: {
        Matrix out(a->rows(), a->cols() + b->cols());
        out << *a, *b;
        return out;
    }
    }
    throw std::logic_error("unknown tape op");
}

Var Tape::matmul(Var a, Var b)
{
    require(a.cols() == b.rows(), "matmul: inner dimensions differ");
    Node n = make(Op::MatMul, {a, b});
    n.value = evaluate(n);
    return push(std::move(n));
}

Var Tape::matmul_nt(Var a, Var b)
{
    require(a.cols() == b.cols(), "matmul_nt: inner dimensions differ");
    Node n = make(Op::MatMulNT, {a, b});
    n.value = evaluate(n);
    return push(std::move(n));
}

Var Tape::matmul_tn(Var a, Var b)
{
    require(a.rows() == b.rows(), "matmul_tn: inner dimensions differ");
    Node n = make(Op::MatMulTN, {a, b});
    n.value = evaluate(n);
    return push(std::move(n));
}

Var Tape::add_row(Var a, Var row)
{
    require(row.rows() == 1 && row.cols() == a.cols(), "add_row: row shape");
    Node n = make(Op::AddRow, {a, row});
    n.value = evaluate(n);
    return push(std::move(n));
}

Var Tape::broadcast_rows(Var row, Eigen::Index rows)
{
    require(row.rows() == 1, "broadcast_rows: expects a row");
    Node n = make(Op::BroadcastRows, {row});
    n.i0 = rows;
    n.value = evaluate(n);
    return push(std::move(n));
}

Var Tape::col_sum(Var a)
{
    Node n = make(Op::ColSum, {a});
    n.value = evaluate(n);
    return push(std::move(n));
}

Var Tape::sigmoid(Var a)
{
    Node n = make(Op::Sigmoid, {a});
    n.value = evaluate(n);
    return push(std::move(n));
}

Var Tape::mul(Var a, Var b)
{
    require(a.rows() == b.rows() && a.cols() == b.cols(), "mul: shapes differ");
    Node n = make(Op::Mul, {a, b});
    n.value = evaluate(n);
    return push(std::move(n));
}

Var Tape::add(Var a, Var b)
{
    require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shapes differ");
    Node n = make(Op::Add, {a, b});
    n.value = evaluate(n);
    return push(std::move(n));
}

Var Tape::sub(Var a, Var b)
{
    require(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shapes differ");
    Node n = make(Op::Sub, {a, b});
    n.value = evaluate(n);
    return push(std::move(n));
}

Var Tape::affine(Var a, double scale, double shift)
{
    Node n = make(Op::Affine, {a});
    n.a = scale;
    n.c = shift;
    n.value = evaluate(n);
    return push(std::move(n));
}

Var Tape::mul_const(Var a, std::shared_ptr<const Matrix> m)
{
    require(m && m->cols() == a.cols() && (m->rows() == a.rows() || m->rows() == 1),
            "mul_const: constant shape");
    Node n = make(Op::MulConst, {a});
    n.constant = std::move(m);
    n.value = evaluate(n);
    return push(std::move(n));
}

Var Tape::scalar_mul_const(Var s, std::shared_ptr<const Matrix> m)
{
    require(s.rows() == 1 && s.cols() == 1 && m, "scalar_mul_const: expects a 1 x 1 scalar");
    Node n = make(Op::ScalarMulConst, {s});
    n.constant = std::move(m);
    n.value = evaluate(n);
    return push(std::move(n));
}

Var Tape::sum(Var a)
{
    Node n = make(Op::Sum, {a});
    n.value = evaluate(n);
    return push(std::move(n));
}

Var Tape::abs_sum(Var a)
{
    Node n = make(Op::AbsSum, {a});
    n.value = evaluate(n);
    return push(std::move(n));
}

Var Tape::slice_cols(Var a, Eigen::Index start, Eigen::Index count)
{
    require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols: range");
    Node n = make(Op::SliceCols, {a});
    n.i0 = start;
    n.i1 = count;
    n.value = evaluate(n);
    return push(std::move(n));
}

Var Tape::pad_cols(Var a, Eigen::Index start, Eigen::Index total)
{
    require(start >= 0 && start + a.cols() <= total, "pad_cols: range");
    Node n = make(Op::PadCols, {a});
    n.i0 = start;
    n.i1 = total;
    n.value = evaluate(n);
    return push(std::move(n));
}

Var Tape::concat_cols(Var a, Var b)
{
    require(a.rows() == b.rows(), "concat_cols: row counts differ");
    Node n = make(Op::ConcatCols, {a, b});
    n.value = evaluate(n);
    return push(std::move(n));
}

void Tape::backward(std::size_t id, Var g, std::array<bool, 2> need, std::array<Var, 2>& out)
{
    // Copy what we need: pushing new nodes may reallocate nodes_.
    const Op op = nodes_[id].op;
    const Var a(this, nodes_[id].in[0]);
    const Var b(this, nodes_[id].in[1]);
    const Var self(this, id);
    const double scale = nodes_[id].a;
    const Eigen::Index i0 = nodes_[id].i0;
    const auto constant = nodes_[id].constant;

    switch (op) {
    case Op::Leaf: break;
    case Op::MatMul:
        if (need[0])
            out[0] = matmul_nt(g, b);
        if (need[1])
            out[1] = matmul_tn(a, g);
        break;
    case Op::MatMulNT:
        if (need[0])
            out[0] = matmul(g, b);
        if (need[1])
            out[1] = matmul_tn(g, a);
        break;
    case Op::MatMulTN:
        if (need[0])
            out[0] = matmul_nt(b, g);
        if (need[1])
            out[1] = matmul(a, g);
        break;
    case Op::AddRow:
        out[0] = g;
        if (need[1])
            out[1] = col_sum(g);
        break;
    case Op::BroadcastRows: out[0] = col_sum(g); break;
    case Op::ColSum: out[0] = broadcast_rows(g, a.rows()); break;
    case Op::Sigmoid: out[0] = mul(g, mul(self, affine(self, -1.0, 1.0))); break;
    case Op::Mul:
        if (need[0])
            out[0] = mul(g, b);
        if (need[1])
            out[1] = mul(g, a);
        break;
    case Op::Add:
        out[0] = g;
        out[1] = g;
        break;
    case Op::Sub:
        out[0] = g;
        if (need[1])
            out[1] = affine(g, -1.0);
        break;
    case Op::Affine: out[0] = affine(g, scale); break;
    case Op::MulConst: out[0] = mul_const(g, constant); break;
    case Op::ScalarMulConst: out[0] = sum(mul_const(g, constant)); break;
    case Op::Sum:
        out[0] = scalar_mul_const(g, std::make_shared<const Matrix>(
                                         Matrix::Ones(a.rows(), a.cols())));
        break;
    case Op::AbsSum: {
        const Matrix& av = a.value();
        auto sign = std::make_shared<Matrix>(av.rows(), av.cols());
        for (Eigen::Index j = 0; j < av.cols(); ++j)
            for (Eigen::Index i = 0; i < av.rows(); ++i)
                (*sign)(i, j) = av(i, j) > 0.0 ? 1.0 : (av(i, j) < 0.0 ? -1.0 : 0.0);
        out[0] = scalar_mul_const(g, std::move(sign));
        break;
    }
    case Op::SliceCols: out[0] = pad_cols(g, i0, a.cols()); break;
    case Op::PadCols: out[0] = slice_cols(g, i0, a.cols()); break;
    case Op::ConcatCols:
        if (need[0])
            out[0] = slice_cols(g, 0, a.cols());
        if (need[1])
            out[1] = slice_cols(g, a.cols(), b.cols());
        break;
    }
}

std::vector<Var> Tape::grad(Var output, std::span<const Var> wrt)
{
    check(output);
    require(output.rows() == 1 && output.cols() == 1, "grad: output must be 1 x 1");
    const std::size_t end = output.id_ + 1;

    std::vector<char> depends(end, 0);
    for (Var w : wrt) {
        check(w);
        if (w.id_ < end)
            depends[w.id_] = 1;
    }
    for (std::size_t i = 0; i < end; ++i) {
        if (depends[i])
            continue;
        const Node& n = nodes_[i];
        for (int k = 0; k < n.arity; ++k)
            if (depends[n.in[k]])
                depends[i] = 1;
    }

    std::vector<Var> grads(end);
    std::vector<char> has(end, 0);
    if (depends[output.id_]) {
        grads[output.id_] = constant(Matrix::Ones(1, 1));
        has[output.id_] = 1;
    }

    std::vector<char> is_target(end, 0);
    for (Var w : wrt)
        if (w.id_ < end)
            is_target[w.id_] = 1;

    for (std::size_t i = end; i-- > 0;) {
        if (!has[i] || !depends[i] || nodes_[i].op == Op::Leaf)
            continue;
        // A target's own inputs are held fixed: stop there unless the target
        // itself depends on another target.
        if (is_target[i]) {
            bool upstream = false;
            for (int k = 0; k < nodes_[i].arity; ++k)
                upstream = upstream || depends[nodes_[i].in[k]];
            if (!upstream)
                continue;
        }
        const int arity = nodes_[i].arity;
        std::array<bool, 2> need{false, false};
        for (int k = 0; k < arity; ++k)
            need[k] = depends[nodes_[i].in[k]] != 0;
        std::array<Var, 2> contrib;
        backward(i, grads[i], need, contrib);
        for (int k = 0; k < arity; ++k) {
            const std::size_t parent = nodes_[i].in[k];
            if (!depends[parent])
                continue;
            if (has[parent]) {
                grads[parent] = add(grads[parent], contrib[k]);
            } else {
                grads[parent] = contrib[k];
                has[parent] = 1;
            }
        }
    }

    std::vector<Var> result;
    result.reserve(wrt.size());
    for (Var w : wrt) {
        if (w.id_ < end && has[w.id_])
            result.push_back(grads[w.id_]);
        else
            result.push_back(constant(Matrix::Zero(w.rows(), w.cols())));
    }
    return result;
}

bool Tape::replay_matches() const
{
    for (const Node& n : nodes_) {
        if (n.op == Op::Leaf)
            continue;
        const Matrix again = evaluate(n);
        if (again.rows() != n.value.rows() || again.cols() != n.value.cols())
            return false;
        for (Eigen::Index k = 0; k < again.size(); ++k) {
            const double u = again.data()[k];
            const double v = n.value.data()[k];
            if (std::memcmp(&u, &v, sizeof(double)) != 0)
                return false;
        }
    }
    return true;
}

}  // namespace nssnn::autodiff
