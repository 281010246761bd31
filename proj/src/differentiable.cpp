#include "nssnn/differentiable.hpp"

#include <cmath>

namespace nssnn {

namespace tape {

using autodiff::Matrix;
using autodiff::Tape;
using autodiff::Var;

std::vector<Var> Network::all() const
{
    std::vector<Var> v;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        v.push_back(weights[k]);
        v.push_back(biases[k]);
    }
    return v;
}

Network record(Tape& t, const MlpParameters& theta)
{
    Network net;
    for (const auto& l : theta.layers) {
        net.weights.push_back(t.leaf(l.weights));
        net.biases.push_back(t.leaf(l.bias.transpose()));
    }
    return net;
}

Var hamiltonian(Tape& t, const Network& net, Var inputs)
{
    Var a = inputs;
    const std::size_t last = net.weights.size() - 1;
    for (std::size_t k = 0; k < last; ++k)
        a = t.sigmoid(t.add_row(t.matmul_nt(a, net.weights[k]), net.biases[k]));
    return t.add_row(t.matmul_nt(a, net.weights[last]), net.biases[last]);
}

std::pair<Var, Var> slot_gradients(Tape& t, const Network& net, Var a, Var b)
{
    const Eigen::Index n = a.cols();
    const Var inputs = t.concat_cols(a, b);
    const Var total = t.sum(hamiltonian(t, net, inputs));
    const Var g = t.grad(total, std::span<const Var>(&inputs, 1)).front();
    return {t.slice_cols(g, 0, n), t.slice_cols(g, n, n)};
}

namespace {

Var weighted(Tape& t, Var g, const std::shared_ptr<const Matrix>& weights, double delta)
{
    if (weights)
        g = t.mul_const(g, weights);
    return t.affine(g, delta);
}

BatchState phi1(Tape& t, const Network& net, const BatchState& s, double delta,
                const std::shared_ptr<const Matrix>& w)
{
    const auto [dq, dp] = slot_gradients(t, net, s.q, s.y);
    return {s.q, t.sub(s.p, weighted(t, dq, w, delta)), t.add(s.x, weighted(t, dp, w, delta)),
            s.y};
}

BatchState phi2(Tape& t, const Network& net, const BatchState& s, double delta,
                const std::shared_ptr<const Matrix>& w)
{
    const auto [dq, dp] = slot_gradients(t, net, s.x, s.p);
    return {t.add(s.q, weighted(t, dp, w, delta)), s.p, s.x,
            t.sub(s.y, weighted(t, dq, w, delta))};
}

BatchState phi3(Tape& t, const BatchState& s, double delta, double omega)
{
    const double c = std::cos(2.0 * omega * delta);
    const double sn = std::sin(2.0 * omega * delta);
    const Var uq = t.add(s.q, s.x);
    const Var up = t.add(s.p, s.y);
    const Var vq = t.sub(s.q, s.x);
    const Var vp = t.sub(s.p, s.y);
    const Var rq = t.add(t.affine(vq, c), t.affine(vp, sn));
    const Var rp = t.add(t.affine(vq, -sn), t.affine(vp, c));
    return {t.affine(t.add(uq, rq), 0.5), t.affine(t.add(up, rp), 0.5),
            t.affine(t.sub(uq, rq), 0.5), t.affine(t.sub(up, rp), 0.5)};
}

std::shared_ptr<const Matrix> weight_row(const RolloutSpec& spec)
{
    if (spec.weights.empty())
        return nullptr;
    auto row = std::make_shared<Matrix>(1, static_cast<Eigen::Index>(spec.weights.size()));
    for (std::size_t i = 0; i < spec.weights.size(); ++i)
        (*row)(0, static_cast<Eigen::Index>(i)) = spec.weights[i];
    return row;
}

}  // namespace

BatchState strang_step(Tape& t, const Network& net, const BatchState& s, const RolloutSpec& spec)
{
    const auto w = weight_row(spec);
    const double half = 0.5 * spec.dt;
    BatchState out = phi1(t, net, s, half, w);
    out = phi2(t, net, out, half, w);
    out = phi3(t, out, spec.dt, spec.omega);
    out = phi2(t, net, out, half, w);
    return phi1(t, net, out, half, w);
}

Var nssnn_loss(Tape& t, const BatchState& predicted, Var q_target, Var p_target)
{
    const Var data = t.add(t.abs_sum(t.sub(q_target, predicted.q)),
                           t.abs_sum(t.sub(p_target, predicted.p)));
    const Var consistency = t.add(t.abs_sum(t.sub(predicted.x, predicted.q)),
                                  t.abs_sum(t.sub(predicted.y, predicted.p)));
    return t.add(data, consistency);
}

}  // namespace tape

namespace {

constexpr std::size_t kChunkRows = 64;

using autodiff::Matrix;

void fill_rows(Matrix& q, Matrix& p, std::span<const SamplePair> chunk, bool target)
{
    const std::size_t n = chunk.front().initial.dim();
    q.resize(static_cast<Eigen::Index>(chunk.size()), static_cast<Eigen::Index>(n));
    p.resizeLike(q);
    for (std::size_t r = 0; r < chunk.size(); ++r) {
        const PhaseState& s = target ? chunk[r].target : chunk[r].initial;
        if (s.dim() != n || s.p.size() != n)
            throw Error(ErrorKind::DimensionMismatch, "sample dimensions differ within batch");
        for (std::size_t i = 0; i < n; ++i) {
            q(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = s.q[i];
            p(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = s.p[i];
        }
    }
}

struct ChunkResult {
    double loss = 0.0;
    Eigen::VectorXd grad;
    bool diverged = false;
};

void append_flat(Eigen::VectorXd& flat, Eigen::Index& k, const Matrix& w, const Matrix& b)
{
    for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            flat(k++) = w(i, j);
    for (Eigen::Index j = 0; j < b.cols(); ++j)
        flat(k++) = b(0, j);
}

ChunkResult chunk_gradient(const MlpParameters& theta, std::span<const SamplePair> chunk,
                           const RolloutSpec& spec)
{
    autodiff::Tape t;
    const tape::Network net = tape::record(t, theta);
    Matrix q0, p0, qt, pt;
    fill_rows(q0, p0, chunk, false);
    fill_rows(qt, pt, chunk, true);

    const auto q_init = t.constant(q0);
    const auto p_init = t.constant(p0);
    tape::BatchState s{q_init, p_init, q_init, p_init};
    ChunkResult result;
    for (std::size_t i = 0; i < spec.steps; ++i) {
        s = tape::strang_step(t, net, s, spec);
        if (!s.q.value().allFinite() || !s.p.value().allFinite() || !s.x.value().allFinite() ||
            !s.y.value().allFinite()) {
            result.diverged = true;
            return result;
        }
    }
    const auto loss = tape::nssnn_loss(t, s, t.constant(qt), t.constant(pt));
    result.loss = loss.value()(0, 0);

    const auto params = net.all();
    const auto grads = t.grad(loss, params);
    result.grad.resize(static_cast<Eigen::Index>(theta.parameter_count()));
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < theta.layers.size(); ++l)
        append_flat(result.grad, k, grads[2 * l].value(), grads[2 * l + 1].value());
    return result;
}

}  // namespace

LossGradient loss_parameter_gradient(const MlpParameters& theta, std::span<const SamplePair> batch,
                                     const RolloutSpec& spec)
{
    theta.validate();
    LossGradient out{0.0, theta.zeros_like()};
    if (batch.empty())
        return out;
    if (2 * batch.front().initial.dim() != theta.input_dim())
        throw Error(ErrorKind::DimensionMismatch, "sample width does not match network input");
    if (!spec.weights.empty() && spec.weights.size() != batch.front().initial.dim())
        throw Error(ErrorKind::DimensionMismatch, "rollout weights width");

    const std::size_t chunks = (batch.size() + kChunkRows - 1) / kChunkRows;
    std::vector<ChunkResult> results(chunks);
    std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t c = 0; c < chunks; ++c) {
        try {
            const std::size_t begin = c * kChunkRows;
            const std::size_t count = std::min(kChunkRows, batch.size() - begin);
            results[c] = chunk_gradient(theta, batch.subspan(begin, count), spec);
        } catch (...) {
#pragma omp critical(nssnn_loss_gradient_failure)
            if (!failure)
                failure = std::current_exception();
        }
    }
    if (failure)
        std::rethrow_exception(failure);

    Eigen::VectorXd total = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(theta.parameter_count()));
    for (std::size_t c = 0; c < chunks; ++c) {
        if (results[c].diverged)
            throw Error(ErrorKind::DivergedRollout,
                        "non-finite state in rollout chunk " + std::to_string(c));
        out.loss += results[c].loss;
        total += results[c].grad;
    }
    out.gradient.assign_flat(total);
    return out;
}

std::pair<MlpParameters, MlpParameters> input_gradient_parameter_jacobian_sums(
    const MlpParameters& theta, std::span<const double> q, std::span<const double> p)
{
    theta.validate();
    const auto n = static_cast<Eigen::Index>(q.size());
    if (2 * q.size() != theta.input_dim() || p.size() != q.size())
        throw Error(ErrorKind::DimensionMismatch, "state width does not match network input");
    autodiff::Tape t;
    const tape::Network net = tape::record(t, theta);
    Matrix qm(1, n), pm(1, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        qm(0, i) = q[static_cast<std::size_t>(i)];
        pm(0, i) = p[static_cast<std::size_t>(i)];
    }
    const auto [dq, dp] = tape::slot_gradients(t, net, t.constant(qm), t.constant(pm));
    const auto params = net.all();

    auto collect = [&](autodiff::Var target) {
        const auto grads = t.grad(t.sum(target), params);
        MlpParameters out = theta.zeros_like();
        Eigen::VectorXd flat(static_cast<Eigen::Index>(theta.parameter_count()));
        Eigen::Index k = 0;
        for (std::size_t l = 0; l < theta.layers.size(); ++l)
            append_flat(flat, k, grads[2 * l].value(), grads[2 * l + 1].value());
        out.assign_flat(flat);
        return out;
    };
    return {collect(dq), collect(dp)};
}

}  // namespace nssnn
