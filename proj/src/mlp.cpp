#include "nssnn/mlp.hpp"

#include <cmath>

#include "nssnn/rng.hpp"

namespace nssnn {

namespace {

constexpr Eigen::Index kBlockColumns = 256;

double logistic(double z)
{
    return 1.0 / (1.0 + std::exp(-z));
}

void check_input(const MlpParameters& theta, std::size_t q_size, std::size_t p_size)
{
    if (q_size + p_size != theta.input_dim() || q_size != p_size)
        throw Error(ErrorKind::DimensionMismatch,
                    "network expects " + std::to_string(theta.input_dim()) + " inputs, got " +
                        std::to_string(q_size + p_size));
}

// Forward and input-gradient sweep over one block of columns.
void gradient_block(const MlpParameters& theta, const Eigen::Ref<const Eigen::MatrixXd>& x,
                    Eigen::Ref<Eigen::MatrixXd> grads, double* values)
{
    const auto& layers = theta.layers;
    const std::size_t hidden = layers.size() - 1;
    std::vector<Eigen::MatrixXd> act(hidden);

    for (std::size_t k = 0; k < hidden; ++k) {
        Eigen::MatrixXd z;
        if (k == 0)
            z.noalias() = layers[k].weights * x;
        else
            z.noalias() = layers[k].weights * act[k - 1];
        z.colwise() += layers[k].bias;
        act[k] = (1.0 + (-z.array()).exp()).inverse().matrix();
    }
    if (values) {
        const Eigen::RowVectorXd out =
            layers[hidden].weights * act[hidden - 1] +
            Eigen::RowVectorXd::Constant(x.cols(), layers[hidden].bias(0));
        for (Eigen::Index b = 0; b < x.cols(); ++b)
            values[b] = out(b);
    }

    Eigen::MatrixXd g = layers[hidden].weights.transpose().replicate(1, x.cols());
    for (std::size_t k = hidden; k-- > 0;) {
        const Eigen::MatrixXd gz =
            (g.array() * act[k].array() * (1.0 - act[k].array())).matrix();
        if (k == 0)
            grads.noalias() = layers[0].weights.transpose() * gz;
        else
            g.noalias() = layers[k].weights.transpose() * gz;
    }
}

}  // namespace

std::size_t MlpParameters::input_dim() const
{
    return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weights.cols());
}

std::vector<std::size_t> MlpParameters::layer_sizes() const
{
    std::vector<std::size_t> sizes;
    if (layers.empty())
        return sizes;
    sizes.push_back(input_dim());
    for (const auto& l : layers)
        sizes.push_back(static_cast<std::size_t>(l.weights.rows()));
    return sizes;
}

std::size_t MlpParameters::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& l : layers)
        n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
}

Eigen::VectorXd MlpParameters::flatten() const
{
    Eigen::VectorXd flat(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index k = 0;
    for (const auto& l : layers) {
        for (Eigen::Index i = 0; i < l.weights.rows(); ++i)
            for (Eigen::Index j = 0; j < l.weights.cols(); ++j)
                flat(k++) = l.weights(i, j);
        for (Eigen::Index i = 0; i < l.bias.size(); ++i)
            flat(k++) = l.bias(i);
    }
    return flat;
}

void MlpParameters::assign_flat(const Eigen::VectorXd& flat)
{
    if (static_cast<std::size_t>(flat.size()) != parameter_count())
        throw Error(ErrorKind::DimensionMismatch, "flat parameter vector length");
    Eigen::Index k = 0;
    for (auto& l : layers) {
        for (Eigen::Index i = 0; i < l.weights.rows(); ++i)
            for (Eigen::Index j = 0; j < l.weights.cols(); ++j)
                l.weights(i, j) = flat(k++);
        for (Eigen::Index i = 0; i < l.bias.size(); ++i)
            l.bias(i) = flat(k++);
    }
}

MlpParameters MlpParameters::zeros_like() const
{
    MlpParameters z;
    for (const auto& l : layers)
        z.layers.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                            Eigen::VectorXd::Zero(l.bias.size())});
    return z;
}

void MlpParameters::validate() const
{
    if (layers.empty())
        throw Error(ErrorKind::DimensionMismatch, "network has no layers");
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const auto& l = layers[k];
        if (l.bias.size() != l.weights.rows())
            throw Error(ErrorKind::DimensionMismatch,
                        "layer " + std::to_string(k) + " bias does not match weight rows");
        if (k > 0 && l.weights.cols() != layers[k - 1].weights.rows())
            throw Error(ErrorKind::DimensionMismatch,
                        "layer " + std::to_string(k) + " does not chain to the previous layer");
        if (!l.weights.allFinite() || !l.bias.allFinite())
            throw Error(ErrorKind::NonFiniteEntry, "layer " + std::to_string(k));
    }
    if (layers.back().weights.rows() != 1)
        throw Error(ErrorKind::DimensionMismatch, "output layer must have width 1");
    if (input_dim() == 0 || input_dim() % 2 != 0)
        throw Error(ErrorKind::DimensionMismatch, "input width must be 2N");
}

std::vector<std::size_t> default_layer_sizes(std::size_t phase_dim)
{
    std::vector<std::size_t> sizes{2 * phase_dim};
    for (std::size_t k = 0; k + 1 < kLinearLayers; ++k)
        sizes.push_back(kHiddenWidth);
    sizes.push_back(1);
    return sizes;
}

MlpParameters init_xavier(std::span<const std::size_t> layer_sizes, std::uint64_t seed)
{
    if (layer_sizes.size() < 2)
        throw Error(ErrorKind::DimensionMismatch, "need at least input and output widths");
    Rng rng(seed, "init");
    MlpParameters theta;
    for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
        const auto fan_in = static_cast<Eigen::Index>(layer_sizes[k]);
        const auto fan_out = static_cast<Eigen::Index>(layer_sizes[k + 1]);
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        DenseLayer l{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd::Zero(fan_out)};
        for (Eigen::Index i = 0; i < fan_out; ++i)
            for (Eigen::Index j = 0; j < fan_in; ++j)
                l.weights(i, j) = rng.uniform(-bound, bound);
        theta.layers.push_back(std::move(l));
    }
    return theta;
}

double forward(const MlpParameters& theta, std::span<const double> q, std::span<const double> p)
{
    check_input(theta, q.size(), p.size());
    Eigen::VectorXd a(static_cast<Eigen::Index>(q.size() + p.size()));
    for (std::size_t i = 0; i < q.size(); ++i) {
        a(static_cast<Eigen::Index>(i)) = q[i];
        a(static_cast<Eigen::Index>(q.size() + i)) = p[i];
    }
    const std::size_t hidden = theta.layers.size() - 1;
    for (std::size_t k = 0; k < hidden; ++k) {
        const Eigen::VectorXd z = theta.layers[k].weights * a + theta.layers[k].bias;
        a = z.unaryExpr(&logistic);
    }
    return (theta.layers[hidden].weights * a)(0) + theta.layers[hidden].bias(0);
}

Gradient input_gradient(const MlpParameters& theta, std::span<const double> q,
                        std::span<const double> p)
{
    check_input(theta, q.size(), p.size());
    const auto n = q.size();
    Eigen::MatrixXd x(static_cast<Eigen::Index>(2 * n), 1);
    for (std::size_t i = 0; i < n; ++i) {
        x(static_cast<Eigen::Index>(i), 0) = q[i];
        x(static_cast<Eigen::Index>(n + i), 0) = p[i];
    }
    Eigen::MatrixXd g(x.rows(), 1);
    gradient_block(theta, x, g, nullptr);
    Gradient out{Vector(n), Vector(n)};
    for (std::size_t i = 0; i < n; ++i) {
        out.dq[i] = g(static_cast<Eigen::Index>(i), 0);
        out.dp[i] = g(static_cast<Eigen::Index>(n + i), 0);
    }
    return out;
}

void input_gradient_batch(const MlpParameters& theta, const Eigen::MatrixXd& inputs,
                          Eigen::MatrixXd& grads, Eigen::VectorXd* values)
{
    if (static_cast<std::size_t>(inputs.rows()) != theta.input_dim())
        throw Error(ErrorKind::DimensionMismatch, "batch input rows");
    const Eigen::Index cols = inputs.cols();
    grads.resize(inputs.rows(), cols);
    if (values)
        values->resize(cols);
    const Eigen::Index blocks = (cols + kBlockColumns - 1) / kBlockColumns;

#pragma omp parallel for schedule(static)
    for (Eigen::Index blk = 0; blk < blocks; ++blk) {
        const Eigen::Index c0 = blk * kBlockColumns;
        const Eigen::Index nc = std::min(kBlockColumns, cols - c0);
        gradient_block(theta, inputs.middleCols(c0, nc), grads.middleCols(c0, nc),
                       values ? values->data() + c0 : nullptr);
    }
}

void input_gradient_reference(const MlpParameters& theta, const Eigen::MatrixXd& inputs,
                              Eigen::MatrixXd& grads, Eigen::VectorXd* values)
{
    if (static_cast<std::size_t>(inputs.rows()) != theta.input_dim())
        throw Error(ErrorKind::DimensionMismatch, "batch input rows");
    const auto& layers = theta.layers;
    const std::size_t hidden = layers.size() - 1;
    grads.resize(inputs.rows(), inputs.cols());
    if (values)
        values->resize(inputs.cols());

    for (Eigen::Index b = 0; b < inputs.cols(); ++b) {
        std::vector<std::vector<double>> act(hidden + 1);
        act[0].assign(inputs.col(b).data(), inputs.col(b).data() + inputs.rows());
        for (std::size_t k = 0; k < hidden; ++k) {
            const auto& w = layers[k].weights;
            act[k + 1].resize(static_cast<std::size_t>(w.rows()));
            for (Eigen::Index i = 0; i < w.rows(); ++i) {
                double z = layers[k].bias(i);
                for (Eigen::Index j = 0; j < w.cols(); ++j)
                    z += w(i, j) * act[k][static_cast<std::size_t>(j)];
                act[k + 1][static_cast<std::size_t>(i)] = logistic(z);
            }
        }
        const auto& wout = layers[hidden].weights;
        if (values) {
            double h = layers[hidden].bias(0);
            for (Eigen::Index j = 0; j < wout.cols(); ++j)
                h += wout(0, j) * act[hidden][static_cast<std::size_t>(j)];
            (*values)(b) = h;
        }
        std::vector<double> g(wout.data(), wout.data() + wout.cols());
        for (std::size_t k = hidden; k-- > 0;) {
            const auto& w = layers[k].weights;
            std::vector<double> prev(static_cast<std::size_t>(w.cols()), 0.0);
            for (Eigen::Index i = 0; i < w.rows(); ++i) {
                const double s = act[k + 1][static_cast<std::size_t>(i)];
                const double gz = g[static_cast<std::size_t>(i)] * s * (1.0 - s);
                for (Eigen::Index j = 0; j < w.cols(); ++j)
                    prev[static_cast<std::size_t>(j)] += w(i, j) * gz;
            }
            g = std::move(prev);
        }
        for (Eigen::Index i = 0; i < inputs.rows(); ++i)
            grads(i, b) = g[static_cast<std::size_t>(i)];
    }
}

MlpHamiltonian::MlpHamiltonian(MlpParameters theta)
    : theta_(std::move(theta))
{
    theta_.validate();
    dim_ = theta_.input_dim() / 2;
}

double MlpHamiltonian::value(std::span<const double> q, std::span<const double> p) const
{
    return forward(theta_, q, p);
}

void MlpHamiltonian::gradient(std::span<const double> q, std::span<const double> p,
                              std::span<double> dq, std::span<double> dp) const
{
    check_input(theta_, q.size(), p.size());
    const auto n = static_cast<Eigen::Index>(q.size());
    Eigen::MatrixXd x(2 * n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        x(i, 0) = q[static_cast<std::size_t>(i)];
        x(n + i, 0) = p[static_cast<std::size_t>(i)];
    }
    Eigen::MatrixXd g(2 * n, 1);
    gradient_block(theta_, x, g, nullptr);
    for (Eigen::Index i = 0; i < n; ++i) {
        dq[static_cast<std::size_t>(i)] = g(i, 0);
        dp[static_cast<std::size_t>(i)] = g(n + i, 0);
    }
}

}  // namespace nssnn
