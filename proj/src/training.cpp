#include "nssnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nssnn/integrator.hpp"
#include "nssnn/rng.hpp"
#include "nssnn/systems.hpp"

namespace nssnn {

namespace {

constexpr std::size_t kGroundTruthRefinement = 10;
constexpr double kGroundTruthMaxStep = 5e-5;

// Substeps per training step for the reference integration: at least ten, and
// fine enough that large training steps still get an accurate target.
std::size_t ground_truth_substeps(double dt)
{
    const auto by_size = static_cast<std::size_t>(std::ceil(dt / kGroundTruthMaxStep - 1e-9));
    return std::max(kGroundTruthRefinement, by_size);
}

std::size_t integer_ratio(double num, double den, const char* what)
{
    const double ratio = num / den;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
        throw Error(ErrorKind::InvalidConfig, what);
    return static_cast<std::size_t>(rounded);
}

double sample_loss(const AugmentedState& pred, const PhaseState& target)
{
    double loss = 0.0;
    for (std::size_t i = 0; i < pred.dim(); ++i) {
        loss += std::abs(target.q[i] - pred.q[i]) + std::abs(target.p[i] - pred.p[i]);
        loss += std::abs(pred.x[i] - pred.q[i]) + std::abs(pred.y[i] - pred.p[i]);
    }
    return loss;
}

}  // namespace

void TrainingConfig::validate() const
{
    if (n_samples == 0)
        throw Error(ErrorKind::InvalidConfig, "n_samples must be positive");
    if (batch_size == 0 || batch_size > n_samples)
        throw Error(ErrorKind::InvalidConfig, "batch_size must be in [1, n_samples]");
    if (!(dt > 0.0) || !(t_train > 0.0))
        throw Error(ErrorKind::InvalidConfig, "dt and t_train must be positive");
    if (!(omega >= 0.0))
        throw Error(ErrorKind::InvalidConfig, "omega must be non-negative");
    if (!(learning_rate > 0.0) || !(lr_decay > 0.0) || lr_decay_every == 0)
        throw Error(ErrorKind::InvalidConfig, "learning-rate schedule must be positive");
    if (!(noise >= 0.0))
        throw Error(ErrorKind::InvalidConfig, "noise amplitude must be non-negative");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
        throw Error(ErrorKind::InvalidConfig, "validation_fraction must be in [0, 1)");
    rollout_steps();
}

std::size_t TrainingConfig::rollout_steps() const
{
    return integer_ratio(t_train, dt, "t_train / dt must be a positive integer");
}

double TrainingConfig::learning_rate_at(std::size_t epoch) const
{
    return learning_rate * std::pow(lr_decay, static_cast<double>(epoch / lr_decay_every));
}

RolloutSpec TrainingConfig::rollout_spec() const
{
    return {dt, omega, rollout_steps(), {}};
}

Dataset generate_dataset(const TrainingConfig& cfg)
{
    cfg.validate();
    const SystemEntry& system = find_system(cfg.system);
    const std::size_t substeps = ground_truth_substeps(cfg.dt);
    const std::size_t fine_steps = cfg.rollout_steps() * substeps;
    const double fine_dt = cfg.dt / static_cast<double>(substeps);

    Dataset data{cfg.system, cfg.t_train, std::vector<SamplePair>(cfg.n_samples)};
    const auto count = static_cast<std::ptrdiff_t>(cfg.n_samples);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < count; ++k) {
        const auto i = static_cast<std::uint64_t>(k);
        Rng draw(cfg.seed, "data", i);
        const PhaseState s0 = system.domain.sample(draw);

        AugmentedState s = AugmentedState::from_phase(s0);
        AugmentedIntegrator integrator(*system.hamiltonian, cfg.omega);
        for (std::size_t step = 0; step < fine_steps; ++step)
            integrator.step(s, fine_dt);

        SamplePair pair{s0, s.phase()};
        if (cfg.noise > 0.0) {
            Rng noise(cfg.seed, "noise", i);
            for (PhaseState* state : {&pair.initial, &pair.target}) {
                for (double& v : state->q)
                    v += cfg.noise * noise.uniform(-1.0, 1.0);
                for (double& v : state->p)
                    v += cfg.noise * noise.uniform(-1.0, 1.0);
            }
        }
        data.samples[static_cast<std::size_t>(k)] = std::move(pair);
    }
    return data;
}

double nssnn_loss(std::span<const AugmentedState> predicted, std::span<const PhaseState> target)
{
    if (predicted.size() != target.size())
        throw Error(ErrorKind::DimensionMismatch, "prediction and target counts differ");
    double loss = 0.0;
    for (std::size_t j = 0; j < predicted.size(); ++j) {
        if (predicted[j].dim() != target[j].dim() || target[j].p.size() != target[j].dim())
            throw Error(ErrorKind::DimensionMismatch, "prediction and target widths differ");
        loss += sample_loss(predicted[j], target[j]);
    }
    return loss;
}

void adam_step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, AdamState& moments, double lr,
               std::size_t step_index)
{
    if (grad.size() != theta.size())
        throw Error(ErrorKind::DimensionMismatch, "gradient length");
    if (moments.m.size() != theta.size()) {
        moments.m = Eigen::VectorXd::Zero(theta.size());
        moments.v = Eigen::VectorXd::Zero(theta.size());
    }
    const double t = static_cast<double>(std::max<std::size_t>(step_index, 1));
    const double c1 = 1.0 - std::pow(kAdamBeta1, t);
    const double c2 = 1.0 - std::pow(kAdamBeta2, t);
    moments.m = kAdamBeta1 * moments.m + (1.0 - kAdamBeta1) * grad;
    moments.v = kAdamBeta2 * moments.v + (1.0 - kAdamBeta2) * grad.cwiseProduct(grad);
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        const double m_hat = moments.m(i) / c1;
        const double v_hat = moments.v(i) / c2;
        theta(i) -= lr * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
    }
}

DatasetSplit split_dataset(std::size_t n, double validation_fraction, std::uint64_t seed)
{
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed, "split");
    for (std::size_t i = n; i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);
    const auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n)));
    DatasetSplit split;
    split.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(split.validation.begin(), split.validation.end());
    std::sort(split.train.begin(), split.train.end());
    return split;
}

double mean_rollout_loss(const MlpParameters& theta, std::span<const SamplePair> samples,
                         const RolloutSpec& spec)
{
    if (samples.empty())
        return 0.0;
    const MlpHamiltonian h(theta);
    std::vector<double> losses(samples.size());
    const auto count = static_cast<std::ptrdiff_t>(samples.size());

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < count; ++k) {
        const auto& pair = samples[static_cast<std::size_t>(k)];
        AugmentedState s = AugmentedState::from_phase(pair.initial);
        AugmentedIntegrator integrator(h, spec.omega, spec.weights);
        for (std::size_t i = 0; i < spec.steps; ++i)
            integrator.step(s, spec.dt);
        losses[static_cast<std::size_t>(k)] = sample_loss(s, pair.target);
    }
    double total = 0.0;
    for (double l : losses)
        total += l;
    return total / static_cast<double>(samples.size());
}

TrainingResult train(const TrainingConfig& cfg, const Dataset& data)
{
    cfg.validate();
    if (data.samples.size() < 2)
        throw Error(ErrorKind::InvalidConfig, "dataset needs at least two samples");
    const std::size_t dim = data.dim();
    const RolloutSpec spec = cfg.rollout_spec();

    const auto sizes = default_layer_sizes(dim);
    TrainingResult result{init_xavier(sizes, cfg.seed), {}};

    const DatasetSplit split = split_dataset(data.samples.size(), cfg.validation_fraction, cfg.seed);
    std::vector<SamplePair> validation;
    for (std::size_t i : split.validation)
        validation.push_back(data.samples[i]);

    Eigen::VectorXd flat = result.theta.flatten();
    AdamState moments;
    std::size_t step_index = 0;
    std::vector<std::size_t> order = split.train;
    std::vector<SamplePair> batch;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.learning_rate_at(epoch);
        Rng shuffle(cfg.seed, "shuffle", epoch);
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle.below(i)]);

        double epoch_loss = 0.0;
        for (std::size_t begin = 0, b = 0; begin < order.size(); begin += cfg.batch_size, ++b) {
            const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
            batch.clear();
            for (std::size_t i = begin; i < end; ++i)
                batch.push_back(data.samples[order[i]]);

            LossGradient lg;
            try {
                lg = loss_parameter_gradient(result.theta, batch, spec);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::DivergedRollout)
                    throw;
                throw Error(ErrorKind::DivergedRollout, "epoch " + std::to_string(epoch) +
                                                            ", batch " + std::to_string(b) + ": " +
                                                            e.what());
            }
            epoch_loss += lg.loss;
            adam_step(flat, lg.gradient.flatten(), moments, lr, ++step_index);
            result.theta.assign_flat(flat);
        }

        const double val = validation.empty() ? 0.0 : mean_rollout_loss(result.theta, validation, spec);
        result.history.push_back(
            {epoch, lr, epoch_loss / static_cast<double>(order.size()), val});
    }
    return result;
}

TrainingResult train(const TrainingConfig& cfg)
{
    return train(cfg, generate_dataset(cfg));
}

}  // namespace nssnn
