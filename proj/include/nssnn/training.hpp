#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nssnn/core.hpp"
#include "nssnn/differentiable.hpp"
#include "nssnn/mlp.hpp"

namespace nssnn {

struct TrainingConfig {
    std::string system = "spring";
    std::size_t n_samples = 2048;
    double t_train = 0.01;
    double dt = 0.01;
    double omega = kDefaultOmega;
    std::size_t batch_size = 512;
    double learning_rate = 0.05;
    double lr_decay = 0.8;
    std::size_t lr_decay_every = 10;
    std::size_t epochs = 100;
    double noise = 0.0;  // amplitude a of a * U(-1, 1)
    std::uint64_t seed = 0;
    double validation_fraction = 0.1;

    /// Throws InvalidConfig.
    void validate() const;
    /// T_train / dt, required to be a positive integer.
    std::size_t rollout_steps() const;
    /// learning_rate * lr_decay^floor(epoch / lr_decay_every), epochs counted from 0.
    double learning_rate_at(std::size_t epoch) const;
    RolloutSpec rollout_spec() const;
};

struct Dataset {
    std::string system;
    double t_train = 0.0;
    std::vector<SamplePair> samples;

    std::size_t dim() const { return samples.empty() ? 0 : samples.front().initial.dim(); }
};

/// Draws initial states from the system's sampling domain, integrates them
/// with the analytic Hamiltonian at min(dt / 10, 5e-5) up to T_train and optionally
/// perturbs both ends with independent a * U(-1, 1) noise per component.
/// Each sample uses its own RNG stream derived from the seed.
Dataset generate_dataset(const TrainingConfig& cfg);

/// Eq. 7 style loss summed over samples: data mismatch of (q, p) plus the
/// auxiliary consistency |x - q|_1 + |y - p|_1 of the prediction itself.
double nssnn_loss(std::span<const AugmentedState> predicted, std::span<const PhaseState> target);

struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

/// One bias-corrected Adam update; step_index counts from 1.
void adam_step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, AdamState& moments, double lr,
               std::size_t step_index);

struct EpochRecord {
    std::size_t epoch;
    double learning_rate;
    double train_loss;  // mean per sample
    double val_loss;    // mean per sample on the held-out split
};

struct TrainingResult {
    MlpParameters theta;
    std::vector<EpochRecord> history;
};

struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

/// Seed-stable hold-out of round(fraction * n) samples.
DatasetSplit split_dataset(std::size_t n, double validation_fraction, std::uint64_t seed);

/// Mean per-sample loss of theta's rollout on the given samples, evaluated
/// with the plain (non-recording) integrator.
double mean_rollout_loss(const MlpParameters& theta, std::span<const SamplePair> samples,
                         const RolloutSpec& spec);

TrainingResult train(const TrainingConfig& cfg, const Dataset& data);
TrainingResult train(const TrainingConfig& cfg);

}  // namespace nssnn
