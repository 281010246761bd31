#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nssnn/core.hpp"
#include "nssnn/integrator.hpp"
#include "nssnn/mlp.hpp"
#include "nssnn/training.hpp"

namespace nssnn {

struct EvalConfig {
    double dt = 0.01;
    double omega = kDefaultOmega;
    std::size_t stride = 1;  // recorded every stride-th prediction step
};

/// Rollout of the learned Hamiltonian from s0 over [0, horizon].
Trajectory predict(const MlpParameters& theta, const PhaseState& s0, double horizon,
                   const EvalConfig& cfg, CoordinateWeights weights = {});

/// Reference trajectory from the analytic Hamiltonian, integrated at dt / 10
/// and recorded on the same time grid as predict() with the same config.
Trajectory ground_truth(const HamiltonianProvider& h, const PhaseState& s0, double horizon,
                        const EvalConfig& cfg, CoordinateWeights weights = {});

/// |q_truth - q_pred|_1 + |p_truth - p_pred|_1 at each recorded time.
/// Throws MisalignedTrajectories if times or widths disagree.
Vector prediction_error_series(const Trajectory& truth, const Trajectory& pred);
/// Mean of prediction_error_series over the horizon.
double prediction_error(const Trajectory& truth, const Trajectory& pred);

struct DeviationResult {
    double value = 0.0;
    bool absolute = false;  // truth energy had zero norm, value is the plain L2 deviation
};

/// ||H_truth - H(pred)||_2 / ||H_truth||_2 over the recorded times, with
/// H_truth = truth_h0 held constant along the exact flow.
DeviationResult hamiltonian_deviation(double truth_h0, const Trajectory& pred,
                                      const HamiltonianProvider& h_true);
/// Same, but throws ZeroTruthNorm instead of falling back.
double hamiltonian_deviation_strict(double truth_h0, const Trajectory& pred,
                                    const HamiltonianProvider& h_true);

struct EvaluationReport {
    std::string system;
    std::uint64_t seed = 0;
    std::string config_hash;
    PhaseState initial;
    double horizon = 0.0;
    Vector times;
    Vector prediction_error_series;
    Vector hamiltonian_deviation_series;  // |H0 - H(pred)| / |H0| per time
    double prediction_error = 0.0;
    double hamiltonian_deviation = 0.0;
    bool hamiltonian_deviation_absolute = false;
    double max_abs_state = 0.0;  // sup-norm of predicted (q, p)
    bool diverged = false;
    Trajectory prediction;
    Trajectory truth;
};

/// Predicts from s0 with theta, builds the analytic reference, and scores the
/// aligned prefix. A divergent prediction is reported with diverged = true.
EvaluationReport evaluate(const MlpParameters& theta, const std::string& system,
                          const PhaseState& s0, double horizon, const EvalConfig& cfg,
                          std::uint64_t seed = 0);

/// Hex FNV-1a digest of a canonical text rendering of the config.
std::string config_hash(const EvalConfig& cfg, const std::string& system, double horizon);

inline constexpr double kOmegaStudyPresets[] = {0.0, 0.8, 0.9, 10.0};

struct OmegaTrace {
    double omega = 0.0;
    Trajectory trajectory;
    Vector deviation;  // auxiliary deviation at each recorded time
};

struct OmegaStudyConfig {
    PhaseState s0{{-3.0}, {0.0}};
    double dt = 1e-3;
    double horizon = 100.0;
    std::size_t stride = 100;
};

/// Integrates Tao's example for each binding coefficient.
std::vector<OmegaTrace> omega_study(std::span<const double> omegas,
                                    const OmegaStudyConfig& cfg = {});

struct AblationPoint {
    double dt = 0.0;
    double t_train = 0.0;
    std::vector<double> validation_errors;  // final validation loss per seed
    double median = 0.0;
};

/// Trains one model per (setting, seed) on the base config with dt or T_train
/// replaced and reports the median final validation loss over the seeds.
std::vector<AblationPoint> ablate_dt(const TrainingConfig& base, std::span<const double> dts,
                                     std::span<const std::uint64_t> seeds);
std::vector<AblationPoint> ablate_t_train(const TrainingConfig& base,
                                          std::span<const double> spans,
                                          std::span<const std::uint64_t> seeds);

double median(std::vector<double> values);

}  // namespace nssnn
