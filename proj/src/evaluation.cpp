#include "nssnn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "nssnn/rng.hpp"
#include "nssnn/systems.hpp"

namespace nssnn {

namespace {

constexpr std::size_t kTruthRefinement = 10;

bool same_time(double a, double b)
{
    return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a));
}

void check_aligned(const Trajectory& truth, const Trajectory& pred)
{
    if (truth.size() != pred.size())
        throw Error(ErrorKind::MisalignedTrajectories,
                    "trajectories have " + std::to_string(truth.size()) + " and " +
                        std::to_string(pred.size()) + " samples");
    if (truth.size() > 0 && truth.dim() != pred.dim())
        throw Error(ErrorKind::MisalignedTrajectories, "trajectory widths differ");
    for (std::size_t k = 0; k < truth.size(); ++k)
        if (!same_time(truth.times[k], pred.times[k]))
            throw Error(ErrorKind::MisalignedTrajectories,
                        "sample " + std::to_string(k) + " at different times");
}

Trajectory prefix(const Trajectory& traj, std::size_t n)
{
    Trajectory out;
    out.times.assign(traj.times.begin(), traj.times.begin() + static_cast<std::ptrdiff_t>(n));
    out.states.assign(traj.states.begin(), traj.states.begin() + static_cast<std::ptrdiff_t>(n));
    out.diverged = traj.diverged;
    return out;
}

double final_validation_loss(TrainingConfig cfg)
{
    const TrainingResult result = train(cfg);
    return result.history.empty() ? 0.0 : result.history.back().val_loss;
}

}  // namespace

Trajectory predict(const MlpParameters& theta, const PhaseState& s0, double horizon,
                   const EvalConfig& cfg, CoordinateWeights weights)
{
    const MlpHamiltonian h(theta);
    if (h.dimension() != s0.dim())
        throw Error(ErrorKind::DimensionMismatch, "initial state does not match the network");
    const auto icfg = IntegratorConfig::from_horizon(0.0, horizon, cfg.dt, cfg.omega);
    return rollout(s0, icfg, h, {0.0, cfg.stride, weights});
}

Trajectory ground_truth(const HamiltonianProvider& h, const PhaseState& s0, double horizon,
                        const EvalConfig& cfg, CoordinateWeights weights)
{
    if (h.dimension() != s0.dim())
        throw Error(ErrorKind::DimensionMismatch, "initial state does not match the system");
    auto icfg = IntegratorConfig::from_horizon(0.0, horizon, cfg.dt, cfg.omega);
    icfg.steps *= kTruthRefinement;
    icfg.dt = cfg.dt / static_cast<double>(kTruthRefinement);
    const std::size_t stride = std::max<std::size_t>(cfg.stride, 1) * kTruthRefinement;
    return rollout(s0, icfg, h, {0.0, stride, weights});
}

Vector prediction_error_series(const Trajectory& truth, const Trajectory& pred)
{
    check_aligned(truth, pred);
    Vector out(truth.size());
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const auto& a = truth.states[k];
        const auto& b = pred.states[k];
        double e = 0.0;
        for (std::size_t i = 0; i < a.dim(); ++i)
            e += std::abs(a.q[i] - b.q[i]) + std::abs(a.p[i] - b.p[i]);
        out[k] = e;
    }
    return out;
}

double prediction_error(const Trajectory& truth, const Trajectory& pred)
{
    const Vector series = prediction_error_series(truth, pred);
    if (series.empty())
        return 0.0;
    double sum = 0.0;
    for (double e : series)
        sum += e;
    return sum / static_cast<double>(series.size());
}

DeviationResult hamiltonian_deviation(double truth_h0, const Trajectory& pred,
                                      const HamiltonianProvider& h_true)
{
    double diff = 0.0;
    for (const auto& s : pred.states) {
        const double d = truth_h0 - h_true.value(s.q, s.p);
        diff += d * d;
    }
    const double norm = std::abs(truth_h0) * std::sqrt(static_cast<double>(pred.size()));
    if (norm == 0.0)
        return {std::sqrt(diff), true};
    return {std::sqrt(diff) / norm, false};
}

double hamiltonian_deviation_strict(double truth_h0, const Trajectory& pred,
                                    const HamiltonianProvider& h_true)
{
    const DeviationResult r = hamiltonian_deviation(truth_h0, pred, h_true);
    if (r.absolute)
        throw Error(ErrorKind::ZeroTruthNorm, "reference energy is zero over the horizon");
    return r.value;
}

std::string config_hash(const EvalConfig& cfg, const std::string& system, double horizon)
{
    char text[256];
    std::snprintf(text, sizeof text, "%s|%.17g|%.17g|%zu|%.17g", system.c_str(), cfg.dt,
                  cfg.omega, cfg.stride, horizon);
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(text)));
    return hex;
}

EvaluationReport evaluate(const MlpParameters& theta, const std::string& system,
                          const PhaseState& s0, double horizon, const EvalConfig& cfg,
                          std::uint64_t seed)
{
    const SystemEntry& entry = find_system(system);
    EvaluationReport r;
    r.system = entry.name;
    r.seed = seed;
    r.config_hash = config_hash(cfg, entry.name, horizon);
    r.initial = s0;
    r.horizon = horizon;
    r.prediction = predict(theta, s0, horizon, cfg);
    r.truth = ground_truth(*entry.hamiltonian, s0, horizon, cfg);
    r.diverged = r.prediction.diverged || r.truth.diverged;

    const std::size_t n = std::min(r.prediction.size(), r.truth.size());
    const Trajectory pred = prefix(r.prediction, n);
    const Trajectory truth = prefix(r.truth, n);
    r.times = pred.times;
    r.prediction_error_series = prediction_error_series(truth, pred);
    r.prediction_error = prediction_error(truth, pred);

    const double h0 = entry.hamiltonian->value(s0.q, s0.p);
    const DeviationResult dev = hamiltonian_deviation(h0, pred, *entry.hamiltonian);
    r.hamiltonian_deviation = dev.value;
    r.hamiltonian_deviation_absolute = dev.absolute;
    r.hamiltonian_deviation_series.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& s = pred.states[k];
        const double d = std::abs(h0 - entry.hamiltonian->value(s.q, s.p));
        r.hamiltonian_deviation_series[k] = dev.absolute ? d : d / std::abs(h0);
        for (std::size_t i = 0; i < s.dim(); ++i)
            r.max_abs_state = std::max({r.max_abs_state, std::abs(s.q[i]), std::abs(s.p[i])});
    }
    if (!std::isfinite(r.prediction_error) || !std::isfinite(r.hamiltonian_deviation))
        r.diverged = true;
    return r;
}

std::vector<OmegaTrace> omega_study(std::span<const double> omegas, const OmegaStudyConfig& cfg)
{
    const SystemEntry& tao = find_system("tao");
    std::vector<OmegaTrace> out;
    for (double omega : omegas) {
        const auto icfg = IntegratorConfig::from_horizon(0.0, cfg.horizon, cfg.dt, omega);
        OmegaTrace trace{omega, rollout(cfg.s0, icfg, *tao.hamiltonian, {0.0, cfg.stride}), {}};
        trace.deviation = auxiliary_deviation(trace.trajectory);
        out.push_back(std::move(trace));
    }
    return out;
}

double median(std::vector<double> values)
{
    if (values.empty())
        throw Error(ErrorKind::InvalidConfig, "median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<AblationPoint> ablate_dt(const TrainingConfig& base, std::span<const double> dts,
                                     std::span<const std::uint64_t> seeds)
{
    std::vector<AblationPoint> out;
    for (double dt : dts) {
        AblationPoint point{dt, base.t_train, {}, 0.0};
        for (std::uint64_t seed : seeds) {
            TrainingConfig cfg = base;
            cfg.dt = dt;
            cfg.seed = seed;
            point.validation_errors.push_back(final_validation_loss(cfg));
        }
        point.median = median(point.validation_errors);
        out.push_back(std::move(point));
    }
    return out;
}

std::vector<AblationPoint> ablate_t_train(const TrainingConfig& base,
                                          std::span<const double> spans,
                                          std::span<const std::uint64_t> seeds)
{
    std::vector<AblationPoint> out;
    for (double t_train : spans) {
        AblationPoint point{base.dt, t_train, {}, 0.0};
        for (std::uint64_t seed : seeds) {
            TrainingConfig cfg = base;
            cfg.t_train = t_train;
            cfg.seed = seed;
            point.validation_errors.push_back(final_validation_loss(cfg));
        }
        point.median = median(point.validation_errors);
        out.push_back(std::move(point));
    }
    return out;
}

}  // namespace nssnn
