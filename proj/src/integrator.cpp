#include "nssnn/integrator.hpp"

#include <cmath>

namespace nssnn {

namespace {

void rotate_difference(AugmentedState& s, double angle)
{
    const double c = std::cos(angle);
    const double sn = std::sin(angle);
    for (std::size_t i = 0; i < s.q.size(); ++i) {
        const double uq = s.q[i] + s.x[i];
        const double up = s.p[i] + s.y[i];
        const double vq = s.q[i] - s.x[i];
        const double vp = s.p[i] - s.y[i];
        const double rq = c * vq + sn * vp;
        const double rp = -sn * vq + c * vp;
        s.q[i] = 0.5 * (uq + rq);
        s.p[i] = 0.5 * (up + rp);
        s.x[i] = 0.5 * (uq - rq);
        s.y[i] = 0.5 * (up - rp);
    }
}

}  // namespace

AugmentedIntegrator::AugmentedIntegrator(const HamiltonianProvider& h, double omega,
                                         CoordinateWeights weights)
    : h_(h), omega_(omega), weights_(weights), dq_(h.dimension()), dp_(h.dimension())
{
    if (!weights_.empty() && weights_.size() != h.dimension())
        throw Error(ErrorKind::DimensionMismatch, "coordinate weights width");
}

void AugmentedIntegrator::check_state(const AugmentedState& s) const
{
    const auto n = h_.dimension();
    if (s.q.size() != n || s.p.size() != n || s.x.size() != n || s.y.size() != n)
        throw Error(ErrorKind::DimensionMismatch,
                    "state width does not match Hamiltonian dimension " + std::to_string(n));
}

void AugmentedIntegrator::phi1(AugmentedState& s, double delta)
{
    check_state(s);
    h_.gradient(s.q, s.y, dq_, dp_);
    if (!all_finite(dq_) || !all_finite(dp_))
        throw Error(ErrorKind::NonFiniteEntry, "gradient at (q, y) is not finite");
    const auto n = dq_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weights_.empty() ? delta : delta * weights_[i];
        s.p[i] -= w * dq_[i];
        s.x[i] += w * dp_[i];
    }
}

void AugmentedIntegrator::phi2(AugmentedState& s, double delta)
{
    check_state(s);
    h_.gradient(s.x, s.p, dq_, dp_);
    if (!all_finite(dq_) || !all_finite(dp_))
        throw Error(ErrorKind::NonFiniteEntry, "gradient at (x, p) is not finite");
    const auto n = dq_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weights_.empty() ? delta : delta * weights_[i];
        s.q[i] += w * dp_[i];
        s.y[i] -= w * dq_[i];
    }
}

void AugmentedIntegrator::phi3(AugmentedState& s, double delta) const
{
    check_state(s);
    rotate_difference(s, 2.0 * omega_ * delta);
}

void AugmentedIntegrator::step(AugmentedState& s, double dt)
{
    const double half = 0.5 * dt;
    phi1(s, half);
    phi2(s, half);
    phi3(s, dt);
    phi2(s, half);
    phi1(s, half);
}

AugmentedState phi1(const AugmentedState& s, double delta, const HamiltonianProvider& h,
                    CoordinateWeights weights)
{
    AugmentedState out = s;
    AugmentedIntegrator(h, 0.0, weights).phi1(out, delta);
    return out;
}

AugmentedState phi2(const AugmentedState& s, double delta, const HamiltonianProvider& h,
                    CoordinateWeights weights)
{
    AugmentedState out = s;
    AugmentedIntegrator(h, 0.0, weights).phi2(out, delta);
    return out;
}

AugmentedState phi3(const AugmentedState& s, double delta, double omega)
{
    AugmentedState out = s;
    rotate_difference(out, 2.0 * omega * delta);
    return out;
}

AugmentedState strang_step(const AugmentedState& s, double dt, double omega,
                           const HamiltonianProvider& h, CoordinateWeights weights)
{
    AugmentedState out = s;
    AugmentedIntegrator(h, omega, weights).step(out, dt);
    return out;
}

Trajectory rollout(const PhaseState& s0, const IntegratorConfig& cfg,
                   const HamiltonianProvider& h, const RolloutOptions& opts)
{
    if (auto err = validate_state(s0))
        throw *err;
    return rollout(AugmentedState::from_phase(s0), cfg, h, opts);
}

Trajectory rollout(const AugmentedState& s0, const IntegratorConfig& cfg,
                   const HamiltonianProvider& h, const RolloutOptions& opts)
{
    cfg.validate();
    if (auto err = validate_state(s0))
        throw *err;
    const std::size_t stride = opts.stride == 0 ? 1 : opts.stride;

    Trajectory traj;
    traj.times.reserve(cfg.steps / stride + 2);
    traj.states.reserve(cfg.steps / stride + 2);
    traj.times.push_back(opts.t0);
    traj.states.push_back(s0);

    AugmentedIntegrator integrator(h, cfg.omega, opts.weights);
    AugmentedState s = s0;
    for (std::size_t i = 1; i <= cfg.steps; ++i) {
        try {
            integrator.step(s, cfg.dt);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NonFiniteEntry && e.kind() != ErrorKind::CoincidentParticles)
                throw;
            traj.diverged = true;
            break;
        }
        if (!all_finite(s.q) || !all_finite(s.p) || !all_finite(s.x) || !all_finite(s.y)) {
            traj.diverged = true;
            break;
        }
        if (i % stride == 0 || i == cfg.steps) {
            traj.times.push_back(opts.t0 + static_cast<double>(i) * cfg.dt);
            traj.states.push_back(s);
        }
    }
    return traj;
}

double auxiliary_deviation(const AugmentedState& s)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < s.q.size(); ++i) {
        const double a = s.q[i] - s.x[i];
        const double b = s.p[i] - s.y[i];
        sum += a * a + b * b;
    }
    return std::sqrt(sum);
}

Vector auxiliary_deviation(const Trajectory& traj)
{
    Vector eps(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i)
        eps[i] = auxiliary_deviation(traj.states[i]);
    return eps;
}

}  // namespace nssnn
