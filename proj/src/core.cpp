#include "nssnn/core.hpp"

#include <cmath>

namespace nssnn {

std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonFiniteEntry: return "NonFiniteEntry";
    case ErrorKind::DivergedRollout: return "DivergedRollout";
    case ErrorKind::UnknownSystem: return "UnknownSystem";
    case ErrorKind::CoincidentParticles: return "CoincidentParticles";
    case ErrorKind::MisalignedTrajectories: return "MisalignedTrajectories";
    case ErrorKind::ZeroTruthNorm: return "ZeroTruthNorm";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind)
{
}

AugmentedState AugmentedState::from_phase(const PhaseState& s)
{
    return {s.q, s.p, s.q, s.p};
}

bool all_finite(std::span<const double> v) noexcept
{
    for (double e : v)
        if (!std::isfinite(e))
            return false;
    return true;
}

std::optional<Error> validate_state(const PhaseState& s)
{
    if (s.q.empty() || s.q.size() != s.p.size())
        return Error(ErrorKind::DimensionMismatch,
                     "q has " + std::to_string(s.q.size()) + " entries, p has " +
                         std::to_string(s.p.size()));
    if (!all_finite(s.q) || !all_finite(s.p))
        return Error(ErrorKind::NonFiniteEntry, "phase state has a non-finite entry");
    return std::nullopt;
}

std::optional<Error> validate_state(const AugmentedState& s)
{
    const auto n = s.q.size();
    if (n == 0 || s.p.size() != n || s.x.size() != n || s.y.size() != n)
        return Error(ErrorKind::DimensionMismatch, "augmented state blocks differ in length");
    if (!all_finite(s.q) || !all_finite(s.p) || !all_finite(s.x) || !all_finite(s.y))
        return Error(ErrorKind::NonFiniteEntry, "augmented state has a non-finite entry");
    return std::nullopt;
}

Gradient gradient_of(const HamiltonianProvider& h, std::span<const double> q,
                     std::span<const double> p)
{
    Gradient g{Vector(q.size()), Vector(p.size())};
    h.gradient(q, p, g.dq, g.dp);
    return g;
}

IntegratorConfig IntegratorConfig::from_horizon(double t0, double t, double dt, double omega)
{
    IntegratorConfig cfg{dt, omega, 0};
    cfg.validate();
    if (t < t0)
        throw Error(ErrorKind::InvalidConfig, "horizon end precedes start");
    // A relative slack of 1e-12 keeps e.g. 10 / 1e-3 from flooring to 9999.
    const double ratio = (t - t0) / dt;
    cfg.steps = static_cast<std::size_t>(std::floor(ratio * (1.0 + 1e-12)));
    return cfg;
}

void IntegratorConfig::validate() const
{
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw Error(ErrorKind::InvalidConfig, "dt must be positive and finite");
    if (!(omega >= 0.0) || !std::isfinite(omega))
        throw Error(ErrorKind::InvalidConfig, "omega must be non-negative and finite");
}

std::optional<Error> validate_trajectory(const Trajectory& traj, double dt)
{
    if (traj.times.size() != traj.states.size())
        return Error(ErrorKind::DimensionMismatch, "times and states differ in length");
    const auto n = traj.dim();
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (traj.states[i].dim() != n)
            return Error(ErrorKind::DimensionMismatch, "state dimension changes along trajectory");
        if (i > 0) {
            const double h = traj.times[i] - traj.times[i - 1];
            if (!(h > 0.0))
                return Error(ErrorKind::MisalignedTrajectories, "times not strictly increasing");
            if (std::abs(h - dt) > 1e-12)
                return Error(ErrorKind::MisalignedTrajectories, "non-uniform time spacing");
        }
    }
    return std::nullopt;
}

}  // namespace nssnn
