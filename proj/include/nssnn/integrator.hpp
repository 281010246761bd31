#pragma once

#include <span>

#include "nssnn/core.hpp"

namespace nssnn {

/// Per-coordinate factors on the gradient terms of phi1/phi2. Empty means 1.
/// Non-canonical flows such as point vortices (dx/dt = -(1/G) dH/dy) use -1/G.
using CoordinateWeights = std::span<const double>;

/// Explicit second-order integrator in the augmented phase space (q, p, x, y).
///
/// Each Strang step performs exactly four gradient evaluations: two at (q, y)
/// inside phi1 and two at (x, p) inside phi2. phi3 is a closed-form rotation of
/// the difference (q - x, p - y) and never touches the Hamiltonian.
class AugmentedIntegrator {
public:
    AugmentedIntegrator(const HamiltonianProvider& h, double omega, CoordinateWeights weights = {});

    /// p -= delta * dH/dq(q, y);  x += delta * dH/dp(q, y)
    void phi1(AugmentedState& s, double delta);
    /// q += delta * dH/dp(x, p);  y -= delta * dH/dq(x, p)
    void phi2(AugmentedState& s, double delta);
    /// Rotates (q - x, p - y) by 2*omega*delta about the midpoint (q + x, p + y) / 2.
    void phi3(AugmentedState& s, double delta) const;
    /// phi1(dt/2) o phi2(dt/2) o phi3(dt) o phi2(dt/2) o phi1(dt/2), rightmost first.
    void step(AugmentedState& s, double dt);

    double omega() const noexcept { return omega_; }

private:
    void check_state(const AugmentedState& s) const;

    const HamiltonianProvider& h_;
    double omega_;
    CoordinateWeights weights_;
    Vector dq_;
    Vector dp_;
};

AugmentedState phi1(const AugmentedState& s, double delta, const HamiltonianProvider& h,
                    CoordinateWeights weights = {});
AugmentedState phi2(const AugmentedState& s, double delta, const HamiltonianProvider& h,
                    CoordinateWeights weights = {});
AugmentedState phi3(const AugmentedState& s, double delta, double omega);
AugmentedState strang_step(const AugmentedState& s, double dt, double omega,
                           const HamiltonianProvider& h, CoordinateWeights weights = {});

struct RolloutOptions {
    double t0 = 0.0;
    std::size_t stride = 1;  // record every stride-th step (the final step is always kept)
    CoordinateWeights weights = {};
};

/// Duplicates s0 onto the diagonal and advances cfg.steps Strang steps.
/// Stops at the first non-finite state or failed gradient, returning the
/// recorded prefix with diverged = true.
Trajectory rollout(const PhaseState& s0, const IntegratorConfig& cfg,
                   const HamiltonianProvider& h, const RolloutOptions& opts = {});
Trajectory rollout(const AugmentedState& s0, const IntegratorConfig& cfg,
                   const HamiltonianProvider& h, const RolloutOptions& opts = {});

/// ||(q, p) - (x, y)||_2
double auxiliary_deviation(const AugmentedState& s);
Vector auxiliary_deviation(const Trajectory& traj);

}  // namespace nssnn
