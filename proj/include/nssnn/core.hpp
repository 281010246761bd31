#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nssnn {

using Vector = std::vector<double>;

enum class ErrorKind {
    DimensionMismatch,
    NonFiniteEntry,
    DivergedRollout,
    UnknownSystem,
    CoincidentParticles,
    MisalignedTrajectories,
    ZeroTruthNorm,
    InvalidConfig,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Canonical coordinates (q, p), each of length N.
struct PhaseState {
    Vector q;
    Vector p;

    std::size_t dim() const noexcept { return q.size(); }
};

/// Extended coordinates (q, p, x, y) where (x, y) is the auxiliary copy of (q, p).
struct AugmentedState {
    Vector q;
    Vector p;
    Vector x;
    Vector y;

    /// Duplicates a phase state onto the diagonal x = q, y = p.
    static AugmentedState from_phase(const PhaseState& s);

    PhaseState phase() const { return {q, p}; }
    std::size_t dim() const noexcept { return q.size(); }
};

std::optional<Error> validate_state(const PhaseState& s);
std::optional<Error> validate_state(const AugmentedState& s);

bool all_finite(std::span<const double> v) noexcept;

/// Black-box Hamiltonian H(q, p) with its gradient.
///
/// Implementations must be safe to call concurrently from several threads.
class HamiltonianProvider {
public:
    virtual ~HamiltonianProvider() = default;

    virtual std::size_t dimension() const = 0;
    virtual double value(std::span<const double> q, std::span<const double> p) const = 0;
    /// Writes dH/dq into dq and dH/dp into dp.
    virtual void gradient(std::span<const double> q, std::span<const double> p,
                          std::span<double> dq, std::span<double> dp) const = 0;
};

struct Gradient {
    Vector dq;
    Vector dp;
};

Gradient gradient_of(const HamiltonianProvider& h, std::span<const double> q,
                     std::span<const double> p);

inline constexpr double kDefaultOmega = 2000.0;

struct IntegratorConfig {
    double dt = 1e-3;
    double omega = kDefaultOmega;
    std::size_t steps = 0;

    /// steps = floor((t - t0) / dt).
    static IntegratorConfig from_horizon(double t0, double t, double dt,
                                         double omega = kDefaultOmega);
    void validate() const;
};

/// Time-stamped augmented states of one rollout.
struct Trajectory {
    Vector times;
    std::vector<AugmentedState> states;
    bool diverged = false;

    std::size_t size() const noexcept { return states.size(); }
    std::size_t dim() const noexcept { return states.empty() ? 0 : states.front().dim(); }
};

/// Checks that times are strictly increasing with uniform spacing dt.
std::optional<Error> validate_trajectory(const Trajectory& traj, double dt);

}  // namespace nssnn
