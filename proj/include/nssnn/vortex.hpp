#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nssnn/core.hpp"
#include "nssnn/mlp.hpp"

namespace nssnn {

inline constexpr double kMinVortexDistance = 1e-9;

/// Point vortices in the plane. group tags the cluster or lobe a particle was
/// seeded in (used only for diagnostics).
struct VortexConfiguration {
    Vector x;
    Vector y;
    Vector strength;
    std::vector<int> group;

    std::size_t size() const noexcept { return x.size(); }
    /// Throws DimensionMismatch, NonFiniteEntry, InvalidConfig (zero strength)
    /// or CoincidentParticles.
    void validate() const;
    PhaseState phase() const { return {x, y}; }
};

/// (1 / 4pi) sum_{j != k} G_j G_k log |X_j - X_k|. Throws CoincidentParticles.
double vortex_hamiltonian(const VortexConfiguration& config);

/// Unit-strength interaction h(dx, dy) of one vortex pair, with the sign and
/// normalization under which H = sum_{j<k} G_j G_k h(X_j - X_k).
class PairKernel {
public:
    virtual ~PairKernel() = default;

    virtual double value(double dx, double dy) const = 0;
    /// rel is 2 x P (column = separation of one pair); writes dh/d(dx, dy)
    /// into grad (2 x P) and, if given, h into values.
    virtual void gradients(const Eigen::MatrixXd& rel, Eigen::MatrixXd& grad,
                           Eigen::VectorXd* values = nullptr) const = 0;
};

/// h = log(r) / (2 pi).
class AnalyticPairKernel final : public PairKernel {
public:
    double value(double dx, double dy) const override;
    void gradients(const Eigen::MatrixXd& rel, Eigen::MatrixXd& grad,
                   Eigen::VectorXd* values = nullptr) const override;
};

/// h = -H_theta(dx, dy) / 2, where H_theta was trained on the relative motion
/// of two unit vortices (whose canonical Hamiltonian is -2h).
class LearnedPairKernel final : public PairKernel {
public:
    explicit LearnedPairKernel(MlpParameters theta);

    double value(double dx, double dy) const override;
    void gradients(const Eigen::MatrixXd& rel, Eigen::MatrixXd& grad,
                   Eigen::VectorXd* values = nullptr) const override;

    const MlpParameters& parameters() const noexcept { return theta_; }

private:
    MlpParameters theta_;
};

/// Pairwise composition of a kernel over a fixed set of strengths. Coordinates
/// are q = (x_1..x_N), p = (y_1..y_N).
///
/// Pair terms are evaluated in parallel and then scattered onto the particles
/// in a fixed pair order, so results are bit-identical for any thread count.
class NBodyHamiltonian final : public HamiltonianProvider {
public:
    NBodyHamiltonian(std::shared_ptr<const PairKernel> kernel, Vector strengths);

    std::size_t dimension() const override { return strengths_.size(); }
    double value(std::span<const double> q, std::span<const double> p) const override;
    void gradient(std::span<const double> q, std::span<const double> p, std::span<double> dq,
                  std::span<double> dp) const override;

    /// Plain double loop over j < k calling the kernel one pair at a time.
    void gradient_reference(std::span<const double> q, std::span<const double> p,
                            std::span<double> dq, std::span<double> dp) const;

    const Vector& strengths() const noexcept { return strengths_; }
    std::size_t pair_count() const noexcept { return first_.size(); }

private:
    void separations(std::span<const double> q, std::span<const double> p,
                     Eigen::MatrixXd& rel) const;

    std::shared_ptr<const PairKernel> kernel_;
    Vector strengths_;
    std::vector<std::uint32_t> first_;
    std::vector<std::uint32_t> second_;
};

std::shared_ptr<const NBodyHamiltonian> assemble_nbody_kernel(
    std::shared_ptr<const PairKernel> kernel, const VortexConfiguration& config);

/// -1 / G_j per particle, the factor turning the canonical phi-map updates
/// into G dx/dt = -dH/dy, G dy/dt = dH/dx.
Vector vortex_weights(const Vector& strengths);

/// Augmented state of a vortex run: positions plus their auxiliary copies.
struct VortexState {
    AugmentedState state;
    Vector strength;
    std::vector<int> group;

    static VortexState from_configuration(const VortexConfiguration& config);
    VortexConfiguration configuration() const;
};

/// One Strang step. Throws CoincidentParticles if two vortices meet.
void vortex_step(VortexState& s, double dt, double omega, const NBodyHamiltonian& h);
VortexConfiguration vortex_step(const VortexConfiguration& config, double dt, double omega,
                                const NBodyHamiltonian& h);

struct VortexRollout {
    Vector times;
    std::vector<VortexConfiguration> frames;
    bool diverged = false;
};

struct NBodyOptions {
    double dt = 0.01;
    double omega = kDefaultOmega;
    double horizon = 0.0;
    std::size_t frame_stride = 1;
};

/// Repeated vortex_step from config, keeping every frame_stride-th frame and
/// the last one. Stops at the first failure with diverged = true.
VortexRollout nbody_rollout(const VortexConfiguration& config, const NBodyHamiltonian& h,
                            const NBodyOptions& opts);

/// vorticity(r) = (1 - r^2 / 2a^2) exp(-r^2 / 2a^2), which integrates to zero.
double taylor_vorticity(double r, double core_radius);
/// Exact integral of taylor_vorticity over the annulus r0 <= r <= r1.
double taylor_annulus_circulation(double r0, double r1, double core_radius);

struct TaylorGeometry {
    double core_radius = 0.75;
    double separation = 2.0;  // between the two lobe centres
    double cutoff = 4.0;      // discretized out to cutoff * core_radius
    double peak_vorticity = 3.0;
};

/// One Taylor vortex centred at (cx, cy) on a polar grid of n particles: rings
/// of equal width with particle counts proportional to ring area, ring offsets
/// drawn from the seed, and each particle carrying its share of the ring's
/// exact circulation.
VortexConfiguration taylor_vortex(std::size_t n_particles, double cx, double cy,
                                  const TaylorGeometry& geometry, std::uint64_t seed, int group = 0);
/// Two equal Taylor vortices side by side on the x axis (groups 0 and 1).
VortexConfiguration taylor_vortex_sample(std::size_t n_particles, const TaylorGeometry& geometry,
                                         std::uint64_t seed);

struct LeapfrogGeometry {
    double outer_half_width = 1.0;
    double inner_half_width = 0.5;
    double strength = 1.0;
    double cluster_radius = 0.05;  // spread of each cluster when it has several particles
};

/// Two coaxial vortex pairs, each a +G cluster above and a -G cluster below the
/// x axis, both centred at x = 0. Groups: 0 outer top, 1 outer bottom, 2 inner
/// top, 3 inner bottom. n_particles must be a multiple of 4.
VortexConfiguration leapfrog_sample(std::size_t n_particles, const LeapfrogGeometry& geometry,
                                    std::uint64_t seed);

/// Positive-circulation weighted centroid of the particles in one group.
std::array<double, 2> group_centroid(const VortexConfiguration& config, int group);
/// Mean position of a group.
std::array<double, 2> group_mean(const VortexConfiguration& config, int group);

/// Distance between the centroids of groups 0 and 1 in every frame.
Vector lobe_separation(const VortexRollout& run);

/// Axial offset of the inner pair's centre from the outer pair's centre per
/// frame, and the number of sign changes after the first nonzero offset.
Vector leapfrog_offset(const VortexRollout& run);
std::size_t count_sign_changes(std::span<const double> series, double tolerance = 1e-12);

/// sum G_j x_j and sum G_j y_j.
std::array<double, 2> linear_impulse(const VortexConfiguration& config);

}  // namespace nssnn
