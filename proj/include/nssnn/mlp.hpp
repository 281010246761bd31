#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nssnn/core.hpp"

namespace nssnn {

struct DenseLayer {
    Eigen::MatrixXd weights;  // out x in
    Eigen::VectorXd bias;     // out
};

/// Weights of the scalar surrogate H_theta: a perceptron with logistic
/// sigmoid after every layer except the last, which is linear with width 1.
struct MlpParameters {
    std::vector<DenseLayer> layers;

    std::size_t input_dim() const;
    std::vector<std::size_t> layer_sizes() const;
    std::size_t parameter_count() const;

    /// Layer by layer: weights row-major, then bias.
    Eigen::VectorXd flatten() const;
    void assign_flat(const Eigen::VectorXd& flat);
    MlpParameters zeros_like() const;

    /// Throws DimensionMismatch if shapes do not chain down to a scalar,
    /// NonFiniteEntry on NaN/Inf.
    void validate() const;
};

inline constexpr std::size_t kHiddenWidth = 64;
inline constexpr std::size_t kLinearLayers = 6;

/// {2N, 64, 64, 64, 64, 64, 1}
std::vector<std::size_t> default_layer_sizes(std::size_t phase_dim);

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
MlpParameters init_xavier(std::span<const std::size_t> layer_sizes, std::uint64_t seed);

double forward(const MlpParameters& theta, std::span<const double> q, std::span<const double> p);
Gradient input_gradient(const MlpParameters& theta, std::span<const double> q,
                        std::span<const double> p);

/// Batched evaluation over the columns of inputs (in x B, column b = (q, p) of
/// sample b). Writes dH/d(input) into grads (in x B) and, if given, H into
/// values (B). Columns are processed in fixed blocks spread over OpenMP
/// threads; results do not depend on the thread count.
void input_gradient_batch(const MlpParameters& theta, const Eigen::MatrixXd& inputs,
                          Eigen::MatrixXd& grads, Eigen::VectorXd* values = nullptr);

/// Plain per-sample loops, no BLAS-style kernels. Kept as the reference the
/// batched kernel is tested against.
void input_gradient_reference(const MlpParameters& theta, const Eigen::MatrixXd& inputs,
                              Eigen::MatrixXd& grads, Eigen::VectorXd* values = nullptr);

class MlpHamiltonian final : public HamiltonianProvider {
public:
    explicit MlpHamiltonian(MlpParameters theta);

    std::size_t dimension() const override { return dim_; }
    double value(std::span<const double> q, std::span<const double> p) const override;
    void gradient(std::span<const double> q, std::span<const double> p, std::span<double> dq,
                  std::span<double> dp) const override;

    const MlpParameters& parameters() const noexcept { return theta_; }

private:
    MlpParameters theta_;
    std::size_t dim_;
};

}  // namespace nssnn
