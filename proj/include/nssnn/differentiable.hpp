#pragma once

#include <span>
#include <utility>
#include <vector>

#include "nssnn/autodiff.hpp"
#include "nssnn/core.hpp"
#include "nssnn/mlp.hpp"

namespace nssnn {

/// One training example: a state and the observed state T_train later.
struct SamplePair {
    PhaseState initial;
    PhaseState target;
};

/// The unrolled integrator a loss is evaluated through.
struct RolloutSpec {
    double dt = 0.01;
    double omega = kDefaultOmega;
    std::size_t steps = 1;
    Vector weights;  // per-coordinate gradient factors, empty = 1
};

namespace tape {

/// Network parameters recorded as differentiable leaves.
struct Network {
    std::vector<autodiff::Var> weights;  // out x in
    std::vector<autodiff::Var> biases;   // 1 x out

    std::vector<autodiff::Var> all() const;
};

Network record(autodiff::Tape& t, const MlpParameters& theta);

/// H_theta on the rows of inputs (B x 2N); returns B x 1.
autodiff::Var hamiltonian(autodiff::Tape& t, const Network& net, autodiff::Var inputs);

/// (dH/d first slot, dH/d second slot) evaluated row-wise at (a, b), both
/// B x N. The result stays on the tape and can be differentiated again.
std::pair<autodiff::Var, autodiff::Var> slot_gradients(autodiff::Tape& t, const Network& net,
                                                       autodiff::Var a, autodiff::Var b);

struct BatchState {
    autodiff::Var q, p, x, y;  // B x N each
};

BatchState strang_step(autodiff::Tape& t, const Network& net, const BatchState& s,
                       const RolloutSpec& spec);

/// Sum over rows of |q - q_hat|_1 + |p - p_hat|_1 + |x_hat - q_hat|_1 + |y_hat - p_hat|_1.
autodiff::Var nssnn_loss(autodiff::Tape& t, const BatchState& predicted, autodiff::Var q_target,
                         autodiff::Var p_target);

}  // namespace tape

struct LossGradient {
    double loss = 0.0;        // summed over the batch
    MlpParameters gradient;   // d loss / d theta
};

/// Loss summed over the batch after spec.steps unrolled Strang steps from the
/// duplicated initial states, and its exact gradient in theta.
///
/// The batch is cut into fixed chunks evaluated in parallel and reduced in
/// chunk order, so the result is bit-identical for any thread count.
/// Throws DivergedRollout if any intermediate state is non-finite.
LossGradient loss_parameter_gradient(const MlpParameters& theta, std::span<const SamplePair> batch,
                                     const RolloutSpec& spec);

/// d/dtheta of sum(dH/dq) and sum(dH/dp) at (q, p): the mixed second
/// derivative the unrolled training depends on. Returned as (for dq, for dp).
std::pair<MlpParameters, MlpParameters> input_gradient_parameter_jacobian_sums(
    const MlpParameters& theta, std::span<const double> q, std::span<const double> p);

}  // namespace nssnn
