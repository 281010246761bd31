#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nssnn/core.hpp"
#include "nssnn/integrator.hpp"
#include "nssnn/mlp.hpp"
#include "nssnn/rng.hpp"

namespace nssnn::testing {

inline double max_abs(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// Central-difference gradient of a scalar function of a flat vector.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, Vector x, double h)
{
    Vector g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        x[i] = xi + h;
        const double fp = f(x);
        x[i] = xi - h;
        const double fm = f(x);
        x[i] = xi;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

/// ||a - b||_inf / max(||b||_inf, floor)
inline double rel_error(std::span<const double> a, std::span<const double> b, double floor = 1e-12)
{
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
    return diff / std::max(max_abs(b), floor);
}

inline Vector flat(const AugmentedState& s)
{
    Vector v;
    v.reserve(4 * s.dim());
    for (const Vector* part : {&s.q, &s.p, &s.x, &s.y}) v.insert(v.end(), part->begin(), part->end());
    return v;
}

inline AugmentedState unflat(std::span<const double> v)
{
    const std::size_t n = v.size() / 4;
    auto part = [&](std::size_t k) { return Vector(v.begin() + k * n, v.begin() + (k + 1) * n); };
    return {part(0), part(1), part(2), part(3)};
}

inline Vector flat(const Gradient& g)
{
    Vector v = g.dq;
    v.insert(v.end(), g.dp.begin(), g.dp.end());
    return v;
}

/// Central-difference Jacobian of a map on the augmented space, in the
/// (q, p, x, y) flat ordering.
inline Eigen::MatrixXd fd_jacobian(const std::function<AugmentedState(const AugmentedState&)>& map,
                                   const AugmentedState& s, double h)
{
    Vector x = flat(s);
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd J(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double xj = x[j];
        x[j] = xj + h;
        const Vector fp = flat(map(unflat(x)));
        x[j] = xj - h;
        const Vector fm = flat(map(unflat(x)));
        x[j] = xj;
        for (Eigen::Index i = 0; i < n; ++i) J(i, j) = (fp[i] - fm[i]) / (2.0 * h);
    }
    return J;
}

/// Canonical form of the augmented space: q pairs with p and x pairs with y.
inline Eigen::MatrixXd augmented_omega(std::size_t n)
{
    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(4 * N, 4 * N);
    for (Eigen::Index i = 0; i < N; ++i) {
        W(i, N + i) = 1.0;
        W(N + i, i) = -1.0;
        W(2 * N + i, 3 * N + i) = 1.0;
        W(3 * N + i, 2 * N + i) = -1.0;
    }
    return W;
}

inline double symplectic_defect(const Eigen::MatrixXd& J)
{
    const Eigen::MatrixXd W = augmented_omega(static_cast<std::size_t>(J.rows() / 4));
    return (J.transpose() * W * J - W).cwiseAbs().maxCoeff();
}

inline AugmentedState random_augmented(Rng& rng, std::size_t n, double scale)
{
    AugmentedState s;
    for (Vector* part : {&s.q, &s.p, &s.x, &s.y}) {
        part->resize(n);
        for (double& v : *part) v = rng.uniform(-scale, scale);
    }
    return s;
}

inline PhaseState random_phase(Rng& rng, std::size_t n, double scale)
{
    PhaseState s{Vector(n), Vector(n)};
    for (double& v : s.q) v = rng.uniform(-scale, scale);
    for (double& v : s.p) v = rng.uniform(-scale, scale);
    return s;
}

/// Forwards to another provider and counts gradient calls and where they happened.
class CountingProvider final : public HamiltonianProvider {
public:
    explicit CountingProvider(const HamiltonianProvider& inner) : inner_(inner) {}

    std::size_t dimension() const override { return inner_.dimension(); }
    double value(std::span<const double> q, std::span<const double> p) const override
    {
        return inner_.value(q, p);
    }
    void gradient(std::span<const double> q, std::span<const double> p, std::span<double> dq,
                  std::span<double> dp) const override
    {
        ++calls;
        points.push_back(PhaseState{Vector(q.begin(), q.end()), Vector(p.begin(), p.end())});
        inner_.gradient(q, p, dq, dp);
    }

    mutable std::size_t calls = 0;
    mutable std::vector<PhaseState> points;

private:
    const HamiltonianProvider& inner_;
};

/// Provider whose gradient turns NaN once q leaves [-limit, limit].
class BlowupProvider final : public HamiltonianProvider {
public:
    explicit BlowupProvider(double limit) : limit_(limit) {}

    std::size_t dimension() const override { return 1; }
    double value(std::span<const double> q, std::span<const double> p) const override
    {
        return q[0] * q[0] + p[0] * p[0];
    }
    void gradient(std::span<const double> q, std::span<const double> p, std::span<double> dq,
                  std::span<double> dp) const override
    {
        const double bad = std::abs(q[0]) > limit_ ? std::nan("") : 0.0;
        dq[0] = 2.0 * q[0] + bad;
        dp[0] = -1.0 + bad;  // steady drift pushes q outward
        (void)p;
    }

private:
    double limit_;
};

}  // namespace nssnn::testing
