#include "nssnn/vortex.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "nssnn/integrator.hpp"
#include "nssnn/rng.hpp"

namespace nssnn {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double distance_checked(double dx, double dy)
{
    const double r = std::hypot(dx, dy);
    if (!(r > kMinVortexDistance))
        throw Error(ErrorKind::CoincidentParticles,
                    "two vortices closer than " + std::to_string(kMinVortexDistance));
    return r;
}

void check_width(std::span<const double> q, std::span<const double> p, std::size_t n)
{
    if (q.size() != n || p.size() != n)
        throw Error(ErrorKind::DimensionMismatch,
                    "expected " + std::to_string(n) + " vortex coordinates per axis");
}

// Largest-remainder split of total into parts proportional to weights, each at least 1.
std::vector<std::size_t> apportion(std::size_t total, std::span<const double> weights)
{
    const std::size_t n = weights.size();
    std::vector<std::size_t> out(n, 1);
    if (total <= n)
        return out;
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    const std::size_t spare = total - n;
    std::vector<double> remainder(n);
    std::size_t used = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double share = static_cast<double>(spare) * weights[i] / sum;
        const auto whole = static_cast<std::size_t>(std::floor(share));
        out[i] += whole;
        used += whole;
        remainder[i] = share - static_cast<double>(whole);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; used < spare; ++i, ++used)
        ++out[order[i % n]];
    return out;
}

void append(VortexConfiguration& into, const VortexConfiguration& from)
{
    into.x.insert(into.x.end(), from.x.begin(), from.x.end());
    into.y.insert(into.y.end(), from.y.begin(), from.y.end());
    into.strength.insert(into.strength.end(), from.strength.begin(), from.strength.end());
    into.group.insert(into.group.end(), from.group.begin(), from.group.end());
}

}  // namespace

void VortexConfiguration::validate() const
{
    const std::size_t n = x.size();
    if (y.size() != n || strength.size() != n || (!group.empty() && group.size() != n))
        throw Error(ErrorKind::DimensionMismatch, "vortex field lengths differ");
    if (!all_finite(x) || !all_finite(y) || !all_finite(strength))
        throw Error(ErrorKind::NonFiniteEntry, "vortex configuration has a non-finite entry");
    for (std::size_t j = 0; j < n; ++j)
        if (strength[j] == 0.0)
            throw Error(ErrorKind::InvalidConfig, "vortex " + std::to_string(j) + " has zero strength");
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = j + 1; k < n; ++k)
            distance_checked(x[j] - x[k], y[j] - y[k]);
}

double vortex_hamiltonian(const VortexConfiguration& config)
{
    const std::size_t n = config.size();
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
            if (k == j)
                continue;
            const double r = distance_checked(config.x[j] - config.x[k], config.y[j] - config.y[k]);
            sum += config.strength[j] * config.strength[k] * std::log(r);
        }
    return sum / (2.0 * kTwoPi);
}

double AnalyticPairKernel::value(double dx, double dy) const
{
    return std::log(distance_checked(dx, dy)) / kTwoPi;
}

void AnalyticPairKernel::gradients(const Eigen::MatrixXd& rel, Eigen::MatrixXd& grad,
                                   Eigen::VectorXd* values) const
{
    const Eigen::Index n = rel.cols();
    grad.resize(2, n);
    if (values)
        values->resize(n);
    bool coincident = false;

#pragma omp parallel for schedule(static) reduction(|| : coincident)
    for (Eigen::Index i = 0; i < n; ++i) {
        const double dx = rel(0, i);
        const double dy = rel(1, i);
        const double r2 = dx * dx + dy * dy;
        if (!(r2 > kMinVortexDistance * kMinVortexDistance)) {
            coincident = true;
            continue;
        }
        const double s = 1.0 / (kTwoPi * r2);
        grad(0, i) = dx * s;
        grad(1, i) = dy * s;
        if (values)
            (*values)(i) = 0.5 * std::log(r2) / kTwoPi;
    }
    if (coincident)
        throw Error(ErrorKind::CoincidentParticles,
                    "two vortices closer than " + std::to_string(kMinVortexDistance));
}

LearnedPairKernel::LearnedPairKernel(MlpParameters theta) : theta_(std::move(theta))
{
    theta_.validate();
    if (theta_.input_dim() != 2)
        throw Error(ErrorKind::DimensionMismatch, "pair kernel network must take (dx, dy)");
}

double LearnedPairKernel::value(double dx, double dy) const
{
    const double q[1] = {dx};
    const double p[1] = {dy};
    return -0.5 * forward(theta_, q, p);
}

void LearnedPairKernel::gradients(const Eigen::MatrixXd& rel, Eigen::MatrixXd& grad,
                                  Eigen::VectorXd* values) const
{
    input_gradient_batch(theta_, rel, grad, values);
    grad *= -0.5;
    if (values)
        *values *= -0.5;
}

NBodyHamiltonian::NBodyHamiltonian(std::shared_ptr<const PairKernel> kernel, Vector strengths)
    : kernel_(std::move(kernel)), strengths_(std::move(strengths))
{
    if (!kernel_)
        throw Error(ErrorKind::InvalidConfig, "missing pair kernel");
    const std::size_t n = strengths_.size();
    first_.reserve(n * (n - (n > 0 ? 1 : 0)) / 2);
    second_.reserve(first_.capacity());
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = j + 1; k < n; ++k) {
            first_.push_back(static_cast<std::uint32_t>(j));
            second_.push_back(static_cast<std::uint32_t>(k));
        }
}

void NBodyHamiltonian::separations(std::span<const double> q, std::span<const double> p,
                                   Eigen::MatrixXd& rel) const
{
    check_width(q, p, strengths_.size());
    const auto n = static_cast<std::ptrdiff_t>(first_.size());
    rel.resize(2, n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        rel(0, i) = q[first_[u]] - q[second_[u]];
        rel(1, i) = p[first_[u]] - p[second_[u]];
    }
}

double NBodyHamiltonian::value(std::span<const double> q, std::span<const double> p) const
{
    Eigen::MatrixXd rel, grad;
    Eigen::VectorXd h;
    separations(q, p, rel);
    kernel_->gradients(rel, grad, &h);
    double sum = 0.0;
    for (std::size_t i = 0; i < first_.size(); ++i)
        sum += strengths_[first_[i]] * strengths_[second_[i]] * h(static_cast<Eigen::Index>(i));
    return sum;
}

void NBodyHamiltonian::gradient(std::span<const double> q, std::span<const double> p,
                                std::span<double> dq, std::span<double> dp) const
{
    check_width(dq, dp, strengths_.size());
    Eigen::MatrixXd rel, grad;
    separations(q, p, rel);
    kernel_->gradients(rel, grad);
    std::fill(dq.begin(), dq.end(), 0.0);
    std::fill(dp.begin(), dp.end(), 0.0);
    for (std::size_t i = 0; i < first_.size(); ++i) {
        const std::size_t j = first_[i];
        const std::size_t k = second_[i];
        const double w = strengths_[j] * strengths_[k];
        const auto c = static_cast<Eigen::Index>(i);
        const double gx = w * grad(0, c);
        const double gy = w * grad(1, c);
        dq[j] += gx;
        dp[j] += gy;
        dq[k] -= gx;
        dp[k] -= gy;
    }
}

void NBodyHamiltonian::gradient_reference(std::span<const double> q, std::span<const double> p,
                                          std::span<double> dq, std::span<double> dp) const
{
    const std::size_t n = strengths_.size();
    check_width(q, p, n);
    check_width(dq, dp, n);
    std::fill(dq.begin(), dq.end(), 0.0);
    std::fill(dp.begin(), dp.end(), 0.0);
    Eigen::MatrixXd rel(2, 1), grad;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = j + 1; k < n; ++k) {
            rel(0, 0) = q[j] - q[k];
            rel(1, 0) = p[j] - p[k];
            kernel_->gradients(rel, grad);
            const double w = strengths_[j] * strengths_[k];
            const double gx = w * grad(0, 0);
            const double gy = w * grad(1, 0);
            dq[j] += gx;
            dp[j] += gy;
            dq[k] -= gx;
            dp[k] -= gy;
        }
}

std::shared_ptr<const NBodyHamiltonian> assemble_nbody_kernel(
    std::shared_ptr<const PairKernel> kernel, const VortexConfiguration& config)
{
    config.validate();
    return std::make_shared<const NBodyHamiltonian>(std::move(kernel), config.strength);
}

Vector vortex_weights(const Vector& strengths)
{
    Vector w(strengths.size());
    for (std::size_t j = 0; j < strengths.size(); ++j) {
        if (strengths[j] == 0.0)
            throw Error(ErrorKind::InvalidConfig, "vortex " + std::to_string(j) + " has zero strength");
        w[j] = -1.0 / strengths[j];
    }
    return w;
}

VortexState VortexState::from_configuration(const VortexConfiguration& config)
{
    config.validate();
    return {AugmentedState::from_phase(config.phase()), config.strength, config.group};
}

VortexConfiguration VortexState::configuration() const
{
    return {state.q, state.p, strength, group};
}

void vortex_step(VortexState& s, double dt, double omega, const NBodyHamiltonian& h)
{
    if (s.strength.size() != h.dimension())
        throw Error(ErrorKind::DimensionMismatch, "strengths do not match the assembled kernel");
    const Vector weights = vortex_weights(s.strength);
    AugmentedIntegrator(h, omega, weights).step(s.state, dt);
}

VortexConfiguration vortex_step(const VortexConfiguration& config, double dt, double omega,
                                const NBodyHamiltonian& h)
{
    VortexState s = VortexState::from_configuration(config);
    vortex_step(s, dt, omega, h);
    return s.configuration();
}

VortexRollout nbody_rollout(const VortexConfiguration& config, const NBodyHamiltonian& h,
                            const NBodyOptions& opts)
{
    const auto cfg = IntegratorConfig::from_horizon(0.0, opts.horizon, opts.dt, opts.omega);
    VortexState s = VortexState::from_configuration(config);
    if (s.strength.size() != h.dimension())
        throw Error(ErrorKind::DimensionMismatch, "strengths do not match the assembled kernel");
    const Vector weights = vortex_weights(s.strength);
    AugmentedIntegrator integrator(h, cfg.omega, weights);
    const std::size_t stride = std::max<std::size_t>(opts.frame_stride, 1);

    VortexRollout run;
    run.times.push_back(0.0);
    run.frames.push_back(config);
    for (std::size_t i = 1; i <= cfg.steps; ++i) {
        try {
            integrator.step(s.state, cfg.dt);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::CoincidentParticles && e.kind() != ErrorKind::NonFiniteEntry)
                throw;
            run.diverged = true;
            break;
        }
        if (!all_finite(s.state.q) || !all_finite(s.state.p)) {
            run.diverged = true;
            break;
        }
        if (i % stride == 0 || i == cfg.steps) {
            run.times.push_back(static_cast<double>(i) * cfg.dt);
            run.frames.push_back(s.configuration());
        }
    }
    return run;
}

double taylor_vorticity(double r, double core_radius)
{
    const double u = r * r / (2.0 * core_radius * core_radius);
    return (1.0 - u) * std::exp(-u);
}

double taylor_annulus_circulation(double r0, double r1, double core_radius)
{
    // d/dr [r^2 exp(-r^2 / 2a^2)] = 2r (1 - r^2 / 2a^2) exp(-r^2 / 2a^2)
    const auto f = [&](double r) { return r * r * std::exp(-r * r / (2.0 * core_radius * core_radius)); };
    return std::numbers::pi * (f(r1) - f(r0));
}

VortexConfiguration taylor_vortex(std::size_t n_particles, double cx, double cy,
                                  const TaylorGeometry& geometry, std::uint64_t seed, int group)
{
    if (n_particles < 1)
        throw Error(ErrorKind::InvalidConfig, "a Taylor vortex needs at least one particle");
    if (!(geometry.core_radius > 0.0) || !(geometry.cutoff > 0.0))
        throw Error(ErrorKind::InvalidConfig, "core radius and cutoff must be positive");

    const auto rings = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                    std::floor(std::sqrt(static_cast<double>(n_particles)))));
    const double outer = geometry.cutoff * geometry.core_radius;
    const double width = outer / static_cast<double>(rings);
    std::vector<double> area(rings);
    for (std::size_t i = 0; i < rings; ++i)
        area[i] = static_cast<double>(2 * i + 1);
    const auto counts = apportion(n_particles, area);

    Rng rng(seed, "taylor", static_cast<std::uint64_t>(group));
    VortexConfiguration out;
    for (std::size_t i = 0; i < rings; ++i) {
        const double r0 = width * static_cast<double>(i);
        const double r1 = r0 + width;
        const double circulation =
            geometry.peak_vorticity * taylor_annulus_circulation(r0, r1, geometry.core_radius);
        const std::size_t m = counts[i];
        const double offset = rng.uniform(0.0, kTwoPi);
        // The innermost ring keeps its single particle at the centre.
        const double radius = (i == 0 && m == 1) ? 0.0 : 0.5 * (r0 + r1);
        for (std::size_t k = 0; k < m; ++k) {
            const double angle = offset + kTwoPi * static_cast<double>(k) / static_cast<double>(m);
            out.x.push_back(cx + radius * std::cos(angle));
            out.y.push_back(cy + radius * std::sin(angle));
            out.strength.push_back(circulation / static_cast<double>(m));
            out.group.push_back(group);
        }
    }
    return out;
}

VortexConfiguration taylor_vortex_sample(std::size_t n_particles, const TaylorGeometry& geometry,
                                         std::uint64_t seed)
{
    if (n_particles < 4)
        throw Error(ErrorKind::InvalidConfig, "Taylor sample needs at least 4 particles");
    const double half = 0.5 * geometry.separation;
    const std::size_t left = n_particles / 2;
    VortexConfiguration out = taylor_vortex(left, -half, 0.0, geometry, seed, 0);
    append(out, taylor_vortex(n_particles - left, half, 0.0, geometry, seed, 1));
    out.validate();
    return out;
}

VortexConfiguration leapfrog_sample(std::size_t n_particles, const LeapfrogGeometry& geometry,
                                    std::uint64_t seed)
{
    if (n_particles < 4 || n_particles % 4 != 0)
        throw Error(ErrorKind::InvalidConfig, "leapfrog sample needs a positive multiple of 4 particles");
    const std::size_t per = n_particles / 4;
    const double centres[4] = {geometry.outer_half_width, -geometry.outer_half_width,
                               geometry.inner_half_width, -geometry.inner_half_width};
    const double signs[4] = {1.0, -1.0, 1.0, -1.0};

    VortexConfiguration out;
    for (int c = 0; c < 4; ++c) {
        Rng rng(seed, "leapfrog", static_cast<std::uint64_t>(c));
        for (std::size_t k = 0; k < per; ++k) {
            double dx = 0.0;
            double dy = 0.0;
            if (per > 1) {
                // Uniform over a disc of radius cluster_radius.
                const double r = geometry.cluster_radius * std::sqrt(rng.uniform());
                const double a = rng.uniform(0.0, kTwoPi);
                dx = r * std::cos(a);
                dy = r * std::sin(a);
            }
            out.x.push_back(dx);
            out.y.push_back(centres[c] + dy);
            out.strength.push_back(signs[c] * geometry.strength / static_cast<double>(per));
            out.group.push_back(c);
        }
    }
    out.validate();
    return out;
}

std::array<double, 2> group_centroid(const VortexConfiguration& config, int group)
{
    double w = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t j = 0; j < config.size(); ++j) {
        if (config.group.empty() || config.group[j] != group || config.strength[j] <= 0.0)
            continue;
        w += config.strength[j];
        cx += config.strength[j] * config.x[j];
        cy += config.strength[j] * config.y[j];
    }
    if (w == 0.0)
        throw Error(ErrorKind::InvalidConfig, "group " + std::to_string(group) + " has no positive circulation");
    return {cx / w, cy / w};
}

std::array<double, 2> group_mean(const VortexConfiguration& config, int group)
{
    double n = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t j = 0; j < config.size(); ++j) {
        if (config.group.empty() || config.group[j] != group)
            continue;
        n += 1.0;
        cx += config.x[j];
        cy += config.y[j];
    }
    if (n == 0.0)
        throw Error(ErrorKind::InvalidConfig, "group " + std::to_string(group) + " is empty");
    return {cx / n, cy / n};
}

Vector lobe_separation(const VortexRollout& run)
{
    Vector out;
    out.reserve(run.frames.size());
    for (const auto& f : run.frames) {
        const auto a = group_centroid(f, 0);
        const auto b = group_centroid(f, 1);
        out.push_back(std::hypot(a[0] - b[0], a[1] - b[1]));
    }
    return out;
}

Vector leapfrog_offset(const VortexRollout& run)
{
    Vector out;
    out.reserve(run.frames.size());
    for (const auto& f : run.frames) {
        const double outer = 0.5 * (group_mean(f, 0)[0] + group_mean(f, 1)[0]);
        const double inner = 0.5 * (group_mean(f, 2)[0] + group_mean(f, 3)[0]);
        out.push_back(inner - outer);
    }
    return out;
}

std::size_t count_sign_changes(std::span<const double> series, double tolerance)
{
    std::size_t changes = 0;
    int last = 0;
    for (double v : series) {
        if (std::abs(v) <= tolerance)
            continue;
        const int sign = v > 0.0 ? 1 : -1;
        if (last != 0 && sign != last)
            ++changes;
        last = sign;
    }
    return changes;
}

std::array<double, 2> linear_impulse(const VortexConfiguration& config)
{
    double ix = 0.0, iy = 0.0;
    for (std::size_t j = 0; j < config.size(); ++j) {
        ix += config.strength[j] * config.x[j];
        iy += config.strength[j] * config.y[j];
    }
    return {ix, iy};
}

}  // namespace nssnn
