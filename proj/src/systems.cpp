#include "nssnn/systems.hpp"

#include <cmath>
#include <numbers>

namespace nssnn {

namespace {

void require_dim(std::span<const double> q, std::span<const double> p, std::size_t n,
                 const char* name)
{
    if (q.size() != n || p.size() != n)
        throw Error(ErrorKind::DimensionMismatch,
                    std::string(name) + " expects N = " + std::to_string(n));
}

using ValueFn = double (*)(std::span<const double>, std::span<const double>);
using GradFn = void (*)(std::span<const double>, std::span<const double>, std::span<double>,
                        std::span<double>);

class ClosedFormSystem final : public HamiltonianProvider {
public:
    ClosedFormSystem(std::size_t n, ValueFn value, GradFn grad)
        : n_(n), value_(value), grad_(grad)
    {
    }

    std::size_t dimension() const override { return n_; }

    double value(std::span<const double> q, std::span<const double> p) const override
    {
        return value_(q, p);
    }

    void gradient(std::span<const double> q, std::span<const double> p, std::span<double> dq,
                  std::span<double> dp) const override
    {
        if (q.size() != n_ || p.size() != n_ || dq.size() != n_ || dp.size() != n_)
            throw Error(ErrorKind::DimensionMismatch, "gradient buffer width");
        grad_(q, p, dq, dp);
    }

private:
    std::size_t n_;
    ValueFn value_;
    GradFn grad_;
};

void pendulum_grad(std::span<const double> q, std::span<const double> p, std::span<double> dq,
                   std::span<double> dp)
{
    dq[0] = 3.0 * std::sin(q[0]);
    dp[0] = 2.0 * p[0];
}

void lotka_volterra_grad(std::span<const double> q, std::span<const double> p,
                         std::span<double> dq, std::span<double> dp)
{
    dq[0] = 2.0 - std::exp(q[0]);
    dp[0] = 1.0 - std::exp(p[0]);
}

void spring_grad(std::span<const double> q, std::span<const double> p, std::span<double> dq,
                 std::span<double> dp)
{
    dq[0] = 2.0 * q[0];
    dp[0] = 2.0 * p[0];
}

void henon_heiles_grad(std::span<const double> q, std::span<const double> p,
                       std::span<double> dq, std::span<double> dp)
{
    dq[0] = 2.0 * q[0] + q[0] * q[1];
    dq[1] = 2.0 * q[1] + 0.5 * (q[0] * q[0] - q[1] * q[1]);
    dp[0] = p[0];
    dp[1] = p[1];
}

void tao_grad(std::span<const double> q, std::span<const double> p, std::span<double> dq,
              std::span<double> dp)
{
    dq[0] = q[0] * (p[0] * p[0] + 1.0);
    dp[0] = p[0] * (q[0] * q[0] + 1.0);
}

void schrodinger_grad(std::span<const double> q, std::span<const double> p,
                      std::span<double> dq, std::span<double> dp)
{
    const double q1 = q[0], q2 = q[1], p1 = p[0], p2 = p[1];
    const double a = q1 * q1 + p1 * p1;
    const double b = q2 * q2 + p2 * p2;
    dq[0] = a * q1 - (2.0 * q1 * q2 * q2 - 2.0 * q1 * p2 * p2 + 4.0 * q2 * p1 * p2);
    dq[1] = b * q2 - (2.0 * q1 * q1 * q2 - 2.0 * p1 * p1 * q2 + 4.0 * q1 * p1 * p2);
    dp[0] = a * p1 - (2.0 * p1 * p2 * p2 - 2.0 * p1 * q2 * q2 + 4.0 * q1 * q2 * p2);
    dp[1] = b * p2 - (2.0 * p1 * p1 * p2 - 2.0 * q1 * q1 * p2 + 4.0 * q1 * q2 * p1);
}

void vortex_pair_grad(std::span<const double> q, std::span<const double> p,
                      std::span<double> dq, std::span<double> dp)
{
    const double r2 = q[0] * q[0] + p[0] * p[0];
    dq[0] = -q[0] / (std::numbers::pi * r2);
    dp[0] = -p[0] / (std::numbers::pi * r2);
}

SamplingDomain box(std::size_t n, double q_half, double p_half)
{
    SamplingDomain d;
    d.lo.assign(2 * n, 0.0);
    d.hi.assign(2 * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        d.lo[i] = -q_half;
        d.hi[i] = q_half;
        d.lo[n + i] = -p_half;
        d.hi[n + i] = p_half;
    }
    return d;
}

std::vector<SystemEntry> build_catalog()
{
    using std::make_shared;
    constexpr double pi = std::numbers::pi;

    SamplingDomain annulus;
    annulus.lo = {-kVortexPairRMax, -kVortexPairRMax};
    annulus.hi = {kVortexPairRMax, kVortexPairRMax};
    annulus.r_min = kVortexPairRMin;
    annulus.r_max = kVortexPairRMax;

    std::vector<SystemEntry> c;
    c.push_back({"pendulum", 1, make_shared<ClosedFormSystem>(1, pendulum, pendulum_grad),
                 box(1, pi / 2, 1.0), true, {{pi / 4}, {0.0}}});
    c.push_back({"lotka_volterra", 1,
                 make_shared<ClosedFormSystem>(1, lotka_volterra, lotka_volterra_grad),
                 box(1, 1.0, 1.0), true, {{0.5}, {0.0}}});
    c.push_back({"spring", 1, make_shared<ClosedFormSystem>(1, spring, spring_grad),
                 box(1, 1.0, 1.0), true, {{0.0}, {-0.5}}});
    c.push_back({"henon_heiles", 2,
                 make_shared<ClosedFormSystem>(2, henon_heiles, henon_heiles_grad),
                 box(2, 0.5, 0.5), true, {{0.25, 0.0}, {0.0, 0.25}}});
    c.push_back({"tao", 1, make_shared<ClosedFormSystem>(1, tao_example, tao_grad),
                 box(1, 2.0, 2.0), false, {{1.0}, {0.0}}});
    c.push_back({"schrodinger", 2,
                 make_shared<ClosedFormSystem>(2, schrodinger_fourier, schrodinger_grad),
                 box(2, 1.0, 1.0), false, {{0.5, 0.0}, {0.0, 0.5}}});
    c.push_back({"vortex_pair", 1,
                 make_shared<ClosedFormSystem>(1, vortex_pair_relative, vortex_pair_grad),
                 annulus, false, {{1.0}, {0.0}}});
    return c;
}

}  // namespace

double pendulum(std::span<const double> q, std::span<const double> p)
{
    require_dim(q, p, 1, "pendulum");
    return 3.0 * (1.0 - std::cos(q[0])) + p[0] * p[0];
}

double lotka_volterra(std::span<const double> q, std::span<const double> p)
{
    require_dim(q, p, 1, "lotka_volterra");
    return p[0] - std::exp(p[0]) + 2.0 * q[0] - std::exp(q[0]);
}

double spring(std::span<const double> q, std::span<const double> p)
{
    require_dim(q, p, 1, "spring");
    return q[0] * q[0] + p[0] * p[0];
}

double henon_heiles(std::span<const double> q, std::span<const double> p)
{
    require_dim(q, p, 2, "henon_heiles");
    const double q1 = q[0], q2 = q[1];
    return 0.5 * (p[0] * p[0] + p[1] * p[1]) + (q1 * q1 + q2 * q2) +
           0.5 * (q1 * q1 * q2 - q2 * q2 * q2 / 3.0);
}

double tao_example(std::span<const double> q, std::span<const double> p)
{
    require_dim(q, p, 1, "tao");
    return 0.5 * (q[0] * q[0] + 1.0) * (p[0] * p[0] + 1.0);
}

double schrodinger_fourier(std::span<const double> q, std::span<const double> p)
{
    require_dim(q, p, 2, "schrodinger");
    const double q1 = q[0], q2 = q[1], p1 = p[0], p2 = p[1];
    const double a = q1 * q1 + p1 * p1;
    const double b = q2 * q2 + p2 * p2;
    return 0.25 * (a * a + b * b) - (q1 * q1 * q2 * q2 + p1 * p1 * p2 * p2 - q1 * q1 * p2 * p2 -
                                     p1 * p1 * q2 * q2 + 4.0 * q1 * q2 * p1 * p2);
}

double vortex_pair_relative(std::span<const double> q, std::span<const double> p)
{
    require_dim(q, p, 1, "vortex_pair");
    return -std::log(q[0] * q[0] + p[0] * p[0]) / (2.0 * std::numbers::pi);
}

PhaseState exact_spring_solution(const PhaseState& s0, double t)
{
    const double c = std::cos(2.0 * t);
    const double s = std::sin(2.0 * t);
    PhaseState out{Vector(s0.dim()), Vector(s0.dim())};
    for (std::size_t i = 0; i < s0.dim(); ++i) {
        out.q[i] = s0.q[i] * c + s0.p[i] * s;
        out.p[i] = s0.p[i] * c - s0.q[i] * s;
    }
    return out;
}

PhaseState SamplingDomain::sample(Rng& rng) const
{
    if (is_annulus()) {
        const double r = r_min * std::exp(rng.uniform() * std::log(r_max / r_min));
        const double theta = rng.uniform(-std::numbers::pi, std::numbers::pi);
        return {{r * std::cos(theta)}, {r * std::sin(theta)}};
    }
    const std::size_t n = lo.size() / 2;
    PhaseState s{Vector(n), Vector(n)};
    for (std::size_t i = 0; i < n; ++i)
        s.q[i] = rng.uniform(lo[i], hi[i]);
    for (std::size_t i = 0; i < n; ++i)
        s.p[i] = rng.uniform(lo[n + i], hi[n + i]);
    return s;
}

bool SamplingDomain::contains(const PhaseState& s) const
{
    const std::size_t n = lo.size() / 2;
    if (s.dim() != n)
        return false;
    if (is_annulus()) {
        const double r = std::hypot(s.q[0], s.p[0]);
        return r >= r_min && r <= r_max;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (s.q[i] < lo[i] || s.q[i] > hi[i] || s.p[i] < lo[n + i] || s.p[i] > hi[n + i])
            return false;
    }
    return true;
}

std::span<const SystemEntry> catalog()
{
    static const std::vector<SystemEntry> entries = build_catalog();
    return entries;
}

std::string catalog_names()
{
    std::string names;
    for (const auto& e : catalog()) {
        if (!names.empty())
            names += ", ";
        names += e.name;
    }
    return names;
}

const SystemEntry& find_system(std::string_view name)
{
    for (const auto& e : catalog())
        if (e.name == name)
            return e;
    throw Error(ErrorKind::UnknownSystem,
                "no system named '" + std::string(name) + "' (catalog: " + catalog_names() + ")");
}

}  // namespace nssnn
