#include <cmath>
#include <numbers>

#include "doctest.h"
#include "support.hpp"

#include "nssnn/integrator.hpp"
#include "nssnn/systems.hpp"

using namespace nssnn;
using nssnn::testing::fd_gradient;
using nssnn::testing::rel_error;

namespace {

Vector joined(const PhaseState& s)
{
    Vector v = s.q;
    v.insert(v.end(), s.p.begin(), s.p.end());
    return v;
}

double value_flat(const HamiltonianProvider& h, const Vector& v)
{
    const std::size_t n = v.size() / 2;
    return h.value(std::span(v).first(n), std::span(v).subspan(n));
}

// Gradient check on states drawn by the supplied sampler.
template <class Sampler>
double worst_gradient_error(const SystemEntry& sys, Sampler sample, double step, int probes)
{
    double worst = 0.0;
    for (int i = 0; i < probes; ++i) {
        const PhaseState s = sample();
        const Vector fd = fd_gradient([&](const Vector& v) { return value_flat(*sys.hamiltonian, v); },
                                      joined(s), step);
        const Vector g = nssnn::testing::flat(gradient_of(*sys.hamiltonian, s.q, s.p));
        worst = std::max(worst, rel_error(g, fd));
    }
    return worst;
}

}  // namespace

TEST_CASE("closed-form energies at reference points")
{
    const Vector z1{0.0};
    CHECK(tao_example(z1, z1) == 0.5);
    CHECK(spring(z1, z1) == 0.0);
    CHECK(pendulum(z1, z1) == 0.0);
    CHECK(lotka_volterra(z1, z1) == doctest::Approx(-2.0));
    CHECK(pendulum(Vector{std::numbers::pi}, Vector{1.0}) == doctest::Approx(7.0));
    CHECK(spring(Vector{1.0}, Vector{2.0}) == 5.0);
    CHECK(tao_example(Vector{1.0}, Vector{1.0}) == 2.0);

    const auto& hh = find_system("henon_heiles");
    const auto g = gradient_of(*hh.hamiltonian, Vector{0.0, 0.0}, Vector{0.0, 0.0});
    CHECK(g.dq == Vector{0.0, 0.0});
    CHECK(g.dp == Vector{0.0, 0.0});

    CHECK(vortex_pair_relative(Vector{1.0}, Vector{0.0}) == 0.0);
    CHECK(vortex_pair_relative(Vector{std::exp(1.0)}, Vector{0.0}) ==
          doctest::Approx(-1.0 / std::numbers::pi));
}

TEST_CASE("formulas reject the wrong width")
{
    const Vector one{0.0}, two{0.0, 0.0};
    CHECK_THROWS_AS(pendulum(two, two), Error);
    CHECK_THROWS_AS(henon_heiles(one, one), Error);
    CHECK_THROWS_AS(schrodinger_fourier(one, two), Error);
    try {
        spring(two, one);
        FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DimensionMismatch);
    }
}

TEST_CASE("catalog lookup")
{
    CHECK(catalog().size() == 7);
    for (const auto& sys : catalog()) {
        CHECK(find_system(sys.name).dimension == sys.dimension);
        CHECK(sys.hamiltonian->dimension() == sys.dimension);
        CHECK(sys.domain.contains(sys.eval_state));
    }
    CHECK_FALSE(find_system("pendulum").separable == find_system("tao").separable);
    try {
        find_system("nope");
        FAIL("expected UnknownSystem");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnknownSystem);
        CHECK(std::string(e.what()).find("pendulum") != std::string::npos);
    }
}

TEST_CASE("sampling stays inside each domain")
{
    for (const auto& sys : catalog()) {
        Rng rng(9, sys.name);
        for (int i = 0; i < 200; ++i) {
            const auto s = sys.domain.sample(rng);
            REQUIRE(s.dim() == sys.dimension);
            REQUIRE(sys.domain.contains(s));
        }
    }
}

TEST_CASE("gradients agree with central differences on the sampling domains")
{
    for (const auto& sys : catalog()) {
        CAPTURE(sys.name);
        Rng rng(21, sys.name);
        const double err =
            worst_gradient_error(sys, [&] { return sys.domain.sample(rng); }, 1e-5, 100);
        CHECK(err <= 1e-6);
    }
}

TEST_CASE("gradients agree with central differences on the wide box")
{
    for (const auto& sys : catalog()) {
        CAPTURE(sys.name);
        Rng rng(22, sys.name);
        auto sample = [&] {
            for (;;) {
                auto s = nssnn::testing::random_phase(rng, sys.dimension, 3.0);
                // The vortex pair kernel is singular at the origin.
                if (sys.name != "vortex_pair" || std::hypot(s.q[0], s.p[0]) > 0.1)
                    return s;
            }
        };
        CHECK(worst_gradient_error(sys, sample, 1e-4, 100) <= 1e-5);
    }
}

TEST_CASE("exact spring solution")
{
    auto s = exact_spring_solution({{0.0}, {-3.0}}, 0.0);
    CHECK(s.q[0] == 0.0);
    CHECK(s.p[0] == -3.0);

    s = exact_spring_solution({{1.0}, {0.0}}, std::numbers::pi / 2);
    CHECK(s.q[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(std::abs(s.p[0]) < 1e-14);

    for (double t : {0.1, 1.7, 12.0, 345.6}) {
        s = exact_spring_solution({{1.0}, {1.0}}, t);
        CHECK(spring(s.q, s.p) == doctest::Approx(2.0).epsilon(1e-14));
    }
}

TEST_CASE("energy is conserved by the reference integrator for every catalog system")
{
    for (const auto& sys : catalog()) {
        CAPTURE(sys.name);
        const auto traj = rollout(sys.eval_state, IntegratorConfig::from_horizon(0.0, 10.0, 1e-3),
                                  *sys.hamiltonian, {.stride = 10});
        REQUIRE_FALSE(traj.diverged);
        const double h0 = sys.hamiltonian->value(sys.eval_state.q, sys.eval_state.p);
        double worst = 0.0;
        for (const auto& st : traj.states)
            worst = std::max(worst, std::abs(sys.hamiltonian->value(st.q, st.p) - h0));
        CHECK(worst / std::max(std::abs(h0), 1.0) <= 1e-3);
    }
}
