#include <cmath>
#include <numbers>

#include "doctest.h"
#include "support.hpp"

#include "nssnn/evaluation.hpp"
#include "nssnn/integrator.hpp"
#include "nssnn/mlp.hpp"
#include "nssnn/systems.hpp"

using namespace nssnn;
using namespace nssnn::testing;

namespace {

const HamiltonianProvider& spring_h() { return *find_system("spring").hamiltonian; }
const HamiltonianProvider& tao_h() { return *find_system("tao").hamiltonian; }

void check_state(const AugmentedState& s, const AugmentedState& want, double tol)
{
    for (std::size_t i = 0; i < s.dim(); ++i) {
        CHECK(std::abs(s.q[i] - want.q[i]) <= tol);
        CHECK(std::abs(s.p[i] - want.p[i]) <= tol);
        CHECK(std::abs(s.x[i] - want.x[i]) <= tol);
        CHECK(std::abs(s.y[i] - want.y[i]) <= tol);
    }
}

double max_state_diff(const AugmentedState& a, const AugmentedState& b)
{
    const Vector fa = flat(a), fb = flat(b);
    double m = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) m = std::max(m, std::abs(fa[i] - fb[i]));
    return m;
}

}  // namespace

TEST_CASE("phi1 moves p and x with the gradient at (q, y)")
{
    const AugmentedState s{{1.0}, {0.0}, {1.0}, {0.0}};
    check_state(phi1(s, 0.1, spring_h()), {{1.0}, {-0.2}, {1.0}, {0.0}}, 1e-15);

    // Different y shows the evaluation point: dH/dp(q, y) = 2y.
    const AugmentedState t{{1.0}, {0.0}, {1.0}, {0.5}};
    check_state(phi1(t, 0.1, spring_h()), {{1.0}, {-0.2}, {1.1}, {0.5}}, 1e-15);
}

TEST_CASE("phi2 moves q and y with the gradient at (x, p)")
{
    const AugmentedState s{{0.0}, {1.0}, {0.0}, {1.0}};
    check_state(phi2(s, 0.1, spring_h()), {{0.2}, {1.0}, {0.0}, {1.0}}, 1e-15);

    const AugmentedState t{{0.0}, {1.0}, {0.5}, {1.0}};
    check_state(phi2(t, 0.1, spring_h()), {{0.2}, {1.0}, {0.5}, {0.9}}, 1e-15);
}

TEST_CASE("phi3 rotates the difference about the midpoint")
{
    const double delta = std::numbers::pi / 2 / (2.0 * 2000.0);
    const AugmentedState s{{1.0}, {0.0}, {0.0}, {0.0}};
    check_state(phi3(s, delta, 2000.0), {{0.5}, {-0.5}, {0.5}, {0.5}}, 1e-12);

    Rng rng(4);
    for (int i = 0; i < 20; ++i) {
        const auto a = random_augmented(rng, 2, 2.0);
        const auto b = phi3(a, rng.uniform(0.0, 1.0), 2000.0);
        for (std::size_t k = 0; k < 2; ++k) {
            CHECK(std::abs((a.q[k] + a.x[k]) - (b.q[k] + b.x[k])) < 1e-12);
            CHECK(std::abs((a.p[k] + a.y[k]) - (b.p[k] + b.y[k])) < 1e-12);
        }
        CHECK(auxiliary_deviation(a) == doctest::Approx(auxiliary_deviation(b)).epsilon(1e-12));
    }
}

TEST_CASE("zero step is the identity")
{
    Rng rng(5);
    const auto s = random_augmented(rng, 2, 1.0);
    const auto& hh = *find_system("henon_heiles").hamiltonian;
    CHECK(flat(phi1(s, 0.0, hh)) == flat(s));
    CHECK(flat(phi2(s, 0.0, hh)) == flat(s));
    CHECK(max_state_diff(phi3(s, 0.0, 2000.0), s) == 0.0);
    CHECK(max_state_diff(strang_step(s, 0.0, 2000.0, hh), s) == 0.0);
}

TEST_CASE("a Strang step makes exactly four gradient calls at the right points")
{
    CountingProvider counter(tao_h());
    AugmentedState s{{0.3}, {-0.2}, {0.31}, {-0.25}};
    const auto before = s;
    AugmentedIntegrator integ(counter, 2000.0);
    integ.step(s, 0.01);
    CHECK(counter.calls == 4);
    // First call is phi1 at (q, y) of the input state.
    CHECK(counter.points[0].q == before.q);
    CHECK(counter.points[0].p == before.y);

    counter.calls = 0;
    counter.points.clear();
    integ.phi2(s, 0.01);
    CHECK(counter.calls == 1);
    integ.phi3(s, 0.01);
    CHECK(counter.calls == 1);
    counter.calls = 0;
    rollout(PhaseState{{0.1}, {0.2}}, IntegratorConfig{0.01, 2000.0, 25}, counter);
    CHECK(counter.calls == 100);
}

TEST_CASE("the maps are symplectic for a random network Hamiltonian")
{
    for (std::size_t n : {1u, 2u}) {
        const MlpHamiltonian h(init_xavier(default_layer_sizes(n), 31 + n));
        Rng rng(40 + n);
        double worst1 = 0.0, worst2 = 0.0, worst3 = 0.0, worst_step = 0.0;
        for (int i = 0; i < 20; ++i) {
            const auto s = random_augmented(rng, n, 1.0);
            worst1 = std::max(worst1, symplectic_defect(fd_jacobian(
                                          [&](const auto& a) { return phi1(a, 0.1, h); }, s, 1e-6)));
            worst2 = std::max(worst2, symplectic_defect(fd_jacobian(
                                          [&](const auto& a) { return phi2(a, 0.1, h); }, s, 1e-6)));
            worst3 = std::max(worst3, symplectic_defect(fd_jacobian(
                                          [&](const auto& a) { return phi3(a, 0.1, 2000.0); }, s, 1e-6)));
            worst_step = std::max(
                worst_step, symplectic_defect(fd_jacobian(
                                [&](const auto& a) { return strang_step(a, 0.01, 2000.0, h); }, s, 1e-6)));
        }
        CAPTURE(n);
        CHECK(worst1 <= 1e-5);
        CHECK(worst2 <= 1e-5);
        CHECK(worst3 <= 1e-5);
        CHECK(worst_step <= 1e-5);
    }
}

TEST_CASE("a non-symplectic map fails the defect check")
{
    Rng rng(6);
    const auto s = random_augmented(rng, 1, 1.0);
    auto squash = [](const AugmentedState& a) {
        auto b = a;
        b.q[0] *= 1.01;
        return b;
    };
    CHECK(symplectic_defect(fd_jacobian(squash, s, 1e-6)) > 1e-3);
}

TEST_CASE("stepping forward then backward restores the state")
{
    Rng rng(7);
    for (int i = 0; i < 10; ++i) {
        const auto s = random_augmented(rng, 1, 1.5);
        const auto back = strang_step(strang_step(s, 0.01, 2000.0, tao_h()), -0.01, 2000.0, tao_h());
        CHECK(max_state_diff(back, s) <= 1e-10);
    }
}

TEST_CASE("spring rollout matches the closed form")
{
    const PhaseState s0{{1.0}, {0.5}};
    const auto traj = rollout(s0, IntegratorConfig::from_horizon(0.0, 10.0, 1e-3), spring_h());
    REQUIRE(traj.size() == 10001);
    CHECK(traj.times.back() == doctest::Approx(10.0));
    CHECK_FALSE(validate_trajectory(traj, 1e-3).has_value());
    double err = 0.0, aux = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto exact = exact_spring_solution(s0, traj.times[i]);
        err = std::max({err, std::abs(traj.states[i].q[0] - exact.q[0]),
                        std::abs(traj.states[i].p[0] - exact.p[0])});
        aux = std::max(aux, auxiliary_deviation(traj.states[i]));
    }
    CHECK(err <= 1e-4);
    CHECK(aux <= 1e-3);
}

TEST_CASE("global error is second order")
{
    const PhaseState s0{{1.0}, {0.0}};
    auto terminal_error = [&](double dt) {
        const auto traj = rollout(s0, IntegratorConfig::from_horizon(0.0, 1.0, dt), spring_h(),
                                  {.stride = 1000000});
        const auto exact = exact_spring_solution(s0, traj.times.back());
        return std::hypot(traj.states.back().q[0] - exact.q[0], traj.states.back().p[0] - exact.p[0]);
    };
    const double ratio = terminal_error(0.01) / terminal_error(0.005);
    CHECK(ratio >= 3.2);
    CHECK(ratio <= 4.8);
}

TEST_CASE("Tao's example conserves energy over a long horizon")
{
    const PhaseState s0{{1.0}, {0.0}};
    const auto traj = rollout(s0, IntegratorConfig::from_horizon(0.0, 100.0, 1e-3), tao_h(),
                              {.stride = 100});
    REQUIRE_FALSE(traj.diverged);
    const double h0 = tao_h().value(s0.q, s0.p);
    double worst = 0.0;
    for (const auto& st : traj.states) worst = std::max(worst, std::abs(tao_h().value(st.q, st.p) - h0));
    CHECK(worst / std::abs(h0) <= 1e-3);
}

TEST_CASE("rollout bookkeeping")
{
    const PhaseState s0{{0.2}, {0.1}};
    auto zero = rollout(s0, IntegratorConfig{0.01, 2000.0, 0}, spring_h());
    REQUIRE(zero.size() == 1);
    CHECK(zero.times[0] == 0.0);
    CHECK(zero.states[0].x == s0.q);

    auto strided = rollout(s0, IntegratorConfig{0.01, 2000.0, 10}, spring_h(), {.t0 = 1.0, .stride = 4});
    REQUIRE(strided.size() == 4);  // steps 0, 4, 8 and the final 10
    CHECK(strided.times[1] == doctest::Approx(1.04));
    CHECK(strided.times.back() == doctest::Approx(1.10));
    CHECK(auxiliary_deviation(strided).front() == 0.0);

    CHECK_THROWS_AS(rollout(PhaseState{{0.1, 0.2}, {0.0, 0.0}}, IntegratorConfig{0.01, 2000.0, 1},
                            spring_h()),
                    Error);
}

TEST_CASE("a failing provider truncates the rollout and flags it")
{
    const BlowupProvider h(0.5);
    const auto traj = rollout(PhaseState{{0.0}, {0.0}}, IntegratorConfig{0.1, 0.0, 100}, h);
    CHECK(traj.diverged);
    CHECK(traj.size() > 1);
    CHECK(traj.size() < 101);
    for (const auto& st : traj.states) CHECK(all_finite(flat(st)));

    AugmentedState s{{1.0}, {0.0}, {1.0}, {0.0}};
    AugmentedIntegrator integ(h, 0.0);
    try {
        integ.phi1(s, 0.1);
        FAIL("expected NonFiniteEntry");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonFiniteEntry);
    }
}

TEST_CASE("weights scale the gradient terms of phi1 and phi2")
{
    const Vector w{-0.5};
    const AugmentedState s{{1.0}, {0.0}, {1.0}, {0.0}};
    check_state(phi1(s, 0.1, spring_h(), w), {{1.0}, {0.1}, {1.0}, {0.0}}, 1e-15);
    const AugmentedState t{{0.0}, {1.0}, {0.0}, {1.0}};
    check_state(phi2(t, 0.1, spring_h(), w), {{-0.1}, {1.0}, {0.0}, {1.0}}, 1e-15);
}

TEST_CASE("binding strength controls the auxiliary drift on Tao's example")
{
    OmegaStudyConfig cfg;
    cfg.horizon = 100.0;
    const auto traces = omega_study(kOmegaStudyPresets, cfg);
    REQUIRE(traces.size() == 4);
    for (const auto& tr : traces) {
        CAPTURE(tr.omega);
        CHECK(tr.deviation.front() == 0.0);
        CHECK(tr.trajectory.times.back() == doctest::Approx(100.0));
    }
    const double e0 = traces[0].deviation.back();
    const double e08 = traces[1].deviation.back();
    const double e09 = traces[2].deviation.back();
    const double e10 = traces[3].deviation.back();
    CHECK(e10 < e09);
    CHECK(e09 < e08);
    CHECK(e0 >= 100.0 * e10);

    // The bound orbit stays in a narrow energy band.
    const auto& tao = tao_h();
    const auto& first = traces[3].trajectory.states.front();
    const double h0 = tao.value(first.q, first.p);
    double band = 0.0;
    for (const auto& st : traces[3].trajectory.states) band = std::max(band, std::abs(tao.value(st.q, st.p) - h0));
    CHECK(band <= 1e-2);
}
