#include <cmath>

#include "doctest.h"
#include "support.hpp"

#include "nssnn/evaluation.hpp"
#include "nssnn/systems.hpp"

using namespace nssnn;

namespace {

Trajectory line(std::size_t n, double dt, double q0, std::size_t dim = 1)
{
    Trajectory t;
    for (std::size_t i = 0; i < n; ++i) {
        t.times.push_back(dt * static_cast<double>(i));
        PhaseState s{Vector(dim, q0 + 0.1 * static_cast<double>(i)), Vector(dim, 1.0)};
        t.states.push_back(AugmentedState::from_phase(s));
    }
    return t;
}

}  // namespace

TEST_CASE("prediction error examples")
{
    const auto truth = line(11, 0.1, 0.0);
    CHECK(prediction_error(truth, truth) == 0.0);
    const auto shifted = line(11, 0.1, 0.01);
    CHECK(prediction_error(truth, shifted) == doctest::Approx(0.01).epsilon(1e-12));
    const auto series = prediction_error_series(truth, shifted);
    CHECK(series.size() == 11);

    // Per-time L1 over components.
    const auto wide_truth = line(3, 0.1, 0.0, 3);
    const auto wide_pred = line(3, 0.1, 0.02, 3);
    CHECK(prediction_error(wide_truth, wide_pred) == doctest::Approx(0.06).epsilon(1e-12));
}

TEST_CASE("metrics are symmetric under component permutation")
{
    Rng rng(1);
    Trajectory a, b;
    for (int i = 0; i < 5; ++i) {
        a.times.push_back(0.1 * i);
        b.times.push_back(0.1 * i);
        a.states.push_back(AugmentedState::from_phase(nssnn::testing::random_phase(rng, 3, 1.0)));
        b.states.push_back(AugmentedState::from_phase(nssnn::testing::random_phase(rng, 3, 1.0)));
    }
    auto permute = [](Trajectory t) {
        for (auto& s : t.states) {
            std::swap(s.q[0], s.q[2]);
            std::swap(s.p[0], s.p[2]);
        }
        return t;
    };
    CHECK(prediction_error(a, b) == doctest::Approx(prediction_error(permute(a), permute(b))).epsilon(1e-15));
}

TEST_CASE("misaligned trajectories are rejected")
{
    const auto truth = line(11, 0.1, 0.0);
    CHECK_THROWS_AS(prediction_error(truth, line(10, 0.1, 0.0)), Error);
    CHECK_THROWS_AS(prediction_error(truth, line(11, 0.2, 0.0)), Error);
    CHECK_THROWS_AS(prediction_error(truth, line(11, 0.1, 0.0, 2)), Error);
    try {
        prediction_error_series(truth, line(11, 0.11, 0.0));
        FAIL("expected MisalignedTrajectories");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MisalignedTrajectories);
    }
}

TEST_CASE("Hamiltonian deviation examples")
{
    const auto& spring = *find_system("spring").hamiltonian;
    const PhaseState s0{{1.0}, {0.0}};
    const auto truth = ground_truth(spring, s0, 10.0, {});
    const double h0 = spring.value(s0.q, s0.p);
    CHECK(hamiltonian_deviation(h0, truth, spring).value <= 1e-3);

    // States on the true shell but with a phase error.
    Trajectory shell;
    for (int i = 0; i < 100; ++i) {
        shell.times.push_back(0.1 * i);
        const double a = 0.37 * i + 1.1;
        shell.states.push_back(AugmentedState::from_phase({{std::cos(a)}, {std::sin(a)}}));
    }
    const auto dev = hamiltonian_deviation(h0, shell, spring);
    CHECK(dev.value <= 1e-15);
    CHECK_FALSE(dev.absolute);

    // Energy off by 10% at every time.
    Trajectory off;
    off.times = {0.0, 0.1};
    off.states = {AugmentedState::from_phase({{std::sqrt(1.1)}, {0.0}}),
                  AugmentedState::from_phase({{0.0}, {std::sqrt(1.1)}})};
    CHECK(hamiltonian_deviation(h0, off, spring).value == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("zero truth energy falls back to the absolute deviation")
{
    const auto& spring = *find_system("spring").hamiltonian;
    Trajectory pred;
    pred.times = {0.0, 0.1};
    pred.states = {AugmentedState::from_phase({{0.0}, {0.0}}), AugmentedState::from_phase({{0.1}, {0.0}})};
    const auto dev = hamiltonian_deviation(0.0, pred, spring);
    CHECK(dev.absolute);
    CHECK(dev.value == doctest::Approx(0.01).epsilon(1e-12));
    try {
        hamiltonian_deviation_strict(0.0, pred, spring);
        FAIL("expected ZeroTruthNorm");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ZeroTruthNorm);
    }
}

TEST_CASE("prediction and reference share a time grid")
{
    const auto theta = init_xavier(default_layer_sizes(1), 2);
    const PhaseState s0{{0.5}, {0.0}};
    const auto none = predict(theta, s0, 0.0, {});
    REQUIRE(none.size() == 1);
    CHECK(none.states[0].q == s0.q);

    const EvalConfig cfg{0.01, 2000.0, 5};
    const auto pred = predict(theta, s0, 2.0, cfg);
    const auto truth = ground_truth(*find_system("spring").hamiltonian, s0, 2.0, cfg);
    REQUIRE(pred.size() == truth.size());
    CHECK(pred.size() == 41);
    for (std::size_t i = 0; i < pred.size(); ++i) CHECK(pred.times[i] == doctest::Approx(truth.times[i]));
    CHECK_NOTHROW(prediction_error(truth, pred));
}

TEST_CASE("the learned flow keeps its auxiliary copy bound")
{
    const auto theta = init_xavier(default_layer_sizes(1), 9);
    const auto pred = predict(theta, {{1.0}, {0.0}}, 100.0, {0.01, 2000.0, 10});
    REQUIRE_FALSE(pred.diverged);
    double worst = 0.0;
    for (double e : auxiliary_deviation(pred)) worst = std::max(worst, e);
    CHECK(worst <= 1e-2);
}

TEST_CASE("evaluate assembles a consistent report")
{
    const auto theta = init_xavier(default_layer_sizes(1), 4);
    const auto report = evaluate(theta, "spring", {{1.0}, {0.0}}, 5.0, {0.01, 2000.0, 10}, 4);
    CHECK(report.system == "spring");
    CHECK(report.seed == 4);
    CHECK(report.times.size() == 51);
    CHECK(report.prediction_error_series.size() == 51);
    CHECK(report.hamiltonian_deviation_series.front() == 0.0);
    CHECK(report.prediction_error == doctest::Approx(prediction_error(report.truth, report.prediction)));
    CHECK(std::isfinite(report.hamiltonian_deviation));
    CHECK_FALSE(report.diverged);
    CHECK(report.max_abs_state >= 1.0);
    CHECK(report.config_hash == config_hash({0.01, 2000.0, 10}, "spring", 5.0));
    CHECK(report.config_hash != config_hash({0.01, 2000.0, 10}, "spring", 6.0));
    CHECK_THROWS_AS(evaluate(theta, "nope", {{1.0}, {0.0}}, 1.0, {}), Error);
}

TEST_CASE("median")
{
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    CHECK_THROWS(median({}));
}
