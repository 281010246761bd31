#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nssnn/core.hpp"
#include "nssnn/rng.hpp"

namespace nssnn {

/// Separation range covered by the two-vortex training data.
inline constexpr double kVortexPairRMin = 0.2;
inline constexpr double kVortexPairRMax = 6.0;

/// Region initial conditions are drawn from: an axis-aligned box over
/// (q_0..q_{N-1}, p_0..p_{N-1}), or for N = 1 an annulus with log-uniform radius.
struct SamplingDomain {
    Vector lo;
    Vector hi;
    double r_min = 0.0;  // > 0 selects the annulus form
    double r_max = 0.0;

    bool is_annulus() const noexcept { return r_min > 0.0; }
    PhaseState sample(Rng& rng) const;
    bool contains(const PhaseState& s) const;
};

struct SystemEntry {
    std::string name;
    std::size_t dimension;
    std::shared_ptr<const HamiltonianProvider> hamiltonian;
    SamplingDomain domain;
    bool separable;
    PhaseState eval_state;  // reference start point for long-horizon evaluation
};

// Closed-form energies. Each throws DimensionMismatch on wrong input width.
double pendulum(std::span<const double> q, std::span<const double> p);
double lotka_volterra(std::span<const double> q, std::span<const double> p);
double spring(std::span<const double> q, std::span<const double> p);
double henon_heiles(std::span<const double> q, std::span<const double> p);
double tao_example(std::span<const double> q, std::span<const double> p);
double schrodinger_fourier(std::span<const double> q, std::span<const double> p);
/// Relative-coordinate Hamiltonian of two unit vortices, -log(r)/pi.
double vortex_pair_relative(std::span<const double> q, std::span<const double> p);

/// Closed-form flow of H = q^2 + p^2 (componentwise rotation at rate 2).
PhaseState exact_spring_solution(const PhaseState& s0, double t);

std::span<const SystemEntry> catalog();
/// Throws UnknownSystem naming the catalog.
const SystemEntry& find_system(std::string_view name);
std::string catalog_names();

}  // namespace nssnn
