#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace nssnn {

/// Counter-based seed splitting: every named consumer of a global seed gets its
/// own stream, so adding a consumer never shifts another one's draws.
std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a(std::string_view s) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream,
                          std::uint64_t index = 0) noexcept;

/// mt19937_64 with platform-independent uniform draws (the std distributions
/// are implementation-defined).
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) noexcept : engine_(seed) {}
    Rng(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) noexcept
        : Rng(derive_seed(seed, stream, index))
    {
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }
    result_type operator()() noexcept { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    /// Uniform integer on [0, n).
    std::uint64_t below(std::uint64_t n) noexcept;

private:
    std::mt19937_64 engine_;
};

}  // namespace nssnn
