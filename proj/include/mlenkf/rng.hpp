#pragma once
// Counter-based Gaussian streams. Every random draw in the library is a pure
// function of (seed, purpose, realization, level, particle, step, index), so
// results do not depend on thread scheduling or on the order in which
// particles are processed.

#include <array>
#include <cstdint>
#include <span>

namespace mlenkf {

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;
PhiloxCounter philox4x32(PhiloxCounter counter, PhiloxKey key);

enum class Purpose : std::uint32_t { forward = 1, obs_perturbation = 2, truth = 3, data_noise = 4 };

struct RngKey {
    std::uint64_t seed = 0;
    Purpose purpose = Purpose::forward;
    std::uint32_t realization = 0;  // < 2^24
    std::uint32_t level = 0;        // < 2^8
    std::uint32_t particle = 0;
    std::uint32_t step = 0;

    friend bool operator==(const RngKey&, const RngKey&) = default;
};

/// Infinite indexable sequence of i.i.d. N(0,1) draws bound to one key.
/// Draws 2k and 2k+1 come from one Philox block through Box-Muller.
class NormalStream {
public:
    explicit NormalStream(const RngKey& key);

    double operator[](std::uint64_t index) const;

    /// out[i] = draw(first + i)
    void fill(std::uint64_t first, std::span<double> out) const;

private:
    PhiloxKey key_{};
    std::uint32_t c1_ = 0;
    std::uint32_t c2_ = 0;
    std::uint32_t c3_ = 0;
};

}  // namespace mlenkf
