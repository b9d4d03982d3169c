#include "mlenkf/rng.hpp"

#include <cmath>
#include <numbers>

#include "mlenkf/errors.hpp"

namespace mlenkf {
namespace {

constexpr std::uint32_t kMulA = 0xD2511F53u;
constexpr std::uint32_t kMulB = 0xCD9E8D57u;
constexpr std::uint32_t kWeylA = 0x9E3779B9u;
constexpr std::uint32_t kWeylB = 0xBB67AE85u;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Uniform on the open interval (0, 1) from 64 random bits.
double open_unit(std::uint32_t lo, std::uint32_t hi) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

struct NormalPair {
    double first;
    double second;
};

NormalPair box_muller(const PhiloxCounter& block) {
    const double u1 = open_unit(block[0], block[1]);
    const double u2 = open_unit(block[2], block[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace

PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key) {
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMulA) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMulB) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeylA;
        key[1] += kWeylB;
    }
    return ctr;
}

NormalStream::NormalStream(const RngKey& key) {
    require(key.realization < (1u << 24), "RngKey: realization index must be < 2^24");
    require(key.level < (1u << 8), "RngKey: level must be < 256");
    const std::uint64_t mixed =
        splitmix64(key.seed ^ splitmix64(static_cast<std::uint64_t>(key.purpose)));
    key_ = {static_cast<std::uint32_t>(mixed), static_cast<std::uint32_t>(mixed >> 32)};
    c1_ = key.step;
    c2_ = key.particle;
    c3_ = (key.level << 24) | key.realization;
}

double NormalStream::operator[](std::uint64_t index) const {
    require(index / 2 <= 0xFFFFFFFFull, "NormalStream: index out of range");
    const auto block = philox4x32({static_cast<std::uint32_t>(index / 2), c1_, c2_, c3_}, key_);
    const NormalPair pair = box_muller(block);
    return index % 2 == 0 ? pair.first : pair.second;
}

void NormalStream::fill(std::uint64_t first, std::span<double> out) const {
    std::size_t i = 0;
    std::uint64_t index = first;
    if (out.empty()) return;
    require((first + out.size()) / 2 <= 0xFFFFFFFFull, "NormalStream: index out of range");
    if (index % 2 == 1) {
        out[i++] = (*this)[index++];
    }
    for (; i + 2 <= out.size(); i += 2, index += 2) {
        const auto block = philox4x32({static_cast<std::uint32_t>(index / 2), c1_, c2_, c3_}, key_);
        const NormalPair pair = box_muller(block);
        out[i] = pair.first;
        out[i + 1] = pair.second;
    }
    if (i < out.size()) out[i] = (*this)[index];
}

}  // namespace mlenkf
