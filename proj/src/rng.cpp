#include "fipp/rng.hpp"

#include <cmath>

namespace fipp {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void round_once(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline double to_u01(std::uint64_t bits) {
    // 53-bit mantissa, offset keeps the value strictly inside (0,1)
    return static_cast<double>(bits >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

} // namespace

std::array<std::uint32_t, 4> Philox::block(const std::array<std::uint32_t, 4>& counter,
                                           const std::array<std::uint32_t, 2>& key) {
    std::array<std::uint32_t, 4> c = counter;
    std::array<std::uint32_t, 2> k = key;
    round_once(c, k);
    for (int r = 1; r < 10; ++r) {
        k[0] += kW0;
        k[1] += kW1;
        round_once(c, k);
    }
    return c;
}

std::pair<double, double> Philox::u01_pair(std::uint64_t idx) const {
    const auto b = raw(idx);
    const std::uint64_t lo = b[0] | (static_cast<std::uint64_t>(b[1]) << 32);
    const std::uint64_t hi = b[2] | (static_cast<std::uint64_t>(b[3]) << 32);
    return {to_u01(lo), to_u01(hi)};
}

std::pair<double, double> Philox::normal_pair(std::uint64_t idx) const {
    const auto [u1, u2] = u01_pair(idx);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    return {r * std::cos(a), r * std::sin(a)};
}

double Philox::exp1(std::uint64_t idx) const { return -std::log(u01(idx)); }

} // namespace fipp
