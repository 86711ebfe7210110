#pragma once

#include <array>
#include <cstdint>
#include <utility>

namespace fipp {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
// A stream is addressed by (seed, stream, substream); draws are addressed by a
// 64-bit index within the stream. Evaluation order is irrelevant, which makes
// parallel path generation and shared-draw grid refinement reproducible.
class Philox {
public:
    Philox(std::uint64_t seed, std::uint32_t stream, std::uint32_t substream = 0)
        : seed_(seed), stream_(stream), substream_(substream) {}

    static std::array<std::uint32_t, 4> block(const std::array<std::uint32_t, 4>& counter,
                                              const std::array<std::uint32_t, 2>& key);

    std::array<std::uint32_t, 4> raw(std::uint64_t idx) const {
        return block({static_cast<std::uint32_t>(idx),
                      static_cast<std::uint32_t>(idx >> 32),
                      substream_, stream_},
                     {static_cast<std::uint32_t>(seed_),
                      static_cast<std::uint32_t>(seed_ >> 32)});
    }

    // two uniforms in (0,1) from one block
    std::pair<double, double> u01_pair(std::uint64_t idx) const;
    // standard normal pair via Box-Muller from one block
    std::pair<double, double> normal_pair(std::uint64_t idx) const;
    double u01(std::uint64_t idx) const { return u01_pair(idx).first; }
    // exponential with unit mean
    double exp1(std::uint64_t idx) const;

private:
    std::uint64_t seed_;
    std::uint32_t stream_;
    std::uint32_t substream_;
};

} // namespace fipp
