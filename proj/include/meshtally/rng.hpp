#pragma once

#include <array>
#include <cstdint>

namespace meshtally {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as easy as
/// 1, 2, 3"). Pure function of (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Counter-based stream for one particle in one batch. The draw index is the only state,
/// so a particle's numbers do not depend on which thread handles it or on other
/// particles.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint32_t batch, std::uint32_t particle, std::uint64_t draws = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          batch_(batch),
          particle_(particle),
          draws_(draws) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        const auto out = philox4x32({static_cast<std::uint32_t>(draws_), static_cast<std::uint32_t>(draws_ >> 32),
                                     particle_, batch_},
                                    key_);
        ++draws_;
        const std::uint64_t bits = (static_cast<std::uint64_t>(out[0]) << 32 | out[1]) >> 11;
        return static_cast<double>(bits) * 0x1.0p-53;
    }

    std::uint64_t draws() const { return draws_; }

private:
    std::array<std::uint32_t, 2> key_;
    std::uint32_t batch_;
    std::uint32_t particle_;
    std::uint64_t draws_;
};

} // namespace meshtally
