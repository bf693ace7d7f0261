// Copyright (c) szbf contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace szbf {

/// One raw Philox4x32-10 block: 10 rounds over a 128-bit counter and 64-bit
/// key. Exposed so the generator named in reports can be checked against the
/// published test vectors; PhiloxRng draws its blocks from this function.
std::array<std::uint32_t, 4> philox4x32_block(std::array<std::uint32_t, 4> counter,
                                              std::array<std::uint32_t, 2> key);

/// Philox4x32-10 counter-based generator with a Box-Muller normal source.
///
/// (seed, stream) selects an independent substream: the seed is the Philox
/// key and the stream id occupies the high 64 bits of the 128-bit counter,
/// so distinct streams can never overlap regardless of how much either one
/// draws. Simulation code assigns stream 2*i to path i's Brownian
/// increments and stream 2*i + 1 to its initial-condition sampling, which
/// makes every path reproducible in isolation and independent of scheduling.
class PhiloxRng {
public:
    PhiloxRng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64();

    /// Uniform on (0, 1]; never returns 0, so log(uniform01()) is safe.
    double uniform01();

    /// Standard normal via Box-Muller (pairs are cached).
    double normal();

    /// Pinned in reports so a reader can reproduce runs elsewhere.
    static constexpr std::string_view name = "philox4x32-10";

private:
    void refill();

    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> block_{};
    unsigned pos_ = 4;  // block exhausted, refill on first use
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

}  // namespace szbf
