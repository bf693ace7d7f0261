// Copyright (c) szbf contributors.
// SPDX-License-Identifier: MIT

#include "szbf/rng.hpp"

#include <cmath>

namespace szbf {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;  // golden ratio
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;  // sqrt(3) - 1

inline void philox_round(std::array<std::uint32_t, 4>& ctr, std::array<std::uint32_t, 2>& key) {
    std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
    std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
           static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
           static_cast<std::uint32_t>(p0)};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_block(std::array<std::uint32_t, 4> counter,
                                              std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) philox_round(counter, key);
    return counter;
}

PhiloxRng::PhiloxRng(std::uint64_t seed, std::uint64_t stream)
    : counter_{0u, 0u, static_cast<std::uint32_t>(stream),
               static_cast<std::uint32_t>(stream >> 32)},
      key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

void PhiloxRng::refill() {
    block_ = philox4x32_block(counter_, key_);
    pos_ = 0;
    // 64-bit increment within the stream's half of the counter space.
    if (++counter_[0] == 0u) ++counter_[1];
}

std::uint64_t PhiloxRng::next_u64() {
    if (pos_ > 2) refill();
    std::uint64_t lo = block_[pos_];
    std::uint64_t hi = block_[pos_ + 1];
    pos_ += 2;
    return lo | (hi << 32);
}

double PhiloxRng::uniform01() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double PhiloxRng::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    cached_normal_ = r * std::sin(theta);
    has_cached_normal_ = true;
    return r * std::cos(theta);
}

}  // namespace szbf
