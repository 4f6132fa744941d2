#pragma once

#include <cstdint>
#include <random>

namespace counterscope {

using Rng = std::mt19937_64;

/// Mixes a base seed with stream indices into an independent child seed.
/// Used wherever per-item / per-tree / per-fold streams are needed so results
/// do not depend on iteration or scheduling order.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) noexcept;

} // namespace counterscope
