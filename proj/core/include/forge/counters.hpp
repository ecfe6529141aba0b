#pragma once

#include <cstdint>

// Process-wide operation counters. Calibration and the CLI use them to
// assert cost claims such as "no backward pass was run".
namespace forge::counters {

std::uint64_t forward_samples() noexcept;
std::uint64_t backward_passes() noexcept;

void add_forward_samples(std::uint64_t n) noexcept;
void add_backward_pass() noexcept;
void reset() noexcept;

}  // namespace forge::counters
