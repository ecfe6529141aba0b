#include "forge/counters.hpp"

#include <atomic>

namespace forge::counters {
namespace {
std::atomic<std::uint64_t> g_forward{0};
std::atomic<std::uint64_t> g_backward{0};
}  // namespace

std::uint64_t forward_samples() noexcept { return g_forward.load(); }
std::uint64_t backward_passes() noexcept { return g_backward.load(); }

void add_forward_samples(std::uint64_t n) noexcept { g_forward.fetch_add(n); }
void add_backward_pass() noexcept { g_backward.fetch_add(1); }

void reset() noexcept {
  g_forward.store(0);
  g_backward.store(0);
}

}  // namespace forge::counters
