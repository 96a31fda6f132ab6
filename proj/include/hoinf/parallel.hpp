// Minimal fork-join helpers shared by the simulation loops.
#pragma once

#include <cstdint>
#include <functional>

namespace hoinf {

/// Worker count: HOINF_THREADS if set, else the hardware concurrency.
unsigned worker_count();

/// Runs body(i) for i in [0, count) on worker_count() threads. Indices are
/// handed out dynamically; the first exception is rethrown after all workers join.
void parallel_for(std::int64_t count, const std::function<void(std::int64_t)>& body);

/// Independent stream seed for task `index` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace hoinf
