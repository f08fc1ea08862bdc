#pragma once

#include <cstddef>
#include <functional>

namespace leea {

/// Caps the number of worker threads used by data-parallel kernels.
/// 0 restores the hardware default. Results never depend on this value:
/// work is only ever split across independent output cells.
void set_worker_count(std::size_t workers);
std::size_t worker_count();

/// Calls body(begin, end) over disjoint subranges covering [0, count).
/// Subranges are at least `grain` long except for the last one.
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t grain = 1);

}  // namespace leea
