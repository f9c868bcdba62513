#pragma once

#include <cstddef>
#include <functional>

namespace equinash {

// Worker count: programmatic override, else EQUINASH_THREADS, else hardware.
int num_threads();
void set_num_threads(int n);  // 0 restores automatic selection

// Runs body(begin, end) over a fixed partition of [0, n). Work items must
// write to disjoint state; reductions are done by the caller in index order
// afterwards, so results do not depend on the worker count.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace equinash
