#pragma once

#include <cstddef>
#include <functional>

namespace stm {

/// Worker count for the data-parallel passes. Results never depend on it.
struct ExecOptions {
    unsigned threads = 1;
};

/// Runs body(begin, end) over contiguous slices of [0, n) on up to `threads` workers.
/// Slices are disjoint, so `body` must only write to state indexed by its own range.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace stm
