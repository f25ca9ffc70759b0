#pragma once

#include <cstddef>
#include <functional>

namespace jsi {

/// Worker count used when a caller passes 0. Defaults to the JSI_THREADS
/// environment variable, else the hardware concurrency.
unsigned default_threads();
void set_default_threads(unsigned n);

/// Runs body(i) for i in [0, n). Each index is evaluated exactly once and
/// results must be written to index-owned storage; the outcome therefore
/// does not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned threads = 0);

}  // namespace jsi
