#pragma once

#include <cstddef>
#include <functional>

namespace cbpt {

/// Worker thread cap. 0 means one per hardware thread. Initialized from the
/// CBPT_THREADS environment variable on first use.
std::size_t thread_limit();
void set_thread_limit(std::size_t n);

/// Runs body(i) for i in [0, n). Calls made from inside a running
/// parallel_for execute serially, so nesting never oversubscribes.
/// The first exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace cbpt
