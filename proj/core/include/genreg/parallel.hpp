#pragma once

#include <functional>

namespace genreg {

// Worker cap for the channel-parallel loops.  Defaults to the hardware
// thread count; the GENREG_THREADS environment variable lowers (or raises)
// it.  Always at least 1.
int max_threads();

// Runs fn(i) for i in [0, n).  Iterations must write disjoint state; results
// are combined by the caller in index order, so numeric output does not
// depend on the worker count.  Runs inline when n or the cap is 1.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace genreg
