#pragma once

// Filter updates allocate and free covariance-sized buffers every frame. With
// glibc's default dynamic mmap threshold each of those round-trips through
// the kernel; keeping them on the heap removes that cost. Call once from main.

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace pathspace {

inline void keep_large_allocations() {
#if defined(__GLIBC__)
  constexpr int kLimit = 1 << 30;
  mallopt(M_MMAP_THRESHOLD, kLimit);
  mallopt(M_TRIM_THRESHOLD, kLimit);
#endif
}

}  // namespace pathspace
