#pragma once

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace rhl {

/// Worker count used by the OpenMP kernels. Results never depend on it.
inline void set_threads(int n) {
#if defined(_OPENMP)
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

inline int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace rhl
