#include "curvlab/parallel.hpp"

#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>

#ifdef CURVLAB_HAVE_OPENMP
#include <omp.h>
#endif

namespace curvlab {

int thread_count() {
  if (const char* env = std::getenv("CURVLAB_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
#ifdef CURVLAB_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void parallel_for(std::ptrdiff_t count, const std::function<void(std::ptrdiff_t)>& body) {
#ifdef CURVLAB_HAVE_OPENMP
  const int threads = thread_count();
  if (threads > 1 && count > 1) {
    std::exception_ptr failure;
    std::mutex guard;
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      try {
        body(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(guard);
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
    return;
  }
#endif
  for (std::ptrdiff_t i = 0; i < count; ++i) body(i);
}

}  // namespace curvlab
