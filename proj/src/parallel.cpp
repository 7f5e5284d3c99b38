#include "efs/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace efs {

namespace {
#ifdef _OPENMP
const int kDefaultThreads = omp_get_max_threads();
#endif
}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_thread_cap(int threads) {
#ifdef _OPENMP
  omp_set_num_threads(threads > 0 ? threads : kDefaultThreads);
#else
  (void)threads;
#endif
}

int apply_thread_env() {
  const char* raw = std::getenv("EFS_THREADS");
  if (raw == nullptr || *raw == '\0') return 0;
  int cap = 0;
  try {
    cap = std::stoi(raw);
  } catch (const std::exception&) {
    cap = 0;
  }
  if (cap < 0) cap = 0;
  set_thread_cap(cap);
  return cap;
}

}  // namespace efs
