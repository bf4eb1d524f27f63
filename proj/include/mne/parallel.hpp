#ifndef MNE_PARALLEL_HPP
#define MNE_PARALLEL_HPP

#include <atomic>
#include <cstddef>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mne {

// Every batch kernel in the library comes in two flavours selected at the
// call site: a plain serial loop (the reference) and an OpenMP loop over
// independent items. Both write results into preallocated per-item slots and
// reduce in index order afterwards, so the outputs are identical bit for bit
// regardless of thread count.
enum class Exec { serial, parallel };

void set_thread_count(int n);  // n <= 0 restores the OpenMP default
int max_threads();

// Runs fn(i) for i in [0, n). Iterations must be independent. The first
// exception thrown by any iteration is rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t n, Exec exec, Fn&& fn) {
#ifdef _OPENMP
  if (exec == Exec::parallel && n > 1) {
    std::atomic<bool> failed{false};
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      if (failed.load(std::memory_order_relaxed)) continue;
      try {
        fn(static_cast<std::size_t>(i));
      } catch (...) {
#pragma omp critical(mne_parallel_for_err)
        {
          if (!failed.exchange(true)) err = std::current_exception();
        }
      }
    }
    if (err) std::rethrow_exception(err);
    return;
  }
#endif
  (void)exec;
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace mne

#endif  // MNE_PARALLEL_HPP
