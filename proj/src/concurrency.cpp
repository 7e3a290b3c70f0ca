#include "mpmbr/concurrency.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mpmbr {

void parallel_for(size_t n, int max_workers,
                  const std::function<void(size_t)>& fn) {
  if (n == 0) return;
  size_t workers = max_workers < 1 ? 1 : static_cast<size_t>(max_workers);
  workers = std::min(workers, n);

  std::exception_ptr first_error;
  size_t first_error_index = n;

  if (workers == 1) {
    for (size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        if (first_error_index == n) {
          first_error_index = i;
          first_error = std::current_exception();
        }
      }
    }
    if (first_error) std::rethrow_exception(first_error);
    return;
  }

  std::atomic<size_t> next{0};
  std::mutex error_mutex;
  auto body = [&]() {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (i < first_error_index) {
          first_error_index = i;
          first_error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mpmbr
