#pragma once

#include <barrier>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace vpmg {

/// Fixed pool of worker threads executing contiguous range partitions.
/// run() blocks until every worker finished its slice, which doubles as
/// the synchronization point between smoother colors.
class WorkerPool {
public:
  explicit WorkerPool(int n_threads)
      : n_threads_(n_threads < 1 ? 1 : n_threads),
        start_(n_threads_ + 1),
        done_(n_threads_ + 1) {
    workers_.reserve(n_threads_);
    for (int t = 0; t < n_threads_; ++t) {
      workers_.emplace_back([this, t] {
        while (true) {
          start_.arrive_and_wait();
          if (stop_)
            return;
          const std::size_t chunk_begin = (task_size_ * t) / n_threads_;
          const std::size_t chunk_end = (task_size_ * (t + 1)) / n_threads_;
          if (chunk_begin < chunk_end)
            task_(chunk_begin, chunk_end);
          done_.arrive_and_wait();
        }
      });
    }
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool() {
    stop_ = true;
    start_.arrive_and_wait();
    for (std::thread& w : workers_)
      w.join();
  }

  int thread_count() const { return n_threads_; }

  /// Partitions [0, n) into contiguous per-thread slices and runs
  /// f(begin, end) on each. f must only perform writes that are disjoint
  /// across slices.
  void run(std::size_t n, const std::function<void(std::size_t, std::size_t)>& f) {
    if (n == 0)
      return;
    task_ = f;
    task_size_ = n;
    start_.arrive_and_wait();
    done_.arrive_and_wait();
  }

private:
  int n_threads_;
  std::barrier<> start_;
  std::barrier<> done_;
  std::vector<std::thread> workers_;
  std::function<void(std::size_t, std::size_t)> task_;
  std::size_t task_size_ = 0;
  bool stop_ = false;
};

} // namespace vpmg
