// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace srnn {

/// Fixed-size pool for fork-join loops. parallel_for splits [0, count) into
/// one contiguous chunk per worker; the calling thread runs chunk 0. Callers
/// write results into per-index slots and reduce them afterwards in index
/// order, so results never depend on the worker count.
class ThreadPool {
 public:
  explicit ThreadPool(std::size_t workers);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  std::size_t workers() const { return threads_.size() + 1; }

  /// Calls fn(begin, end) once per non-empty chunk. Blocks until all chunks
  /// finish; rethrows the exception of the lowest failing chunk.
  void parallel_chunks(std::size_t count, const std::function<void(std::size_t, std::size_t)>& fn);

  template <typename Fn>
  void parallel_for(std::size_t count, Fn&& fn) {
    parallel_chunks(count, [&fn](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }

 private:
  void worker_loop(std::size_t chunk);
  void run_chunk(std::size_t chunk);

  std::vector<std::thread> threads_;
  std::mutex call_mutex_;  // one job at a time
  std::mutex mutex_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  std::size_t generation_ = 0;
  std::size_t pending_ = 0;
  bool stopping_ = false;

  // Current job, valid while pending_ > 0.
  const std::function<void(std::size_t, std::size_t)>* job_ = nullptr;
  std::size_t job_count_ = 0;
  std::vector<std::exception_ptr> errors_;
};

/// Runs serially when pool is null.
template <typename Fn>
void parallel_for(ThreadPool* pool, std::size_t count, Fn&& fn) {
  if (pool == nullptr || pool->workers() == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  pool->parallel_for(count, std::forward<Fn>(fn));
}

}  // namespace srnn
