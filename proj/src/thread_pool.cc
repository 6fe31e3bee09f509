// SPDX-License-Identifier: Apache-2.0
#include "srnn/thread_pool.hpp"

#include <algorithm>
#include <stdexcept>

namespace srnn {

ThreadPool::ThreadPool(std::size_t workers) {
  if (workers == 0) throw std::invalid_argument("ThreadPool: workers must be >= 1");
  errors_.resize(workers);
  threads_.reserve(workers - 1);
  for (std::size_t chunk = 1; chunk < workers; ++chunk) {
    threads_.emplace_back([this, chunk] { worker_loop(chunk); });
  }
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  start_cv_.notify_all();
  for (auto& t : threads_) t.join();
}

void ThreadPool::run_chunk(std::size_t chunk) {
  const std::size_t n = workers();
  const std::size_t begin = job_count_ * chunk / n;
  const std::size_t end = job_count_ * (chunk + 1) / n;
  if (begin == end) return;
  try {
    (*job_)(begin, end);
  } catch (...) {
    errors_[chunk] = std::current_exception();
  }
}

void ThreadPool::worker_loop(std::size_t chunk) {
  std::size_t seen = 0;
  for (;;) {
    {
      std::unique_lock lock(mutex_);
      start_cv_.wait(lock, [&] { return stopping_ || generation_ != seen; });
      if (stopping_) return;
      seen = generation_;
    }
    run_chunk(chunk);
    {
      std::lock_guard lock(mutex_);
      if (--pending_ == 0) done_cv_.notify_one();
    }
  }
}

void ThreadPool::parallel_chunks(std::size_t count,
                                 const std::function<void(std::size_t, std::size_t)>& fn) {
  if (count == 0) return;
  if (threads_.empty()) {
    fn(0, count);
    return;
  }
  std::lock_guard call(call_mutex_);
  {
    std::lock_guard lock(mutex_);
    job_ = &fn;
    job_count_ = count;
    pending_ = threads_.size();
    std::fill(errors_.begin(), errors_.end(), nullptr);
    ++generation_;
  }
  start_cv_.notify_all();
  run_chunk(0);
  {
    std::unique_lock lock(mutex_);
    done_cv_.wait(lock, [&] { return pending_ == 0; });
    job_ = nullptr;
  }
  for (const auto& e : errors_) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace srnn
