#pragma once

#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ptnet {

// Fixed-size pool running statically chunked index ranges. Results are
// independent of the worker count as long as tasks write disjoint slots.
class WorkerPool {
 public:
  explicit WorkerPool(int workers) : workers_(workers < 1 ? 1 : workers) {
    for (int w = 1; w < workers_; ++w)
      threads_.emplace_back([this, w] { run(w); });
  }

  ~WorkerPool() {
    {
      std::unique_lock<std::mutex> lk(mu_);
      stop_ = true;
      generation_++;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  int workers() const { return workers_; }

  /// Calls fn(i) for i in [0, n), split into one contiguous chunk per worker.
  void parallel_for(size_t n, const std::function<void(size_t)>& fn) {
    if (workers_ == 1 || n < 2) {
      for (size_t i = 0; i < n; ++i) fn(i);
      return;
    }
    {
      std::unique_lock<std::mutex> lk(mu_);
      job_ = &fn;
      job_n_ = n;
      pending_ = workers_ - 1;
      generation_++;
    }
    cv_.notify_all();
    run_chunk(0, n, fn);
    std::unique_lock<std::mutex> lk(mu_);
    done_cv_.wait(lk, [this] { return pending_ == 0; });
    job_ = nullptr;
  }

 private:
  void run_chunk(int w, size_t n, const std::function<void(size_t)>& fn) {
    size_t per = (n + workers_ - 1) / workers_;
    size_t lo = per * w;
    size_t hi = std::min(n, lo + per);
    for (size_t i = lo; i < hi; ++i) fn(i);
  }

  void run(int w) {
    uint64_t seen = 0;
    while (true) {
      const std::function<void(size_t)>* job = nullptr;
      size_t n = 0;
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [&] { return generation_ != seen; });
        seen = generation_;
        if (stop_) return;
        job = job_;
        n = job_n_;
      }
      if (job) run_chunk(w, n, *job);
      {
        std::unique_lock<std::mutex> lk(mu_);
        if (--pending_ == 0) done_cv_.notify_one();
      }
    }
  }

  int workers_;
  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_, done_cv_;
  const std::function<void(size_t)>* job_ = nullptr;
  size_t job_n_ = 0;
  int pending_ = 0;
  uint64_t generation_ = 0;
  bool stop_ = false;
};

}  // namespace ptnet
