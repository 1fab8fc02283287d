#pragma once

#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace dtb {

// Fixed set of persistent threads. run() hands the same job to the first n
// threads and blocks until every one of them has returned.
class WorkerPool {
 public:
  explicit WorkerPool(unsigned threads) {
    if (threads == 0) threads = 1;
    threads_.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) threads_.emplace_back([this, i] { loop(i); });
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool() {
    {
      std::lock_guard lk(mu_);
      stop_ = true;
      ++generation_;
    }
    wake_.notify_all();
    for (auto& t : threads_) t.join();
  }

  unsigned size() const noexcept { return static_cast<unsigned>(threads_.size()); }

  // Not reentrant; one caller at a time. The first exception thrown by the
  // job is rethrown here after all participants finish.
  void run(unsigned n, const std::function<void(unsigned)>& job) {
    if (n == 0) return;
    if (n > size()) n = size();
    std::unique_lock lk(mu_);
    job_ = &job;
    active_ = n;
    remaining_ = n;
    error_ = nullptr;
    ++generation_;
    wake_.notify_all();
    done_.wait(lk, [this] { return remaining_ == 0; });
    job_ = nullptr;
    if (error_) std::rethrow_exception(error_);
  }

 private:
  void loop(unsigned index) {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(unsigned)>* job = nullptr;
      {
        std::unique_lock lk(mu_);
        wake_.wait(lk, [&] { return generation_ != seen; });
        seen = generation_;
        if (stop_) return;
        if (index >= active_) continue;
        job = job_;
      }
      std::exception_ptr err;
      try {
        (*job)(index);
      } catch (...) {
        err = std::current_exception();
      }
      std::lock_guard lk(mu_);
      if (err && !error_) error_ = err;
      if (--remaining_ == 0) done_.notify_one();
    }
  }

  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(unsigned)>* job_ = nullptr;
  unsigned active_ = 0;
  unsigned remaining_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

}  // namespace dtb
