#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <future>
#include <mutex>
#include <thread>
#include <vector>

#include "hedb/enclave/enclave.hpp"

namespace hedb {

// Two-stage ecall pool. Producers fill an untrusted intake queue; a full
// batch (or an expired window) is moved wholesale into the trusted
// processing queue for one enclave entry. The two queues use separate
// mutexes. When the pool is saturated a submission falls back to a direct,
// individually charged ecall.
class TaskPool {
 public:
  struct Stats {
    std::uint64_t submitted = 0;
    std::uint64_t completed = 0;
    std::uint64_t batches = 0;       // transfers, one enclave entry each
    std::uint64_t direct_calls = 0;  // degenerate path
    double entry_micros = 0.0;       // fixed entry cost charged for batches
    double task_micros = 0.0;        // per-task virtual cost excluding batch entries
  };

  TaskPool(Enclave& enclave, std::size_t batch_size, double window_micros, std::size_t capacity,
           std::size_t worker_count);
  explicit TaskPool(Enclave& enclave);
  ~TaskPool();
  TaskPool(const TaskPool&) = delete;
  TaskPool& operator=(const TaskPool&) = delete;

  std::future<BridgeResult> submit(BridgeTask task);
  // Flushes any partial batch and blocks until every accepted task finished.
  void drain();
  // Drains, then joins all threads. Idempotent.
  void stop();

  // Test hooks: hold workers so the pool can be filled deterministically.
  void pause_workers();
  void resume_workers();

  Stats stats() const;

 private:
  struct Pending {
    BridgeTask task;
    std::promise<BridgeResult> done;
    std::chrono::steady_clock::time_point enqueued;
  };

  void transfer_locked(std::size_t count);  // caller holds intake_mu_
  void worker_loop();
  void window_loop();

  Enclave& enclave_;
  std::size_t batch_;
  double window_micros_;
  std::size_t capacity_;

  std::mutex intake_mu_;  // untrusted side
  std::deque<Pending> intake_;

  std::mutex processing_mu_;  // trusted side
  std::condition_variable processing_cv_;
  std::deque<Pending> processing_;
  bool paused_ = false;
  bool stopping_ = false;

  std::mutex idle_mu_;
  std::condition_variable idle_cv_;
  std::atomic<std::uint64_t> in_pool_{0};  // accepted, not yet completed

  mutable std::mutex stats_mu_;
  Stats stats_;

  std::condition_variable window_cv_;
  std::vector<std::thread> workers_;
  std::thread window_thread_;
  bool stopped_ = false;
};

}  // namespace hedb
