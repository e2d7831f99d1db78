#include "hedb/enclave/task_pool.hpp"

namespace hedb {

TaskPool::TaskPool(Enclave& enclave, std::size_t batch_size, double window_micros, std::size_t capacity,
                   std::size_t worker_count)
    : enclave_(enclave), batch_(batch_size), window_micros_(window_micros), capacity_(capacity) {
  if (batch_ == 0 || worker_count == 0) throw Error(ErrorCode::kInvalidArgument, "pool needs a batch size and workers");
  if (capacity_ < batch_) throw Error(ErrorCode::kInvalidArgument, "pool capacity must hold one batch");
  for (std::size_t i = 0; i < worker_count; ++i) workers_.emplace_back([this] { worker_loop(); });
  if (window_micros_ > 0) window_thread_ = std::thread([this] { window_loop(); });
}

TaskPool::TaskPool(Enclave& enclave)
    : TaskPool(enclave, enclave.config().pool_batch_size, enclave.config().pool_window_micros,
               enclave.config().effective_pool_capacity(), enclave.config().worker_count) {}

TaskPool::~TaskPool() { stop(); }

std::future<BridgeResult> TaskPool::submit(BridgeTask task) {
  {
    std::lock_guard lock(stats_mu_);
    ++stats_.submitted;
  }
  std::unique_lock lock(intake_mu_);
  if (in_pool_.load() >= capacity_) {
    lock.unlock();
    // Saturated: degenerate to an ordinary ecall.
    std::promise<BridgeResult> p;
    auto f = p.get_future();
    try {
      BridgeResult r = enclave_.execute(task, true);
      r.direct = true;
      {
        std::lock_guard s(stats_mu_);
        ++stats_.direct_calls;
        ++stats_.completed;
        stats_.task_micros += r.micros;
      }
      p.set_value(std::move(r));
    } catch (...) {
      {
        std::lock_guard s(stats_mu_);
        ++stats_.direct_calls;
        ++stats_.completed;
      }
      p.set_exception(std::current_exception());
    }
    return f;
  }
  in_pool_.fetch_add(1);
  Pending pending{std::move(task), {}, std::chrono::steady_clock::now()};
  auto f = pending.done.get_future();
  intake_.push_back(std::move(pending));
  if (intake_.size() >= batch_) transfer_locked(batch_);
  return f;
}

void TaskPool::transfer_locked(std::size_t count) {
  count = std::min(count, intake_.size());
  if (count == 0) return;
  {
    std::lock_guard lock(processing_mu_);
    for (std::size_t i = 0; i < count; ++i) {
      processing_.push_back(std::move(intake_.front()));
      intake_.pop_front();
    }
  }
  enclave_.note_entry();
  {
    std::lock_guard s(stats_mu_);
    ++stats_.batches;
    stats_.entry_micros += enclave_.config().ecall_fixed_cost_micros * enclave_.memory().paging_multiplier();
  }
  processing_cv_.notify_all();
}

void TaskPool::worker_loop() {
  while (true) {
    Pending p;
    {
      std::unique_lock lock(processing_mu_);
      processing_cv_.wait(lock, [&] { return (stopping_ && processing_.empty()) || (!paused_ && !processing_.empty()); });
      if (processing_.empty()) return;
      p = std::move(processing_.front());
      processing_.pop_front();
    }
    try {
      BridgeResult r = enclave_.execute(p.task, false);
      {
        std::lock_guard s(stats_mu_);
        ++stats_.completed;
        stats_.task_micros += r.micros;
      }
      p.done.set_value(std::move(r));
    } catch (...) {
      {
        std::lock_guard s(stats_mu_);
        ++stats_.completed;
      }
      p.done.set_exception(std::current_exception());
    }
    if (in_pool_.fetch_sub(1) == 1) {
      std::lock_guard lock(idle_mu_);
      idle_cv_.notify_all();
    }
  }
}

void TaskPool::window_loop() {
  const auto window = std::chrono::microseconds(static_cast<std::int64_t>(window_micros_));
  std::unique_lock lock(intake_mu_);
  while (!stopped_) {
    window_cv_.wait_for(lock, window / 2 + std::chrono::microseconds(1));
    if (stopped_) break;
    auto now = std::chrono::steady_clock::now();
    while (!intake_.empty() && now - intake_.front().enqueued >= window) transfer_locked(batch_);
  }
}

void TaskPool::drain() {
  {
    std::lock_guard lock(intake_mu_);
    while (!intake_.empty()) transfer_locked(batch_);
  }
  std::unique_lock lock(idle_mu_);
  idle_cv_.wait(lock, [&] { return in_pool_.load() == 0; });
}

void TaskPool::stop() {
  {
    std::lock_guard lock(intake_mu_);
    if (stopped_) return;
  }
  resume_workers();
  drain();
  {
    std::lock_guard lock(intake_mu_);
    stopped_ = true;
  }
  window_cv_.notify_all();
  if (window_thread_.joinable()) window_thread_.join();
  {
    std::lock_guard lock(processing_mu_);
    stopping_ = true;
  }
  processing_cv_.notify_all();
  for (auto& t : workers_) t.join();
  workers_.clear();
}

void TaskPool::pause_workers() {
  std::lock_guard lock(processing_mu_);
  paused_ = true;
}

void TaskPool::resume_workers() {
  {
    std::lock_guard lock(processing_mu_);
    paused_ = false;
  }
  processing_cv_.notify_all();
}

TaskPool::Stats TaskPool::stats() const {
  std::lock_guard lock(stats_mu_);
  return stats_;
}

}  // namespace hedb
