// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#include "symforge/threading.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace symforge {

namespace {

// One parallel_for invocation. Each block is claimed by exactly one thread,
// and counters are per-job, so stragglers from a finished job can never
// steal blocks from the next one.
struct Job {
  const std::function<void(int64_t, int64_t)>* fn = nullptr;
  int64_t grain = 1;
  int64_t n = 0;
  std::atomic<int64_t> next{0};
  std::atomic<int64_t> pending{0};

  void drain() {
    for (;;) {
      int64_t begin = next.fetch_add(1, std::memory_order_relaxed) * grain;
      if (begin >= n) return;
      int64_t end = std::min(n, begin + grain);
      (*fn)(begin, end);
      pending.fetch_sub(1, std::memory_order_acq_rel);
    }
  }
};

class Pool {
 public:
  explicit Pool(int workers) {
    for (int i = 0; i < workers - 1; ++i) {
      threads_.emplace_back([this] { worker_loop(); });
    }
  }

  ~Pool() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  void run(const std::shared_ptr<Job>& job) {
    {
      std::lock_guard<std::mutex> lk(mu_);
      current_ = job;
      ++job_id_;
    }
    cv_.notify_all();
    job->drain();
    while (job->pending.load(std::memory_order_acquire) > 0) {
      std::this_thread::yield();
    }
    std::lock_guard<std::mutex> lk(mu_);
    current_.reset();
  }

 private:
  void worker_loop() {
    uint64_t seen = 0;
    for (;;) {
      std::shared_ptr<Job> job;
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [&] { return stop_ || (job_id_ != seen && current_); });
        if (stop_) return;
        seen = job_id_;
        job = current_;
      }
      if (job) job->drain();
    }
  }

  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::thread> threads_;
  std::shared_ptr<Job> current_;
  bool stop_ = false;
  uint64_t job_id_ = 0;
};

}  // namespace

int worker_count() {
  static int count = [] {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("SYMFORGE_THREADS")) {
      int cap = std::atoi(env);
      if (cap >= 1 && cap < hw) hw = cap;
    }
    return hw;
  }();
  return count;
}

void parallel_for(int64_t n, int64_t grain,
                  const std::function<void(int64_t, int64_t)>& fn) {
  if (n <= 0) return;
  if (grain < 1) grain = 1;
  int64_t nblocks = (n + grain - 1) / grain;
  if (worker_count() == 1 || nblocks == 1) {
    for (int64_t b = 0; b < nblocks; ++b) {
      int64_t begin = b * grain;
      fn(begin, std::min(n, begin + grain));
    }
    return;
  }
  auto job = std::make_shared<Job>();
  job->fn = &fn;
  job->grain = grain;
  job->n = n;
  job->pending.store(nblocks, std::memory_order_relaxed);
  static Pool pool(worker_count());
  pool.run(job);
}

}  // namespace symforge
