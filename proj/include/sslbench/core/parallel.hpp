#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace sslbench {

// Process-wide worker count. Kernels split work by output row, so results are
// bit-identical for any worker count.
inline int& worker_count() {
    static int n = []() {
        const unsigned hc = std::thread::hardware_concurrency();
        return hc == 0 ? 1 : static_cast<int>(hc);
    }();
    return n;
}

inline void set_worker_count(int n) { worker_count() = n < 1 ? 1 : n; }

namespace detail {

class ThreadPool {
public:
    static ThreadPool& instance() {
        static ThreadPool pool;
        return pool;
    }

    // Runs fn(begin, end) over [0, n) split into contiguous chunks, one per
    // active worker. Blocks until all chunks finish.
    void run(std::int64_t n, int workers, const std::function<void(std::int64_t, std::int64_t)>& fn) {
        ensure_threads(workers - 1);
        const int lanes = std::min<std::int64_t>(workers, n) > 0
                              ? static_cast<int>(std::min<std::int64_t>(workers, n))
                              : 1;
        const std::int64_t chunk = (n + lanes - 1) / lanes;

        std::atomic<int> pending{0};
        {
            std::lock_guard<std::mutex> lock(mutex_);
            for (int lane = 1; lane < lanes; ++lane) {
                const std::int64_t b = lane * chunk;
                const std::int64_t e = std::min<std::int64_t>(n, b + chunk);
                if (b >= e) continue;
                pending.fetch_add(1, std::memory_order_relaxed);
                tasks_.emplace_back([&fn, b, e, &pending, this] {
                    fn(b, e);
                    if (pending.fetch_sub(1, std::memory_order_acq_rel) == 1) {
                        std::lock_guard<std::mutex> lk(mutex_);
                        done_cv_.notify_all();
                    }
                });
            }
            work_cv_.notify_all();
        }
        fn(0, std::min<std::int64_t>(n, chunk));
        std::unique_lock<std::mutex> lock(mutex_);
        done_cv_.wait(lock, [&] { return pending.load(std::memory_order_acquire) == 0; });
    }

private:
    ThreadPool() = default;
    ~ThreadPool() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            stop_ = true;
            work_cv_.notify_all();
        }
        for (auto& t : threads_) t.join();
    }

    void ensure_threads(int n) {
        std::lock_guard<std::mutex> lock(mutex_);
        while (static_cast<int>(threads_.size()) < n) {
            threads_.emplace_back([this] { worker_loop(); });
        }
    }

    void worker_loop() {
        for (;;) {
            std::function<void()> task;
            {
                std::unique_lock<std::mutex> lock(mutex_);
                work_cv_.wait(lock, [&] { return stop_ || !tasks_.empty(); });
                if (stop_ && tasks_.empty()) return;
                task = std::move(tasks_.back());
                tasks_.pop_back();
            }
            task();
        }
    }

    std::mutex mutex_;
    std::condition_variable work_cv_;
    std::condition_variable done_cv_;
    std::vector<std::function<void()>> tasks_;
    std::vector<std::thread> threads_;
    bool stop_ = false;
};

}  // namespace detail

// parallel_for(n, fn): fn(begin, end) over disjoint ranges covering [0, n).
// Falls through to a plain call when a single worker is active or the range
// is small.
template <typename Fn>
void parallel_for(std::int64_t n, Fn&& fn, std::int64_t grain = 1024) {
    if (n <= 0) return;
    const int workers = worker_count();
    if (workers <= 1 || n < grain * 2) {
        fn(std::int64_t{0}, n);
        return;
    }
    detail::ThreadPool::instance().run(n, workers, std::function<void(std::int64_t, std::int64_t)>(fn));
}

}  // namespace sslbench
