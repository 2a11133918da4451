#include "genreg/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace genreg {

int max_threads() {
    static const int cap = [] {
        int n = static_cast<int>(std::thread::hardware_concurrency());
        if (n < 1) n = 1;
        if (const char* env = std::getenv("GENREG_THREADS")) {
            try {
                const int req = std::stoi(env);
                if (req >= 1) n = req;
            } catch (const std::exception&) {
                // unparsable value: keep the hardware default
            }
        }
        return n;
    }();
    return cap;
}

namespace {

// Minimal persistent pool: jobs are (function, trip count) pairs and workers
// claim indices from a shared atomic counter.  One job runs at a time.
class Pool {
public:
    explicit Pool(int workers) {
        for (int t = 0; t < workers; ++t)
            threads_.emplace_back([this] { worker_loop(); });
    }

    Pool(const Pool&) = delete;
    Pool& operator=(const Pool&) = delete;

    ~Pool() {
        {
            std::lock_guard lock(m_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
    }

    void run(int n, const std::function<void(int)>& fn) {
        std::unique_lock lock(m_);
        fn_ = &fn;
        next_.store(0, std::memory_order_relaxed);
        limit_ = n;
        pending_ = n;
        ++generation_;
        cv_.notify_all();
        done_cv_.wait(lock, [this] { return pending_ == 0; });
        fn_ = nullptr;
    }

private:
    void worker_loop() {
        std::uint64_t seen = 0;
        for (;;) {
            {
                std::unique_lock lock(m_);
                cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
                if (stop_) return;
                seen = generation_;
            }
            for (;;) {
                const int i = next_.fetch_add(1, std::memory_order_relaxed);
                if (i >= limit_) break;
                (*fn_)(i);
                std::lock_guard lock(m_);
                if (--pending_ == 0) done_cv_.notify_all();
            }
        }
    }

    std::vector<std::thread> threads_;
    std::mutex m_;
    std::condition_variable cv_, done_cv_;
    const std::function<void(int)>* fn_ = nullptr;
    std::atomic<int> next_{0};
    int limit_ = 0;
    int pending_ = 0;
    std::uint64_t generation_ = 0;
    bool stop_ = false;
};

}  // namespace

void parallel_for(int n, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    const int cap = max_threads();
    if (cap == 1 || n == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    static Pool pool(max_threads());
    pool.run(n, fn);
}

}  // namespace genreg
