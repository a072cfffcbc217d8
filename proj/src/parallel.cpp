#include "geopath/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace geopath {

namespace {

// Persistent pool: workers claim chunk indices from a shared counter, the
// calling thread participates too. Scheduling order is irrelevant to results
// because every chunk writes only to its own slot.
class Pool {
public:
    explicit Pool(int workers) {
        for (int i = 0; i < workers; ++i) {
            threads_.emplace_back([this] { worker_loop(); });
        }
    }

    ~Pool() {
        {
            std::lock_guard<std::mutex> lk(m_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
    }

    void run(std::size_t n_chunks, const std::function<void(std::size_t)>& job) {
        {
            std::lock_guard<std::mutex> lk(m_);
            job_ = &job;
            n_chunks_ = n_chunks;
            next_ = 0;
            in_flight_ = 0;
            error_ = nullptr;
            ++generation_;
        }
        cv_.notify_all();
        drain();
        std::unique_lock<std::mutex> lk(m_);
        done_cv_.wait(lk, [this] { return next_ >= n_chunks_ && in_flight_ == 0; });
        job_ = nullptr;
        if (error_) std::rethrow_exception(error_);
    }

private:
    void worker_loop() {
        std::uint64_t seen = 0;
        for (;;) {
            {
                std::unique_lock<std::mutex> lk(m_);
                cv_.wait(lk, [&] { return stop_ || (generation_ != seen && next_ < n_chunks_); });
                if (stop_) return;
                seen = generation_;
            }
            drain();
        }
    }

    void drain() {
        for (;;) {
            std::size_t idx = 0;
            {
                std::lock_guard<std::mutex> lk(m_);
                if (job_ == nullptr || next_ >= n_chunks_) return;
                idx = next_++;
                ++in_flight_;
            }
            try {
                (*job_)(idx);
            } catch (...) {
                std::lock_guard<std::mutex> lk(m_);
                if (!error_) error_ = std::current_exception();
            }
            {
                std::lock_guard<std::mutex> lk(m_);
                --in_flight_;
                if (next_ >= n_chunks_ && in_flight_ == 0) done_cv_.notify_all();
            }
        }
    }

    std::mutex m_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    std::vector<std::thread> threads_;
    const std::function<void(std::size_t)>* job_ = nullptr;
    std::size_t n_chunks_ = 0;
    std::size_t next_ = 0;
    std::size_t in_flight_ = 0;
    std::uint64_t generation_ = 0;
    std::exception_ptr error_;
    bool stop_ = false;
};

std::mutex g_pool_mutex;
std::unique_ptr<Pool> g_pool;
int g_pool_workers = 0;
std::atomic<int> g_threads{1};

}  // namespace

void set_thread_count(int n) {
    if (n < 1) n = 1;
    g_threads.store(n);
}

int thread_count() { return g_threads.load(); }

void parallel_chunks(std::size_t total, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (total == 0) return;
    if (chunk_size == 0) chunk_size = 1;
    const std::size_t n_chunks = chunk_count(total, chunk_size);
    const int threads = thread_count();

    auto run_chunk = [&](std::size_t idx) {
        const std::size_t begin = idx * chunk_size;
        const std::size_t end = std::min(total, begin + chunk_size);
        fn(idx, begin, end);
    };

    if (threads <= 1 || n_chunks <= 1) {
        for (std::size_t i = 0; i < n_chunks; ++i) run_chunk(i);
        return;
    }

    std::lock_guard<std::mutex> lk(g_pool_mutex);
    const int workers = threads - 1;  // caller participates
    if (!g_pool || g_pool_workers != workers) {
        g_pool.reset();
        g_pool = std::make_unique<Pool>(workers);
        g_pool_workers = workers;
    }
    std::function<void(std::size_t)> job = run_chunk;
    g_pool->run(n_chunks, job);
}

}  // namespace geopath
