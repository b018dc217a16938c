// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#include "cosect/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace cosect {

int worker_count() {
    static const int n = [] {
        int hw = static_cast<int>(std::thread::hardware_concurrency());
        if (hw <= 0) hw = 1;
        if (const char* env = std::getenv("COSECT_THREADS")) {
            int cap = std::atoi(env);
            if (cap > 0) hw = std::min(hw, cap);
        }
        return hw;
    }();
    return n;
}

namespace {

thread_local bool inside_parallel = false;
thread_local bool inside_parallel_worker = false;

// Persistent pool: grid passes are issued thousands of times per solve, so
// thread startup cost must not sit on that path. Jobs are fixed partitions
// of an index range; partitioning depends only on the range and worker
// count, never on timing.
class Pool {
public:
    Pool() : workers_(std::max(0, worker_count() - 1)) {
        threads_.reserve(size_t(workers_));
        for (int w = 0; w < workers_; ++w)
            threads_.emplace_back([this, w] { worker_loop(w); });
    }

    ~Pool() {
        {
            std::unique_lock<std::mutex> lock(mutex_);
            stop_ = true;
        }
        wake_.notify_all();
        for (auto& t : threads_) t.join();
    }

    void run(int64_t begin, int64_t end, const std::function<void(int64_t, int64_t)>& body) {
        const int64_t count = end - begin;
        const int parts = int(std::min<int64_t>(workers_ + 1, count));
        if (parts <= 1) {
            body(begin, end);
            return;
        }
        // One job at a time; concurrent callers (e.g. parallel pipeline
        // variants) queue up here.
        std::lock_guard<std::mutex> run_lock(run_mutex_);
        const int64_t chunk = (count + parts - 1) / parts;
        {
            std::unique_lock<std::mutex> lock(mutex_);
            job_body_ = &body;
            job_begin_ = begin;
            job_end_ = end;
            job_chunk_ = chunk;
            job_parts_ = parts;
            pending_ = workers_;  // every worker reports in, working or not
            ++generation_;
        }
        wake_.notify_all();

        // The caller runs the first share.
        body(begin, std::min(end, begin + chunk));

        std::unique_lock<std::mutex> lock(mutex_);
        done_.wait(lock, [this] { return pending_ == 0; });
        job_body_ = nullptr;
    }

private:
    void worker_loop(int index) {
        inside_parallel_worker = true;
        uint64_t seen = 0;
        for (;;) {
            const std::function<void(int64_t, int64_t)>* body = nullptr;
            int64_t lo = 0, hi = 0;
            {
                std::unique_lock<std::mutex> lock(mutex_);
                wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
                if (stop_) return;
                seen = generation_;
                const int part = index + 1;  // caller owns part 0
                if (part < job_parts_) {
                    body = job_body_;
                    lo = job_begin_ + int64_t(part) * job_chunk_;
                    hi = std::min(job_end_, lo + job_chunk_);
                } else {
                    // Not needed for this job.
                    if (--pending_ == 0) {
                        lock.unlock();
                        done_.notify_one();
                    }
                    continue;
                }
            }
            (*body)(lo, hi);
            {
                std::unique_lock<std::mutex> lock(mutex_);
                if (--pending_ == 0) {
                    lock.unlock();
                    done_.notify_one();
                }
            }
        }
    }

    int workers_;
    std::vector<std::thread> threads_;
    std::mutex run_mutex_;
    std::mutex mutex_;
    std::condition_variable wake_, done_;
    const std::function<void(int64_t, int64_t)>* job_body_ = nullptr;
    int64_t job_begin_ = 0, job_end_ = 0, job_chunk_ = 0;
    int job_parts_ = 0;
    int pending_ = 0;
    uint64_t generation_ = 0;
    bool stop_ = false;
};

Pool& pool() {
    static Pool p;
    return p;
}

}  // namespace

void parallel_chunks(int64_t begin, int64_t end,
                     const std::function<void(int64_t, int64_t)>& body) {
    const int64_t count = end - begin;
    if (count <= 0) return;
    if (inside_parallel || inside_parallel_worker || worker_count() <= 1 || count < 2) {
        body(begin, end);
        return;
    }
    inside_parallel = true;
    pool().run(begin, end, body);
    inside_parallel = false;
}

void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t)>& body) {
    parallel_chunks(begin, end, [&body](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) body(i);
    });
}

}  // namespace cosect
