#include "quadcone/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qc {

namespace {
std::atomic<int> g_threads{1};
}

void set_threads(int n) {
    if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    g_threads = n;
}

int threads() { return g_threads.load(); }

void parallel_blocks(std::int64_t n, std::int64_t block,
                     const std::function<void(std::int64_t, std::int64_t, std::int64_t)>& body) {
    if (n <= 0) return;
    block = std::max<std::int64_t>(1, block);
    const std::int64_t nblocks = (n + block - 1) / block;
    const int workers = static_cast<int>(std::min<std::int64_t>(threads(), nblocks));
    auto run = [&](std::int64_t b) { body(b, b * block, std::min(n, (b + 1) * block)); };
    if (workers <= 1) {
        for (std::int64_t b = 0; b < nblocks; ++b) run(b);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::int64_t b = next.fetch_add(1);
                if (b >= nblocks) return;
                try {
                    run(b);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!err) err = std::current_exception();
                    next = nblocks;
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body) {
    parallel_blocks(n, 64, [&](std::int64_t, std::int64_t b, std::int64_t e) {
        for (std::int64_t i = b; i < e; ++i) body(i);
    });
}

}  // namespace qc
