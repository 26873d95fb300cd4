#include "absde/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace absde {

namespace {
std::atomic<std::size_t> g_cap{0};

std::size_t env_cap() {
    const char* v = std::getenv("ABSDE_LAB_THREADS");
    if (v == nullptr || *v == '\0') return 0;
    try {
        long n = std::stol(v);
        return n > 0 ? static_cast<std::size_t>(n) : 0;
    } catch (...) {
        return 0;
    }
}
}  // namespace

std::size_t worker_count() {
    std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    std::size_t cap = g_cap.load();
    if (cap == 0) cap = env_cap();
    return cap == 0 ? hw : std::min(hw, cap);
}

void set_worker_cap(std::size_t cap) { g_cap.store(cap); }

std::size_t chunk_count(std::size_t n) { return (n + kChunk - 1) / kChunk; }

namespace detail {

void run_chunks(std::size_t n, void (*fn)(void*, std::size_t, std::size_t, std::size_t), void* ctx) {
    const std::size_t chunks = chunk_count(n);
    const std::size_t workers = std::min(worker_count(), chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) fn(ctx, c, c * kChunk, std::min(n, (c + 1) * kChunk));
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (;;) {
            std::size_t c = next.fetch_add(1);
            if (c >= chunks) return;
            try {
                fn(ctx, c, c * kChunk, std::min(n, (c + 1) * kChunk));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace detail
}  // namespace absde
